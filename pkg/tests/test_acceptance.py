"""Acceptance gate: one test per criterion, each at its stated tolerance.

Run on its own with ``pytest tests/test_acceptance.py``; the terminal summary
lists a PASS/FAIL line per criterion.
"""

import json
import time
from dataclasses import replace

import numpy as np
import pytest

from oracles import oracle_state, random_circuit, random_pd_kernel, svm_dual_bruteforce
from qkemotion import data
from qkemotion.cli import main
from qkemotion.experiment import ExperimentConfig, fold_labels, prepare_fold
from qkemotion.featuremap import EncodingConfig
from qkemotion.kernel import gram_matrix, kernel_value
from qkemotion.metrics import ConfusionCounts, compute_metrics
from qkemotion.statevector import run_circuit
from qkemotion.svm import SvmConfig, dual_objective, kkt_violation, predict, train

criterion = pytest.mark.criterion


@criterion(1, "statevector matches unitary oracle on 200 circuits (1e-9, < 5 s)")
def test_statevector_oracle():
    rng = np.random.default_rng(2024)
    circuits = [random_circuit(rng, max_qubits=3, max_gates=20) for _ in range(200)]
    start = time.perf_counter()
    worst = max(np.max(np.abs(run_circuit(c) - oracle_state(c)), initial=0.0) for c in circuits)
    elapsed = time.perf_counter() - start
    assert worst <= 1e-9
    assert elapsed < 5.0


@criterion(2, "self-Gram validity on 50 random datasets (< 30 s)")
def test_kernel_validity():
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    for _ in range(50):
        n = int(rng.integers(1, 51))
        X = rng.uniform(-2 * np.pi, 2 * np.pi, size=(n, 8))
        K = gram_matrix(X).values
        assert np.max(np.abs(K - K.T)) <= 1e-9
        assert np.max(np.abs(np.diag(K) - 1.0)) <= 1e-9
        assert K.min() >= 0.0 and K.max() <= 1.0
        assert np.linalg.eigvalsh(K)[0] >= -1e-7
    assert time.perf_counter() - start < 30.0


@criterion(3, "analytic single-qubit kernel values (1e-10)")
def test_analytic_kernel_values():
    cfg = EncodingConfig(n_qubits=1)
    x = np.array([0.37, -1.9])
    assert abs(kernel_value(x, x, cfg) - 1.0) <= 1e-10
    assert abs(kernel_value([np.pi, 0.0], [0.0, 0.0], cfg)) <= 1e-10
    assert abs(kernel_value([np.pi / 2, 0.0], [np.pi / 2, np.pi], cfg)) <= 1e-10


@criterion(4, "SMO matches brute-force dual on 100 instances; KKT at 1e-4")
def test_svm_oracle():
    rng = np.random.default_rng(99)
    for _ in range(100):
        n = int(rng.integers(2, 9))
        K = random_pd_kernel(rng, n)
        y = rng.choice([-1, 1], size=n)
        y[rng.choice(n, size=2, replace=False)] = [1, -1]
        C = float(10 ** rng.uniform(-1, 1.5))
        best, _ = svm_dual_bruteforce(K, y, C)
        model = train(K, y, SvmConfig(c=C, tolerance=1e-4))
        got = dual_objective(model.alphas, K, y)
        assert abs(got - best) <= 1e-4 * abs(best)
        assert kkt_violation(model, K) <= 1e-4


@criterion(5, "K=I, y=(+1,-1), C=10 gives alpha=(1,1), b=0 (1e-6)")
def test_analytic_svm_case():
    model = train(np.eye(2), [1, -1], SvmConfig(c=10))
    assert np.max(np.abs(model.alphas - 1.0)) <= 1e-6
    assert abs(model.bias) <= 1e-6


@pytest.fixture(scope="module")
def default_runs(tmp_path_factory):
    dirs = [tmp_path_factory.mktemp(f"default_run{k}") for k in range(2)]
    codes = [main(["run", "--out", str(d)]) for d in dirs]
    return codes, dirs


@pytest.mark.slow
@criterion(6, "two default runs give byte-identical reports")
def test_pipeline_determinism(default_runs):
    codes, dirs = default_runs
    assert codes == [0, 0]
    for name in ("report.json", "classical_table.txt", "quantum_table.txt"):
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes()


@criterion(7, "labeling sigma and z-score stats depend on training rows only")
def test_leakage_guard():
    cfg = ExperimentConfig()
    dataset = data.build_dataset(data.synthesize_cohort(cfg.n_participants, cfg.seed, cfg.profile))
    folds = data.make_folds(dataset.participant_ids, cfg.n_folds, cfg.seed)
    budgets = [cfg.classical_split, *cfg.quantum_budgets]
    rng = np.random.default_rng(5)
    for fold in folds:
        labeled = fold_labels(dataset, fold, cfg.label_polarity)
        clean = [prepare_fold(dataset, fold, a, b, cfg.seed, labeled=labeled) for a, b in budgets]

        test_rows = dataset.rows_for(fold.test_participants)
        perturbed = replace(dataset, features=dataset.features.copy(), intensities=dataset.intensities.copy())
        perturbed.features[test_rows] += rng.normal(0, 10, size=(test_rows.size, 8))
        perturbed.intensities[test_rows] = rng.normal(0, 5, size=(test_rows.size, 3))
        labeled2 = fold_labels(perturbed, fold, cfg.label_polarity)
        dirty = [prepare_fold(perturbed, fold, a, b, cfg.seed, labeled=labeled2) for a, b in budgets]

        assert labeled[0].tobytes() == labeled2[0].tobytes()
        for p, q in zip(clean, dirty):
            assert p.label_sigma.tobytes() == q.label_sigma.tobytes()
            assert p.stats.mean.tobytes() == q.stats.mean.tobytes()
            assert p.stats.std.tobytes() == q.stats.std.tobytes()
            assert np.array_equal(p.train_index, q.train_index)
            # the perturbation really reached the test side
            assert not np.array_equal(p.test_features, q.test_features)


@pytest.mark.slow
@criterion(8, "default tables: 6 models x 3 emotions x 4 metrics, budgets 640/160 and 1600/400, 5 folds")
def test_structural_reproduction(default_runs):
    _, dirs = default_runs
    report = json.loads((dirs[0] / "report.json").read_text())
    assert report["n_folds"] == 5
    assert report["classical"]["train"] + report["classical"]["test"] == 2000
    models = report["classical"]["models"]
    assert len(models) == 6
    for per in models.values():
        assert set(per) == {"Positive", "Negative", "Neutral"}
        for agg in per.values():
            assert set(agg["mean"]) == {"accuracy", "precision", "recall", "f1"}
            assert len(agg["folds"]) == 5
    budgets = report["quantum"]["budgets"]
    assert [(b["train"], b["test"]) for b in budgets] == [(640, 160), (1600, 400)]
    for b in budgets:
        assert set(b["emotions"]) == {"Positive", "Negative", "Neutral"}
        for agg in b["emotions"].values():
            assert set(agg["mean"]) == {"accuracy", "precision", "recall", "f1"}
            assert len(agg["folds"]) == 5
    table = (dirs[0] / "classical_table.txt").read_text()
    assert sum(line.count("|") == 5 for line in table.splitlines()) == 6 + 2


@criterion(9, "planted quantum decision function learned to >= 0.90 test accuracy")
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_planted_learnability(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-np.pi, np.pi, size=(2000, 8))
    support = rng.uniform(-np.pi, np.pi, size=(10, 8))
    weights = rng.normal(size=10)
    f = gram_matrix(X, support).values @ weights
    y = np.where(f >= np.median(f), 1, -1)
    Xtr, ytr, Xte, yte = X[:1600], y[:1600], X[1600:], y[1600:]
    g = gram_matrix(Xtr)
    model = train(g, ytr, SvmConfig(c=10.0))
    accuracy = np.mean(predict(model, gram_matrix(Xte, Xtr, kind="test-train")) == yte)
    assert accuracy >= 0.90


@criterion(10, "1600x1600 Gram in < 60 s; digest independent of jobs")
def test_gram_performance():
    X = np.random.default_rng(10).normal(size=(1600, 8))
    start = time.perf_counter()
    single = gram_matrix(X, jobs=1)
    assert time.perf_counter() - start < 60.0
    assert single.values.shape == (1600, 1600)
    assert gram_matrix(X, jobs=4).digest() == single.digest()


@criterion(11, "metrics worked example and F1 agreement on 1000 random counts")
def test_metrics():
    m = compute_metrics([1, 1, 1, 0] + [0] * 6, [1, 1, 0, 1] + [0] * 6)
    assert (m.counts.tp, m.counts.fp, m.counts.fn, m.counts.tn) == (2, 1, 1, 6)
    assert m.accuracy == 0.8 and m.precision == 2 / 3 and m.recall == 2 / 3
    assert abs(m.f1 - 2 / 3) <= 1e-15
    rng = np.random.default_rng(11)
    for tp, fp, fn, tn in rng.integers(0, 1000, size=(1000, 4)):
        got = ConfusionCounts(int(tp), int(fp), int(fn), int(tn)).metrics()["f1"]
        direct = 2 * tp / (2 * tp + fp + fn) if tp else 0.0
        assert abs(got - direct) <= 1e-12
