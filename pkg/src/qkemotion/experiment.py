"""End-to-end experiment: cohort -> features -> folds -> models -> reports."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines as bl
from . import data, kernel, metrics, svm
from .errors import ConfigurationError, QKEmotionError, TrainingError
from .featuremap import EncodingConfig

logger = logging.getLogger(__name__)

STREAM_BASELINES = 4
OMITTED_MODELS = ("Gradient Boosting", "Multi Layer Perceptron")


def derive_seed(*keys: int) -> int:
    """Deterministic 32-bit seed for a named substream of the master seed."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 7
    n_participants: int = 39
    n_folds: int = 5
    window: int = data.WINDOW
    profile: data.GeneratorProfile = field(default_factory=data.GeneratorProfile)
    encoding: EncodingConfig = field(default_factory=EncodingConfig)
    svm: svm.SvmConfig = field(default_factory=svm.SvmConfig)
    baselines: tuple = ()
    classical_budget: int = 2000
    quantum_budgets: tuple = ((640, 160), (1600, 400))
    test_fraction: float = 0.2
    label_polarity: str = "inside-is-1"
    dump_kernels: bool = True
    output_dir: str = "qkemotion-run"

    def __post_init__(self):
        object.__setattr__(self, "quantum_budgets", tuple(tuple(int(v) for v in b) for b in self.quantum_budgets))
        object.__setattr__(self, "baselines", tuple(self.baselines))
        if self.label_polarity not in data.POLARITIES:
            raise ConfigurationError(f"label_polarity must be one of {data.POLARITIES}")
        if not 0 < self.test_fraction < 1:
            raise ConfigurationError("test_fraction must lie in (0, 1)")
        if self.classical_budget < 10:
            raise ConfigurationError("classical_budget is too small")
        for b in self.quantum_budgets:
            if len(b) != 2 or min(b) < 1:
                raise ConfigurationError(f"quantum budget must be (train, test) counts, got {b}")

    @property
    def classical_split(self) -> tuple[int, int]:
        n_test = int(round(self.classical_budget * self.test_fraction))
        return self.classical_budget - n_test, n_test

    def baseline_specs(self) -> list[bl.BaselineSpec]:
        if self.baselines:
            return list(self.baselines)
        return bl.default_specs(seed=derive_seed(self.seed, STREAM_BASELINES))

    def check_dimensions(self) -> None:
        width = len(data.FEATURE_NAMES)
        if width != self.encoding.n_features:
            raise ConfigurationError(
                f"feature vectors have {width} values but the encoder takes 2 * n_qubits = "
                f"2 * {self.encoding.n_qubits} = {self.encoding.n_features} ({width} != 2*{self.encoding.n_qubits})"
            )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_participants": self.n_participants,
            "n_folds": self.n_folds,
            "window": self.window,
            "profile": self.profile.to_dict(),
            "encoding": self.encoding.to_dict(),
            "svm": {
                "c": self.svm.c,
                "tolerance": self.svm.tolerance,
                "max_passes": self.svm.max_passes,
                "kernel_kind": self.svm.kernel_kind,
                "gamma": self.svm.gamma,
            },
            "baselines": [s.to_dict() for s in self.baselines],
            "classical_budget": self.classical_budget,
            "quantum_budgets": [list(b) for b in self.quantum_budgets],
            "test_fraction": self.test_fraction,
            "label_polarity": self.label_polarity,
            "dump_kernels": self.dump_kernels,
            "output_dir": self.output_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - set(cls().to_dict())
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        try:
            if "profile" in d:
                d["profile"] = data.GeneratorProfile(**{**data.GeneratorProfile().to_dict(), **d["profile"]})
            if "encoding" in d:
                enc = dict(d["encoding"])
                if "axis_schedule" in enc:
                    enc["axis_schedule"] = tuple(enc["axis_schedule"])
                d["encoding"] = EncodingConfig(**enc)
            if "svm" in d:
                d["svm"] = svm.SvmConfig(**d["svm"])
            if "baselines" in d:
                d["baselines"] = tuple(bl.BaselineSpec(**s) for s in d["baselines"])
            return cls(**d)
        except TypeError as exc:
            raise ConfigurationError(f"malformed config: {exc}") from exc

    def digest(self) -> str:
        """Hash of every field that affects results (the output location does not)."""
        content = self.to_dict()
        content.pop("output_dir")
        return hashlib.sha256(json.dumps(content, sort_keys=True).encode()).hexdigest()[:16]


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return ExperimentConfig.from_dict(raw)


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Set dotted keys (``"svm.c"``, ``"encoding.n_qubits"``) on a config."""
    d = cfg.to_dict()
    for key, value in overrides.items():
        node = d
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                raise ConfigurationError(f"unknown config key {key!r}")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigurationError(f"unknown config key {key!r}")
        node[parts[-1]] = value
    return ExperimentConfig.from_dict(d)


class StageError(QKEmotionError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, Exception):
            raise StageError(self.name, exc) from exc
        return False


@dataclass
class PreparedFold:
    """Everything derived for one fold and one sample budget."""

    fold: data.FoldSplit
    label_sigma: np.ndarray
    train_index: np.ndarray
    test_index: np.ndarray
    stats: data.ZScoreStats
    train_features: np.ndarray
    test_features: np.ndarray
    train_labels: np.ndarray
    test_labels: np.ndarray


def fold_labels(dataset: data.Dataset, fold: data.FoldSplit, polarity: str):
    """Labels for every row, with the spread estimated on training rows only."""
    train_rows = dataset.rows_for(fold.train_participants)
    sigma = data.label_sigma(dataset.intensities[train_rows])
    return sigma, data.label_emotions(dataset.intensities, polarity=polarity, sigma=sigma)


def prepare_fold(dataset: data.Dataset, fold: data.FoldSplit, n_train: int, n_test: int, seed: int,
                 polarity: str = "inside-is-1", labeled=None) -> PreparedFold:
    sigma, labels = labeled if labeled is not None else fold_labels(dataset, fold, polarity)
    train_rows = dataset.rows_for(fold.train_participants)
    test_rows = dataset.rows_for(fold.test_participants)
    rng_train = np.random.default_rng([seed, data.STREAM_SUBSAMPLE, fold.fold_index, n_train, n_test, 0])
    rng_test = np.random.default_rng([seed, data.STREAM_SUBSAMPLE, fold.fold_index, n_train, n_test, 1])
    train_index = train_rows[data.stratified_subsample(labels[train_rows], n_train, rng_train)]
    test_index = test_rows[data.stratified_subsample(labels[test_rows], n_test, rng_test)]
    stats, Xtr, Xte = data.zscore_fit_apply(dataset.features[train_index], dataset.features[test_index])
    return PreparedFold(fold, sigma, train_index, test_index, stats, Xtr, Xte, labels[train_index], labels[test_index])


def _check_classes(labels, what):
    for k, e in enumerate(data.EMOTIONS):
        if np.unique(labels[:, k]).size < 2:
            raise TrainingError(f"{what}: {e} training labels contain a single class")


def quantum_fold(prepared: PreparedFold, encoding: EncodingConfig, svm_cfg: svm.SvmConfig, jobs: int = 1,
                 dump_stem=None):
    """Fidelity kernels plus one SVM per emotion; returns (metrics, train Gram, cross Gram).

    With ``dump_stem`` the Gram matrices are written to ``<stem>_train.qkg``
    and ``<stem>_test.qkg``, and dumps already there are reused when their
    digests match, so changing only SVM settings skips the simulation.
    """
    if dump_stem is None:
        g_train = kernel.gram_matrix(prepared.train_features, cfg=encoding, jobs=jobs)
        g_test = kernel.gram_matrix(prepared.test_features, prepared.train_features, cfg=encoding,
                                    kind="test-train", jobs=jobs)
    else:
        stem = Path(dump_stem)
        g_train, reused_train = kernel.cached_gram_matrix(f"{stem}_train.qkg", prepared.train_features,
                                                          cfg=encoding, jobs=jobs)
        g_test, reused_test = kernel.cached_gram_matrix(f"{stem}_test.qkg", prepared.test_features,
                                                        prepared.train_features, cfg=encoding,
                                                        kind="test-train", jobs=jobs)
        if reused_train and reused_test:
            logger.info("reused kernel dumps %s_{train,test}.qkg", stem.name)
    results = {}
    for k, emotion in enumerate(data.EMOTIONS):
        model = svm.train(g_train, 2 * prepared.train_labels[:, k] - 1, svm_cfg)
        pred = (svm.predict(model, g_test) > 0).astype(int)
        results[emotion] = metrics.compute_metrics(pred, prepared.test_labels[:, k])
    return results, g_train, g_test


def classical_fold(prepared: PreparedFold, specs, jobs: int = 1):
    results = {}
    for spec in specs:
        results[spec.display_name] = {
            emotion: metrics.compute_metrics(
                bl.fit_predict(spec, prepared.train_features, prepared.train_labels[:, k], prepared.test_features, jobs=jobs),
                prepared.test_labels[:, k],
            )
            for k, emotion in enumerate(data.EMOTIONS)
        }
    return results


def budget_label(n_train: int, n_test: int) -> str:
    return f"train: {n_train}; test: {n_test}"


@dataclass
class ExperimentResult:
    report: dict
    classical_table: str
    quantum_table: str
    files: dict = field(default_factory=dict)

    def report_bytes(self) -> bytes:
        return (json.dumps(self.report, indent=1, sort_keys=True) + "\n").encode()

    def digest(self) -> str:
        h = hashlib.sha256(self.report_bytes())
        h.update(self.classical_table.encode())
        h.update(self.quantum_table.encode())
        return h.hexdigest()[:16]


def load_cohort(cfg: ExperimentConfig, sessions_dir=None):
    if sessions_dir is not None:
        return data.read_sessions(sessions_dir)
    return data.synthesize_cohort(cfg.n_participants, cfg.seed, cfg.profile)


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1, sessions_dir=None, write: bool = True) -> ExperimentResult:
    """Run every fold for the classical baselines and the quantum-kernel SVM.

    Output files (reports, kernel dumps) go to ``out_dir``. ``jobs`` only
    changes how work is scheduled, never the results.

    Raises:
        StageError: wraps the first failure together with the stage it hit.
    """
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    with _Stage("config"):
        cfg.check_dimensions()
        specs = cfg.baseline_specs()
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "INVALID").unlink(missing_ok=True)
    try:
        return _run(cfg, specs, out, jobs, sessions_dir, write)
    except StageError as exc:
        if write:
            (out / "INVALID").write_text(f"INVALID\nstage: {exc.stage}\nerror: {exc}\n", encoding="utf-8")
        raise


def _run(cfg, specs, out, jobs, sessions_dir, write):
    files = {}
    with _Stage("synth"):
        sessions = load_cohort(cfg, sessions_dir)
    with _Stage("preprocess"):
        dataset = data.build_dataset(sessions, cfg.window)
    with _Stage("folds"):
        folds = data.make_folds(dataset.participant_ids, cfg.n_folds, cfg.seed)

    classical_per_fold = {s.display_name: {e: [] for e in data.EMOTIONS} for s in specs}
    quantum_per_fold = {b: {e: [] for e in data.EMOTIONS} for b in cfg.quantum_budgets}
    n_train_c, n_test_c = cfg.classical_split
    if write and cfg.dump_kernels:
        (out / "kernels").mkdir(exist_ok=True)

    for fold in folds:
        logger.info("fold %d: %d train / %d test participants", fold.fold_index,
                    len(fold.train_participants), len(fold.test_participants))
        with _Stage(f"label fold {fold.fold_index}"):
            labeled = fold_labels(dataset, fold, cfg.label_polarity)
        with _Stage(f"classical fold {fold.fold_index}"):
            prepared = prepare_fold(dataset, fold, n_train_c, n_test_c, cfg.seed, cfg.label_polarity, labeled)
            _check_classes(prepared.train_labels, f"fold {fold.fold_index}")
            for name, per_emotion in classical_fold(prepared, specs, jobs).items():
                for e, m in per_emotion.items():
                    classical_per_fold[name][e].append(m)
        for n_train, n_test in cfg.quantum_budgets:
            with _Stage(f"quantum fold {fold.fold_index} {budget_label(n_train, n_test)}"):
                prepared = prepare_fold(dataset, fold, n_train, n_test, cfg.seed, cfg.label_polarity, labeled)
                _check_classes(prepared.train_labels, f"fold {fold.fold_index}")
                stem = f"fold{fold.fold_index}_train{n_train}_test{n_test}"
                dump_stem = out / "kernels" / stem if write and cfg.dump_kernels else None
                results, _, _ = quantum_fold(prepared, cfg.encoding, cfg.svm, jobs, dump_stem)
                for e, m in results.items():
                    quantum_per_fold[(n_train, n_test)][e].append(m)
                if dump_stem is not None:
                    files[f"{stem}_train"] = out / "kernels" / f"{stem}_train.qkg"
                    files[f"{stem}_test"] = out / "kernels" / f"{stem}_test.qkg"

    with _Stage("report"):
        classical = {name: {e: metrics.aggregate_folds(v) for e, v in per.items()} for name, per in classical_per_fold.items()}
        quantum = {budget_label(*b): {e: metrics.aggregate_folds(v) for e, v in per.items()} for b, per in quantum_per_fold.items()}
        report = {
            "config_digest": cfg.digest(),
            "dataset_digest": dataset.digest(),
            "cohort_digest": data.cohort_digest(sessions),
            "n_folds": cfg.n_folds,
            "label_polarity": cfg.label_polarity,
            "classical": {
                "train": n_train_c,
                "test": n_test_c,
                "models": {name: {e: agg.to_dict() for e, agg in per.items()} for name, per in classical.items()},
            },
            "quantum": {
                "budgets": [
                    {"label": budget_label(*b), "train": b[0], "test": b[1],
                     "emotions": {e: agg.to_dict() for e, agg in quantum[budget_label(*b)].items()}}
                    for b in cfg.quantum_budgets
                ],
            },
            "omitted_models": list(OMITTED_MODELS),
        }
        result = ExperimentResult(report, *render_tables(report))
        if write:
            files.update(write_report(result, out))
            (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        result.files = files
    return result


def render_tables(report: dict) -> tuple[str, str]:
    """Text tables for the classical and quantum parts of a report dict."""

    def agg(d):
        folds = tuple(
            metrics.BinaryMetrics.from_counts(metrics.ConfusionCounts(**f["counts"])) for f in d["folds"]
        )
        return metrics.aggregate_folds(folds)

    n_folds = report["n_folds"]
    c = report["classical"]
    # report.json is key-sorted; rows keep the canonical model order
    rank = {name: i for i, name in enumerate(bl.DISPLAY_NAMES.values())}
    names = sorted(c["models"], key=lambda n: (rank.get(n, len(rank)), n))
    classical_rows = {name: {e: agg(v) for e, v in c["models"][name].items()} for name in names}
    classical = metrics.render_table(
        f"Classical models, {c['train'] + c['test']} samples (train {c['train']}, test {c['test']}; mean of {n_folds} folds)",
        classical_rows,
        footnote="Not run: " + ", ".join(report["omitted_models"]) + ".",
    )
    quantum_rows = {b["label"]: {e: agg(v) for e, v in b["emotions"].items()} for b in report["quantum"]["budgets"]}
    quantum = metrics.render_table(
        f"Quantum-kernel SVM (mean of {n_folds} folds)",
        quantum_rows,
        row_header="No of Samples",
    )
    return classical, quantum


def write_report(result: ExperimentResult, out) -> dict:
    out = Path(out)
    paths = {
        "report": out / "report.json",
        "classical_table": out / "classical_table.txt",
        "quantum_table": out / "quantum_table.txt",
    }
    paths["report"].write_bytes(result.report_bytes())
    paths["classical_table"].write_text(result.classical_table, encoding="utf-8")
    paths["quantum_table"].write_text(result.quantum_table, encoding="utf-8")
    return paths


def preprocess(cfg: ExperimentConfig, out_dir, sessions_dir=None) -> dict:
    """Export cohort features and labels for inspection.

    Statistics here use the whole cohort; :func:`run_experiment` re-derives
    them per fold from training rows.
    """
    sessions = load_cohort(cfg, sessions_dir)
    dataset = data.build_dataset(sessions, cfg.window)
    sigma = data.label_sigma(dataset.intensities)
    labels = data.label_emotions(dataset.intensities, polarity=cfg.label_polarity, sigma=sigma)
    stats = data.zscore_fit(dataset.features)
    header = f"config_digest={cfg.digest()} seed={cfg.seed} scope=cohort-inspection"
    return data.export_dataset(dataset, labels, stats, sigma, Path(out_dir) / "dataset", header)


def synthesize(cfg: ExperimentConfig, out_dir) -> tuple[str, list[Path]]:
    sessions = data.synthesize_cohort(cfg.n_participants, cfg.seed, cfg.profile)
    d = Path(out_dir) / "sessions"
    d.mkdir(parents=True, exist_ok=True)
    header = f"seed={cfg.seed} config_digest={cfg.digest()}"
    paths = [data.write_session_csv(s, d / data.session_filename(s.participant_id), header) for s in sessions]
    return data.cohort_digest(sessions), paths


def with_output(cfg: ExperimentConfig, out_dir) -> ExperimentConfig:
    return replace(cfg, output_dir=str(out_dir))
