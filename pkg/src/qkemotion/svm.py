"""Soft-margin SVM trained on a precomputed kernel by SMO.

The dual problem solved is::

    max_a  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
    s.t.   0 <= a_i <= C,  sum_i a_i y_i = 0

and predictions use ``f(x) = sum_i a_i y_i k(x_i, x) + b``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DigestMismatchError, FormatError, ShapeError, TrainingError
from .kernel import GramMatrix

logger = logging.getLogger(__name__)

KERNEL_KINDS = ("precomputed-quantum", "rbf")
SUPPORT_THRESHOLD = 1e-9
# curvature floor for pairs whose kernel rows coincide
_TAU = 1e-12


@dataclass(frozen=True)
class SvmConfig:
    c: float = 1.0
    tolerance: float = 1e-4
    max_passes: int = 200
    kernel_kind: str = "precomputed-quantum"
    gamma: float | None = None

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigurationError(f"C must be positive, got {self.c!r}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance!r}")
        if int(self.max_passes) < 1:
            raise ConfigurationError(f"max_passes must be >= 1, got {self.max_passes!r}")
        if self.kernel_kind not in KERNEL_KINDS:
            raise ConfigurationError(f"kernel_kind must be one of {KERNEL_KINDS}")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma!r}")


@dataclass
class SvmModel:
    alphas: np.ndarray
    labels: np.ndarray
    bias: float
    config: SvmConfig = field(default_factory=SvmConfig)
    train_config_digest: str | None = None
    train_col_digest: str | None = None
    iterations: int = 0
    converged: bool = True

    @property
    def support_indices(self) -> np.ndarray:
        return np.flatnonzero(self.alphas > SUPPORT_THRESHOLD)

    @property
    def n_train(self) -> int:
        return self.alphas.shape[0]

    @property
    def train_gram_ref(self) -> str | None:
        if self.train_col_digest is None:
            return None
        return f"{self.train_config_digest}:{self.train_col_digest}"

    def to_dict(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "labels": self.labels.astype(int).tolist(),
            "bias": self.bias,
            "config": asdict(self.config),
            "train_config_digest": self.train_config_digest,
            "train_col_digest": self.train_col_digest,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _unwrap(gram):
    if isinstance(gram, GramMatrix):
        return gram.values, gram
    return np.asarray(gram, dtype=float), None


def _as_labels(labels, n):
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != n:
        raise ShapeError(f"expected {n} labels, got shape {y.shape}")
    if not np.all(np.isin(y, (-1, 1))):
        raise ConfigurationError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise TrainingError("training labels contain a single class")
    return y.astype(float)


def dual_objective(alphas, gram, labels) -> float:
    """Value of the dual objective being maximised."""
    K, _ = _unwrap(gram)
    a = np.asarray(alphas, dtype=float)
    ay = a * np.asarray(labels, dtype=float)
    return float(a.sum() - 0.5 * ay @ K @ ay)


def _violating_pair(alpha, y, G, C):
    score = -y * G
    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    m = np.max(score, where=up, initial=-np.inf)
    M = np.min(score, where=low, initial=np.inf)
    return score, up, low, m, M


def _bias(alpha, y, G, C):
    score, up, low, m, M = _violating_pair(alpha, y, G, C)
    free = (alpha > 0) & (alpha < C)
    if np.any(free):
        return float(np.mean(score[free]))
    if not np.isfinite(m):
        return float(M)
    if not np.isfinite(M):
        return float(m)
    return float((m + M) / 2)


def _smo(K, y, C, tol, max_iter):
    n = y.shape[0]
    Q = K * np.outer(y, y)
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while True:
        while it < max_iter:
            score, up, low, m, M = _violating_pair(alpha, y, G, C)
            if m - M <= tol:
                break
            i = int(np.argmax(np.where(up, score, -np.inf)))
            # second index: largest |E_i - E_j| among the opposite set
            j = int(np.argmin(np.where(low, score, np.inf)))
            eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if eta <= 0:
                eta = _TAU
            bound_i = C - alpha[i] if y[i] > 0 else alpha[i]
            bound_j = alpha[j] if y[j] > 0 else C - alpha[j]
            t = min((m - M) / eta, bound_i, bound_j)
            old_i, old_j = alpha[i], alpha[j]
            alpha[i] = old_i + y[i] * t
            alpha[j] = old_j - y[j] * t
            if t == bound_i:
                alpha[i] = C if y[i] > 0 else 0.0
            if t == bound_j:
                alpha[j] = 0.0 if y[j] > 0 else C
            G += Q[i] * (alpha[i] - old_i) + Q[j] * (alpha[j] - old_j)
            it += 1
        # incremental gradient drifts; confirm the stopping test on an exact one
        G = Q @ alpha - 1.0
        _, _, _, m, M = _violating_pair(alpha, y, G, C)
        if m - M <= tol or it >= max_iter:
            return alpha, G, it, m - M <= tol


def train(gram, labels, cfg: SvmConfig = SvmConfig()) -> SvmModel:
    """Solve the SVM dual on a square training Gram matrix.

    Working pairs are the maximal KKT violator and the point in the opposite
    index set with the largest error difference. Iteration stops when the
    violation gap falls to ``cfg.tolerance``, which bounds every KKT residual
    by the same amount.

    Raises:
        ShapeError: ``gram`` is not square or does not match ``labels``.
        TrainingError: only one class is present.
    """
    K, g = _unwrap(gram)
    if g is not None and g.kind != "train-train":
        raise ShapeError(f"training needs a train-train Gram matrix, got {g.kind}")
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ShapeError(f"training Gram must be square, got shape {K.shape}")
    y = _as_labels(labels, K.shape[0])
    if not np.all(np.isfinite(K)):
        raise TrainingError("Gram matrix contains non-finite values")

    max_iter = int(cfg.max_passes) * K.shape[0]
    alpha, G, iterations, converged = _smo(K, y, float(cfg.c), float(cfg.tolerance), max_iter)
    if not converged:
        logger.warning("SMO stopped after %d iterations without reaching tolerance %g", iterations, cfg.tolerance)
    return SvmModel(
        alphas=alpha,
        labels=y.astype(int),
        bias=_bias(alpha, y, G, float(cfg.c)),
        config=cfg,
        train_config_digest=None if g is None else g.config_digest,
        train_col_digest=None if g is None else g.col_digest,
        iterations=int(iterations),
        converged=bool(converged),
    )


def decision_function(model: SvmModel, cross_gram) -> np.ndarray:
    """Raw ``sum_i a_i y_i k(x_i, x) + b`` for every row of ``cross_gram``."""
    K, g = _unwrap(cross_gram)
    if K.ndim != 2 or K.shape[1] != model.n_train:
        raise ShapeError(f"cross Gram needs {model.n_train} columns, got shape {K.shape}")
    if g is not None and model.train_col_digest is not None and g.col_digest is not None:
        if g.col_digest != model.train_col_digest or g.config_digest != model.train_config_digest:
            raise DigestMismatchError(
                f"cross Gram ({g.config_digest}:{g.col_digest}) was not computed against "
                f"this model's training set ({model.train_gram_ref})"
            )
    return K @ (model.alphas * model.labels) + model.bias


def predict(model: SvmModel, cross_gram) -> np.ndarray:
    """Sign of the decision function; ``f = 0`` maps to ``+1``."""
    f = decision_function(model, cross_gram)
    return np.where(f >= 0, 1, -1)


def kkt_violation(model: SvmModel, gram) -> float:
    """Largest KKT residual of ``model`` on its own training Gram matrix."""
    K, _ = _unwrap(gram)
    a, y, C = model.alphas, model.labels.astype(float), model.config.c
    margin = y * (K @ (a * y) + model.bias)
    at_zero = a <= 0
    at_c = a >= C
    free = ~at_zero & ~at_c
    worst = 0.0
    if np.any(at_zero):
        worst = max(worst, float(np.max(1 - margin[at_zero])))
    if np.any(at_c):
        worst = max(worst, float(np.max(margin[at_c] - 1)))
    if np.any(free):
        worst = max(worst, float(np.max(np.abs(margin[free] - 1))))
    return max(worst, 0.0)


def argmax_labels(decisions: dict) -> np.ndarray:
    """Combine one-vs-rest decision values into a single label per row.

    Ties go to the class listed first in ``decisions``.
    """
    names = list(decisions)
    stacked = np.vstack([np.asarray(decisions[k], dtype=float) for k in names])
    return np.asarray(names, dtype=object)[np.argmax(stacked, axis=0)]


def save_model(model: SvmModel, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(model.to_dict(), sort_keys=True, indent=1), encoding="utf-8")
    return path


def load_model(path) -> SvmModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
        return SvmModel(
            alphas=np.asarray(d["alphas"], dtype=float),
            labels=np.asarray(d["labels"], dtype=int),
            bias=float(d["bias"]),
            config=SvmConfig(**d["config"]),
            train_config_digest=d.get("train_config_digest"),
            train_col_digest=d.get("train_col_digest"),
            iterations=int(d.get("iterations", 0)),
            converged=bool(d.get("converged", True)),
        )
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"cannot load SVM model from {path}: {exc}") from exc
