"""Classical reference classifiers for the per-emotion binary tasks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.ensemble import RandomForestClassifier
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from . import svm
from .errors import ConfigurationError, ShapeError, TrainingError

DISPLAY_NAMES = {
    "random-forest": "Random Forest",
    "knn": "K-Nearest Neighbors",
    "decision-tree": "Decision Tree",
    "naive-bayes-gaussian": "Naive Bayes",
    "svm-rbf": "Support Vector Machine",
    "logistic-regression": "Logistic Regression",
}

DEFAULT_PARAMS = {
    "random-forest": {"n_estimators": 100},
    "knn": {"k": 3, "p": 2},
    "decision-tree": {},
    "naive-bayes-gaussian": {},
    "svm-rbf": {"c": 1.0, "tolerance": 1e-4},
    "logistic-regression": {"c": 1.0, "max_iter": 500, "gtol": 1e-6},
}


@dataclass(frozen=True)
class BaselineSpec:
    model: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in DEFAULT_PARAMS:
            raise ConfigurationError(f"unknown baseline {self.model!r}; choose from {sorted(DEFAULT_PARAMS)}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.model])
        if unknown:
            raise ConfigurationError(f"{self.model} does not take parameters {sorted(unknown)}")

    @property
    def resolved(self) -> dict:
        return {**DEFAULT_PARAMS[self.model], **self.params}

    @property
    def display_name(self) -> str:
        return DISPLAY_NAMES[self.model]

    def to_dict(self) -> dict:
        return {"model": self.model, "seed": self.seed, "params": dict(self.params)}


def default_specs(seed: int = 0) -> list[BaselineSpec]:
    return [BaselineSpec(name, seed=seed) for name in DISPLAY_NAMES]


def rbf_gamma(X) -> float:
    """``1 / (n_features * var(X))``, falling back to 1 for constant data."""
    X = np.asarray(X, dtype=float)
    var = X.var()
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    return np.exp(-gamma * cdist(A, B, "sqeuclidean"))


def _logistic_fit(X, y, c, max_iter, gtol):
    """Newton iterations on ``0.5 |w|^2 + c * sum log(1 + exp(-s_i z_i))``.

    The intercept is not penalised. Returns ``(w, b)``.
    """
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    s = np.where(y == 1, 1.0, -1.0)
    reg = np.ones(d + 1)
    reg[-1] = 0.0
    theta = np.zeros(d + 1)

    def objective(th):
        z = Xb @ th
        return 0.5 * np.sum(reg * th * th) + c * np.sum(np.logaddexp(0.0, -s * z))

    for _ in range(max_iter):
        z = Xb @ theta
        p = 0.5 * (1.0 + np.tanh(-0.5 * s * z))  # sigmoid(-s z)
        grad = reg * theta - c * Xb.T @ (s * p)
        if np.linalg.norm(grad) < gtol:
            break
        w = c * p * (1.0 - p)
        H = (Xb * w[:, None]).T @ Xb + np.diag(reg) + 1e-12 * np.eye(d + 1)
        step = np.linalg.solve(H, grad)
        f0 = objective(theta)
        t = 1.0
        while t > 1e-10 and objective(theta - t * step) > f0 - 1e-4 * t * grad @ step:
            t *= 0.5
        theta = theta - t * step
    else:
        raise TrainingError(f"logistic regression did not reach gradient norm {gtol:g} in {max_iter} iterations")
    return theta[:-1], theta[-1]


def fit_predict(spec: BaselineSpec, train_features, train_labels, test_features, jobs: int = 1) -> np.ndarray:
    """Fit ``spec`` on binary ``{0, 1}`` labels and predict the test rows.

    Ties between classes resolve to class 0 except for ``svm-rbf``, which
    keeps the SVM sign rule (``f = 0`` is positive).
    """
    Xtr = np.asarray(train_features, dtype=float)
    Xte = np.asarray(test_features, dtype=float)
    y = np.asarray(train_labels).astype(int)
    if Xtr.ndim != 2 or Xte.ndim != 2 or Xtr.shape[1] != Xte.shape[1]:
        raise ShapeError(f"feature matrices disagree: {Xtr.shape} vs {Xte.shape}")
    if y.shape != (Xtr.shape[0],):
        raise ShapeError(f"expected {Xtr.shape[0]} labels, got shape {y.shape}")
    if not np.all(np.isin(y, (0, 1))):
        raise ConfigurationError("baseline labels must be 0 or 1")
    if np.unique(y).size < 2:
        raise TrainingError(f"{spec.model}: training labels contain a single class")

    p = spec.resolved
    if spec.model == "random-forest":
        model = RandomForestClassifier(
            n_estimators=p["n_estimators"],
            criterion="gini",
            max_features="sqrt",
            bootstrap=True,
            random_state=spec.seed,
            n_jobs=jobs,
        )
    elif spec.model == "decision-tree":
        model = DecisionTreeClassifier(criterion="gini", random_state=spec.seed)
    elif spec.model == "knn":
        model = KNeighborsClassifier(n_neighbors=p["k"], weights="uniform", metric="minkowski", p=p["p"], algorithm="brute")
    elif spec.model == "naive-bayes-gaussian":
        model = GaussianNB()
    elif spec.model == "svm-rbf":
        gamma = rbf_gamma(Xtr)
        cfg = svm.SvmConfig(c=p["c"], tolerance=p["tolerance"], kernel_kind="rbf", gamma=gamma)
        fitted = svm.train(rbf_kernel(Xtr, Xtr, gamma), 2 * y - 1, cfg)
        return (svm.predict(fitted, rbf_kernel(Xte, Xtr, gamma)) > 0).astype(int)
    else:
        w, b = _logistic_fit(Xtr, y, p["c"], p["max_iter"], p["gtol"])
        return (Xte @ w + b > 0).astype(int)

    model.fit(Xtr, y)
    return model.predict(Xte).astype(int)
