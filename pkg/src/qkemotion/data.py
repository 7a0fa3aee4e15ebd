"""Synthetic TSST cohorts, signal preprocessing, emotion labeling and folds.

Real recordings are not available, so :func:`synthesize_cohort` produces
sessions with the protocol's phase structure. Emotion intensity streams are
built so that a chosen fraction of samples lies outside one standard
deviation of the emotion's baseline; the physiological channels respond to
the same latent emotion activations, which makes the labels learnable from
the sensor features.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.signal import lfilter

from .errors import ConfigurationError, IngestionError, LabelingError, ShapeError

EMOTIONS = ("Positive", "Negative", "Neutral")
PHASES = ("waiting", "baseline", "anticipatory-stress", "speech-math", "recovery1", "recovery2")
CHANNELS = ("EDA", "BVP", "IBI", "TEMP", "ACC_yaw", "ACC_pitch", "ACC_roll", "GSR_conductance")
FEATURE_NAMES = (
    "eda_tonic",
    "eda_phasic",
    "bvp_amplitude",
    "ibi_mean",
    "ibi_std",
    "temp",
    "gsr_conductance",
    "acc_magnitude",
)
POLARITIES = ("inside-is-1", "outside-is-1")
WINDOW = 60

# (baseline intensity, % of samples outside one standard deviation)
PUBLISHED_EMOTION_TABLE = {
    "Joy": (-0.6629763, 24.28),
    "Anger": (0.3638698, 41.11),
    "Surprise": (-1.859378, 7.61),
    "Fear": (-0.8419589, 15.12),
    "Contempt": (-0.1459146, 33.83),
    "Disgust": (-0.3184329, 21.58),
    "Sadness": (-0.515366, 27.38),
    "Neutral": (-0.0408471, 34.96),
    "Positive": (-0.6629763, 24.28),
    "Negative": (0.3638698, 18.49),
    "Confusion": (0.8094460, 46.93),
    "Frustration": (0.5876518, 42.75),
}

# phase -> activation propensity, in PHASES order
_PROPENSITY = {
    "Positive": (0.3, 0.5, 0.0, 0.0, 0.8, 1.2),
    "Negative": (0.2, 0.0, 1.2, 1.5, 0.4, 0.0),
    "Neutral": (1.0, 1.2, 0.2, 0.0, 0.5, 0.7),
}

# named RNG substreams derived from the master seed
STREAM_COHORT = 1
STREAM_FOLDS = 2
STREAM_SUBSAMPLE = 3


@dataclass(frozen=True)
class EmotionBaselineTable:
    entries: dict

    @classmethod
    def published(cls) -> "EmotionBaselineTable":
        return cls(dict(PUBLISHED_EMOTION_TABLE))

    def baseline(self, emotion: str) -> float:
        return self.entries[emotion][0]

    def pct_outside(self, emotion: str) -> float:
        return self.entries[emotion][1]

    def baselines(self, emotions=EMOTIONS) -> np.ndarray:
        return np.array([self.baseline(e) for e in emotions])


def _default_phase_minutes():
    return {
        "waiting": 10.0,
        "baseline": 20.0,
        "anticipatory-stress": 10.0,
        "speech-math": 10.0,
        "recovery1": 20.0,
        "recovery2": 20.0,
    }


def _default_targets():
    return {e: PUBLISHED_EMOTION_TABLE[e][1] / 100.0 for e in EMOTIONS}


@dataclass(frozen=True)
class GeneratorProfile:
    """Knobs of the synthetic cohort generator.

    ``outside_targets`` are the fractions of samples per emotion stream that
    should fall outside one standard deviation of the baseline.
    """

    sample_rate_hz: float = 1.0
    phase_minutes: dict = field(default_factory=_default_phase_minutes)
    outside_targets: dict = field(default_factory=_default_targets)
    activation_magnitude: float = 1.0
    inactive_noise: float = 0.15
    latent_noise: float = 0.5
    correlation_seconds: float = 90.0

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ConfigurationError("sample_rate_hz must be positive")
        if set(self.phase_minutes) != set(PHASES):
            raise ConfigurationError(f"phase_minutes must define exactly {PHASES}")
        if any(not m > 0 for m in self.phase_minutes.values()):
            raise ConfigurationError("phase durations must be positive")
        if set(self.outside_targets) != set(EMOTIONS):
            raise ConfigurationError(f"outside_targets must define exactly {EMOTIONS}")
        for e, t in self.outside_targets.items():
            # above ~0.6 the active level no longer clears one std
            if not 0.0 < t < 0.6:
                raise ConfigurationError(f"outside fraction for {e} must lie in (0, 0.6), got {t!r}")
        if not 0 <= self.inactive_noise < 0.5 * self.activation_magnitude:
            raise ConfigurationError("inactive_noise must be below half the activation magnitude")

    def phase_lengths(self) -> list[int]:
        return [int(round(self.phase_minutes[p] * 60 * self.sample_rate_hz)) for p in PHASES]

    def to_dict(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "phase_minutes": dict(self.phase_minutes),
            "outside_targets": dict(self.outside_targets),
            "activation_magnitude": self.activation_magnitude,
            "inactive_noise": self.inactive_noise,
            "latent_noise": self.latent_noise,
            "correlation_seconds": self.correlation_seconds,
        }


@dataclass
class Session:
    participant_id: int
    sample_rate: float
    channels: dict
    phase: np.ndarray
    emotion_intensity: dict

    def __post_init__(self):
        n = len(self.phase)
        for name, series in {**self.channels, **self.emotion_intensity}.items():
            if len(series) != n:
                raise IngestionError(f"participant {self.participant_id}: {name} has {len(series)} samples, expected {n}")

    def __len__(self):
        return len(self.phase)

    @property
    def timestamps(self) -> np.ndarray:
        return np.arange(len(self)) / self.sample_rate

    def intensity_matrix(self, emotions=EMOTIONS) -> np.ndarray:
        return np.column_stack([self.emotion_intensity[e] for e in emotions])

    def digest(self) -> str:
        h = hashlib.sha256(f"{self.participant_id}:{self.sample_rate!r}".encode())
        h.update(np.asarray(self.phase, dtype=np.int64).tobytes())
        for name in sorted(self.channels):
            h.update(name.encode())
            h.update(np.asarray(self.channels[name], dtype=np.float64).tobytes())
        for name in sorted(self.emotion_intensity):
            h.update(name.encode())
            h.update(np.asarray(self.emotion_intensity[name], dtype=np.float64).tobytes())
        return h.hexdigest()[:16]


def cohort_digest(sessions) -> str:
    h = hashlib.sha256()
    for s in sessions:
        h.update(s.digest().encode())
    return h.hexdigest()[:16]


def _ar1(rng, n, rho):
    e = rng.standard_normal(n)
    scale = np.sqrt(1.0 - rho * rho)
    e[0] /= scale
    return lfilter([scale], [1.0, -rho], e)


def _top_fraction(latent, fraction):
    k = int(round(fraction * latent.shape[0]))
    active = np.zeros(latent.shape[0], dtype=bool)
    if k:
        active[np.argsort(-latent, kind="stable")[:k]] = True
    return active


def synthesize_session(participant_id: int, seed: int, profile: GeneratorProfile = GeneratorProfile()) -> Session:
    rng = np.random.default_rng([seed, STREAM_COHORT, participant_id])
    fs = profile.sample_rate_hz
    phase = np.repeat(np.arange(len(PHASES)), profile.phase_lengths())
    n = phase.shape[0]
    rho = float(np.exp(-1.0 / (profile.correlation_seconds * fs)))
    table = EmotionBaselineTable.published()
    A = profile.activation_magnitude

    intensity = {}
    activation = {}
    for emotion in EMOTIONS:
        latent = np.asarray(_PROPENSITY[emotion])[phase] + profile.latent_noise * _ar1(rng, n, rho)
        active = _top_fraction(latent, profile.outside_targets[emotion])
        # activation lifts intensity above baseline; the spread of such a
        # stream stays below A/2 while the target fraction is under 0.6
        deviation = np.where(
            active,
            A * rng.uniform(0.8, 1.2, size=n),
            rng.normal(0.0, profile.inactive_noise * A, size=n),
        )
        intensity[emotion] = table.baseline(emotion) + deviation
        activation[emotion] = moving_average(active.astype(float), max(1, int(30 * fs)))

    neg, pos, neu = activation["Negative"], activation["Positive"], activation["Neutral"]
    speaking = (phase == PHASES.index("speech-math")).astype(float)

    eda_base = rng.uniform(2.0, 6.0)
    tonic = eda_base + 1.5 * neg + 0.5 * pos - 0.8 * neu + 0.3 * _ar1(rng, n, rho)
    events = rng.random(n) < (0.01 + 0.06 * neg) / fs
    heights = np.where(events, rng.exponential(0.3, size=n), 0.0)
    phasic = lfilter([1.0], [1.0, -np.exp(-1.0 / (4.0 * fs))], heights)
    eda = tonic + phasic + rng.normal(0.0, 0.01, size=n)

    hr = rng.uniform(62.0, 78.0) + 12.0 * neg + 5.0 * pos - 7.0 * neu + 2.0 * _ar1(rng, n, rho) + rng.normal(0, 1.0, n)
    ibi = 60.0 / hr * (1.0 + rng.normal(0.0, 1.0, n) * (0.01 + 0.04 * neg))
    beat_phase = 2 * np.pi * np.cumsum(hr / 60.0) / fs
    bvp = rng.uniform(40.0, 80.0) * (1.0 - 0.35 * neg + 0.25 * pos) * np.sin(beat_phase) + rng.normal(0.0, 2.0, n)
    temp = rng.normal(33.0, 0.4) - 0.5 * neg + 0.25 * pos + 0.3 * neu + 0.1 * _ar1(rng, n, rho) + rng.normal(0.0, 0.02, n)

    movement = 1.0 + 4.0 * speaking + 2.0 * pos - 0.5 * neu
    acc = {}
    for axis in ("ACC_yaw", "ACC_pitch", "ACC_roll"):
        acc[axis] = rng.uniform(-20.0, 20.0) + 3.0 * movement * _ar1(rng, n, rho) + rng.normal(0.0, 1.0, n) * 0.5 * movement
    gsr = rng.uniform(0.8, 1.1) * tonic + 0.5 * phasic + rng.normal(0.0, 0.05, n)

    channels = {"EDA": eda, "BVP": bvp, "IBI": ibi, "TEMP": temp, **acc, "GSR_conductance": gsr}
    return Session(participant_id, fs, channels, phase, intensity)


def synthesize_cohort(n_participants: int, seed: int, profile: GeneratorProfile = GeneratorProfile()) -> list[Session]:
    """Generate ``n_participants`` independent sessions (ids ``1..n``).

    Each participant draws from its own RNG stream derived from ``seed``, so
    the cohort is identical however it is partitioned for generation.
    """
    if int(n_participants) < 5:
        raise ConfigurationError(f"need at least 5 participants for 5-fold splits, got {n_participants}")
    return [synthesize_session(pid, seed, profile) for pid in range(1, int(n_participants) + 1)]


def _window_sums(x, window):
    c = np.cumsum(x)
    out = c.copy()
    out[window:] = c[window:] - c[:-window]
    return out


def _check_series(series, window):
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.shape[0] == 0:
        raise ShapeError(f"expected a non-empty 1-D series, got shape {x.shape}")
    if int(window) < 1:
        raise ConfigurationError(f"window must be >= 1, got {window}")
    if x.shape[0] < window:
        raise ShapeError(f"series of length {x.shape[0]} is shorter than the window {window}")
    return x


def moving_average(series, window: int = WINDOW) -> np.ndarray:
    """Trailing mean over ``window`` samples; the first ``window - 1`` outputs
    average the available prefix, so the length is preserved."""
    x = _check_series(series, window)
    counts = np.minimum(np.arange(1, x.shape[0] + 1), window)
    # shifting by the first sample keeps constant series exact
    return x[0] + _window_sums(x - x[0], window) / counts


def moving_std(series, window: int = WINDOW) -> np.ndarray:
    """Trailing population standard deviation with the same edge policy."""
    x = _check_series(series, window)
    s = x - x[0]
    counts = np.minimum(np.arange(1, x.shape[0] + 1), window)
    mean = _window_sums(s, window) / counts
    var = _window_sums(s * s, window) / counts - mean * mean
    return np.sqrt(np.clip(var, 0.0, None))


def extract_features(session: Session, window: int = WINDOW) -> np.ndarray:
    """Per-sample feature rows, columns in :data:`FEATURE_NAMES` order."""
    missing = [c for c in CHANNELS if c not in session.channels]
    if missing:
        raise IngestionError(f"participant {session.participant_id}: missing channels {missing}")
    ch = {k: np.asarray(v, dtype=float) for k, v in session.channels.items()}
    acc = np.sqrt(ch["ACC_yaw"] ** 2 + ch["ACC_pitch"] ** 2 + ch["ACC_roll"] ** 2)
    return np.column_stack(
        [
            moving_average(ch["EDA"], window),
            moving_std(ch["EDA"], window),
            moving_std(ch["BVP"], window),
            moving_average(ch["IBI"], window),
            moving_std(ch["IBI"], window),
            moving_average(ch["TEMP"], window),
            moving_average(ch["GSR_conductance"], window),
            moving_average(acc, window),
        ]
    )


@dataclass
class Dataset:
    """Pooled per-sample rows of a cohort, before normalization and labeling."""

    features: np.ndarray
    intensities: np.ndarray
    participant_ids: np.ndarray
    phases: np.ndarray

    def __len__(self):
        return self.features.shape[0]

    def rows_for(self, participants) -> np.ndarray:
        return np.flatnonzero(np.isin(self.participant_ids, list(participants)))

    def digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.features, self.intensities):
            h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
        for a in (self.participant_ids, self.phases):
            h.update(np.ascontiguousarray(a, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


def build_dataset(sessions, window: int = WINDOW) -> Dataset:
    sessions = list(sessions)
    if not sessions:
        raise IngestionError("no sessions to build a dataset from")
    return Dataset(
        features=np.vstack([extract_features(s, window) for s in sessions]),
        intensities=np.vstack([s.intensity_matrix() for s in sessions]),
        participant_ids=np.concatenate([np.full(len(s), s.participant_id, dtype=np.int64) for s in sessions]),
        phases=np.concatenate([np.asarray(s.phase, dtype=np.int64) for s in sessions]),
    )


@dataclass(frozen=True)
class ZScoreStats:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray
    fit_digest: str

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.mean.shape[0]:
            raise ShapeError(f"expected {self.mean.shape[0]} feature columns, got shape {X.shape}")
        z = (X - self.mean) / np.where(self.constant, 1.0, self.std)
        z[:, self.constant] = 0.0
        return z

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "constant": self.constant.tolist(),
            "fit_digest": self.fit_digest,
        }


def zscore_fit(train) -> ZScoreStats:
    """Column means and population standard deviations of ``train``."""
    X = np.asarray(train, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ShapeError(f"z-score fit needs a non-empty 2-D matrix, got shape {X.shape}")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    h = hashlib.sha256(repr(X.shape).encode())
    h.update(np.ascontiguousarray(X).tobytes())
    return ZScoreStats(mean, std, std == 0, h.hexdigest()[:16])


def zscore_fit_apply(train, test=None):
    """Fit on ``train`` only and transform both matrices.

    Constant training columns are reported in ``stats.constant`` and mapped
    to 0 in both outputs.

    Returns:
        ``(stats, train_z, test_z)``; ``test_z`` is None when ``test`` is.
    """
    stats = zscore_fit(train)
    return stats, stats.apply(train), None if test is None else stats.apply(test)


def label_sigma(intensity) -> np.ndarray:
    """Sample standard deviation (``ddof=1``) of every intensity column."""
    I = np.atleast_2d(np.asarray(intensity, dtype=float))
    if I.shape[0] < 2:
        raise LabelingError("need at least two samples to estimate an intensity spread")
    return I.std(axis=0, ddof=1)


def label_emotions(
    intensity,
    table: EmotionBaselineTable | None = None,
    polarity: str = "inside-is-1",
    sigma=None,
    emotions=EMOTIONS,
) -> np.ndarray:
    """Binary labels from emotion intensities.

    A sample is *inside* when ``|intensity - baseline| <= sigma``. With the
    default polarity inside samples are labeled 1.

    Args:
        intensity: ``(N, len(emotions))`` matrix.
        table: Baseline per emotion; defaults to the published table.
        polarity: ``"inside-is-1"`` or ``"outside-is-1"``.
        sigma: Per-emotion spread. Computed from ``intensity`` when omitted;
            pass the training-split value to label held-out rows.
    """
    if polarity not in POLARITIES:
        raise ConfigurationError(f"polarity must be one of {POLARITIES}")
    table = table or EmotionBaselineTable.published()
    I = np.asarray(intensity, dtype=float)
    if I.ndim != 2 or I.shape[1] != len(emotions):
        raise ShapeError(f"intensity must have {len(emotions)} columns, got shape {I.shape}")
    sigma = label_sigma(I) if sigma is None else np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise LabelingError(f"zero-variance intensity stream for {[e for e, s in zip(emotions, sigma) if not s > 0]}")
    inside = np.abs(I - table.baselines(emotions)) <= sigma
    return (inside if polarity == "inside-is-1" else ~inside).astype(np.int64)


@dataclass(frozen=True)
class FoldSplit:
    fold_index: int
    train_participants: tuple
    test_participants: tuple


def make_folds(participant_ids, n_folds: int = 5, seed: int = 0) -> list[FoldSplit]:
    """Participant-disjoint folds; fold ``k`` tests on the ``k``-th shuffled group."""
    people = np.unique(np.asarray(participant_ids))
    if n_folds < 2 or people.shape[0] < n_folds:
        raise ConfigurationError(f"{people.shape[0]} participants cannot form {n_folds} folds")
    rng = np.random.default_rng([seed, STREAM_FOLDS])
    groups = np.array_split(rng.permutation(people), n_folds)
    folds = []
    for k, test in enumerate(groups):
        train = np.setdiff1d(people, test)
        folds.append(FoldSplit(k, tuple(int(p) for p in np.sort(train)), tuple(int(p) for p in np.sort(test))))
    return folds


def stratified_subsample(labels, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` row indices, allocating across label patterns proportionally.

    Strata are the distinct rows of ``labels``; leftover slots after flooring
    go to the largest remainders. Indices come back sorted.
    """
    L = np.asarray(labels, dtype=np.int64)
    if L.ndim == 1:
        L = L[:, None]
    total = L.shape[0]
    if not 0 < n <= total:
        raise ConfigurationError(f"cannot draw {n} samples from {total} rows")
    codes = L @ (1 << np.arange(L.shape[1]))[::-1]
    strata, counts = np.unique(codes, return_counts=True)
    exact = n * counts / total
    alloc = np.floor(exact).astype(int)
    order = np.lexsort((strata, -(exact - alloc)))
    alloc[order[: n - alloc.sum()]] += 1
    picks = [rng.choice(np.flatnonzero(codes == s), size=a, replace=False) for s, a in zip(strata, alloc) if a]
    return np.sort(np.concatenate(picks))


SESSION_COLUMNS = ("timestamp", "phase", *CHANNELS, *(f"intensity_{e}" for e in EMOTIONS))


def write_session_csv(session: Session, path, header: str = "") -> Path:
    path = Path(path)
    frame = pd.DataFrame({"timestamp": session.timestamps, "phase": [PHASES[p] for p in session.phase]})
    for c in CHANNELS:
        frame[c] = session.channels[c]
    for e in EMOTIONS:
        frame[f"intensity_{e}"] = session.emotion_intensity[e]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"# participant={session.participant_id} sample_rate={session.sample_rate!r} "
            f"session_digest={session.digest()} {header}".rstrip()
            + "\n"
        )
        frame.to_csv(fh, index=False, lineterminator="\n")
    return path


def read_session_csv(path) -> Session:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline()
        meta = dict(tok.split("=", 1) for tok in first.lstrip("#").split() if "=" in tok)
        frame = pd.read_csv(path, comment="#", float_precision="round_trip")
        pid = int(meta["participant"])
        fs = float(meta["sample_rate"])
    except (OSError, KeyError, ValueError, pd.errors.ParserError) as exc:
        raise IngestionError(f"cannot parse session file {path}: {exc}") from exc
    missing = [c for c in SESSION_COLUMNS if c not in frame.columns]
    if missing:
        raise IngestionError(f"{path}: missing columns {missing}")
    unknown = set(frame["phase"]) - set(PHASES)
    if unknown:
        raise IngestionError(f"{path}: unknown phases {sorted(unknown)}")
    phase = np.array([PHASES.index(p) for p in frame["phase"]], dtype=np.int64)
    return Session(
        pid,
        fs,
        {c: frame[c].to_numpy(dtype=float) for c in CHANNELS},
        phase,
        {e: frame[f"intensity_{e}"].to_numpy(dtype=float) for e in EMOTIONS},
    )


def session_filename(participant_id: int) -> str:
    return f"participant_{participant_id:03d}.csv"


def read_sessions(directory) -> list[Session]:
    files = sorted(Path(directory).glob("participant_*.csv"))
    if not files:
        raise IngestionError(f"no session files in {directory}")
    return [read_session_csv(f) for f in files]


def export_dataset(dataset: Dataset, labels, stats: ZScoreStats, label_sigmas, directory, header: str = "") -> dict:
    """Write features CSV, labels CSV and a statistics JSON into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    comment = f"# dataset_digest={dataset.digest()} {header}".rstrip() + "\n"
    feats = pd.DataFrame(dataset.features, columns=FEATURE_NAMES)
    feats.insert(0, "participant", dataset.participant_ids)
    feats.insert(1, "phase", [PHASES[p] for p in dataset.phases])
    labs = pd.DataFrame(np.asarray(labels), columns=EMOTIONS)
    labs.insert(0, "participant", dataset.participant_ids)
    paths = {"features": d / "features.csv", "labels": d / "labels.csv", "stats": d / "stats.json"}
    for key, frame in (("features", feats), ("labels", labs)):
        with open(paths[key], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(comment)
            frame.to_csv(fh, index=False, lineterminator="\n")
    stats_doc = {
        "dataset_digest": dataset.digest(),
        "header": header,
        "feature_names": list(FEATURE_NAMES),
        "zscore": stats.to_dict(),
        "label_sigma": dict(zip(EMOTIONS, np.asarray(label_sigmas).tolist())),
    }
    paths["stats"].write_text(json.dumps(stats_doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return paths
