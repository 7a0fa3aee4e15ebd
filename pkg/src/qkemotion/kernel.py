"""Fidelity kernel ``k(x, y) = |<phi(x)|phi(y)>|^2`` and Gram-matrix utilities."""

from __future__ import annotations

import hashlib
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, FormatError, ShapeError
from .featuremap import EncodingConfig, encode, encode_batch

KINDS = ("train-train", "test-train")

# absolute tolerances for a train-train Gram matrix
SYMMETRY_TOL = 1e-9
DIAGONAL_TOL = 1e-9
RANGE_TOL = 1e-9
PSD_TOL = -1e-7

_MAGIC = b"QKGRAM\x00\x01"


def array_digest(a) -> str:
    """Short content hash of a numeric array (shape and float64 bytes)."""
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    h = hashlib.sha256(repr(a.shape).encode())
    h.update(a.tobytes())
    return h.hexdigest()[:16]


@dataclass
class GramMatrix:
    """Kernel values between a row set and a column set.

    For ``test-train`` matrices the columns are the training points, so a
    model trained on a ``train-train`` matrix with the same ``col_digest`` can
    be evaluated against it.
    """

    values: np.ndarray
    kind: str = "train-train"
    config_digest: str | None = None
    row_digest: str | None = None
    col_digest: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ShapeError(f"Gram values must be 2-D, got shape {self.values.shape}")
        if self.kind not in KINDS:
            raise ConfigurationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "train-train" and self.rows != self.cols:
            raise ShapeError(f"train-train Gram must be square, got {self.values.shape}")

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def dataset_digest(self) -> str | None:
        if self.row_digest is None and self.col_digest is None:
            return None
        return hashlib.sha256(f"{self.row_digest}:{self.col_digest}".encode()).hexdigest()[:16]

    def digest(self) -> str:
        return array_digest(self.values)


def _fidelities(state: np.ndarray, states: np.ndarray) -> np.ndarray:
    # one code path for single values and whole rows keeps them bitwise equal
    overlaps = (states * state.conj()[None, :]).sum(axis=1)
    f = overlaps.real**2 + overlaps.imag**2
    return np.clip(f, 0.0, 1.0)


def kernel_value(x_i, x_j, cfg: EncodingConfig = EncodingConfig()) -> float:
    """Fidelity between the encoded states of two feature vectors."""
    a = encode(x_i, cfg)
    b = encode(x_j, cfg)
    return float(_fidelities(a, b[None, :])[0])


def gram_from_states(states_a: np.ndarray, states_b: np.ndarray, jobs: int = 1) -> np.ndarray:
    """Pairwise fidelities between two stacks of statevectors.

    Row blocks are independent; the result does not depend on ``jobs``.
    """
    n = states_a.shape[0]
    out = np.empty((n, states_b.shape[0]), dtype=np.float64)

    def fill(lo, hi):
        for i in range(lo, hi):
            out[i] = _fidelities(states_a[i], states_b)

    jobs = max(1, int(jobs))
    if jobs == 1 or n < 2 * jobs:
        fill(0, n)
    else:
        bounds = np.linspace(0, n, jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(fill, bounds[:-1], bounds[1:]))
    return out


def gram_matrix(a, b=None, cfg: EncodingConfig = EncodingConfig(), kind: str | None = None, jobs: int = 1) -> GramMatrix:
    """Fidelity Gram matrix between the rows of ``a`` and ``b``.

    Every point is simulated once; entries are inner products of the cached
    statevectors. ``b=None`` means ``b = a`` (a ``train-train`` matrix).

    Args:
        a: Row feature matrix, shape ``(N, 2 * n_qubits)``.
        b: Column feature matrix, shape ``(M, 2 * n_qubits)``. For a
            ``test-train`` matrix pass the training features here.
        cfg: Encoding configuration.
        kind: ``"train-train"`` or ``"test-train"``; inferred when omitted.
        jobs: Worker threads for filling row blocks.
    """
    a = np.asarray(a, dtype=float)
    same = b is None
    b = a if same else np.asarray(b, dtype=float)
    for name, m in (("a", a), ("b", b)):
        if m.ndim != 2 or m.shape[0] == 0:
            raise ConfigurationError(f"{name} must be a non-empty 2-D feature matrix, got shape {m.shape}")
        if m.shape[1] != cfg.n_features:
            raise ShapeError(f"{name} has {m.shape[1]} features; encoding needs {cfg.n_features}")
    if kind is None:
        kind = "train-train" if same or b is a else "test-train"

    states_a = encode_batch(a, cfg)
    states_b = states_a if same else encode_batch(b, cfg)
    values = gram_from_states(states_a, states_b, jobs=jobs)
    return GramMatrix(
        values,
        kind=kind,
        config_digest=cfg.digest(),
        row_digest=array_digest(a),
        col_digest=array_digest(b),
    )


@dataclass
class ValidationReport:
    shape: tuple[int, int]
    kind: str
    max_asymmetry: float = 0.0
    max_diagonal_deviation: float = 0.0
    min_eigenvalue: float | None = None
    range_violations: int = 0
    nonfinite: int = 0
    problems: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.problems

    def summary(self) -> str:
        lines = [
            f"shape: {self.shape[0]} x {self.shape[1]} ({self.kind})",
            f"max asymmetry: {self.max_asymmetry:.3e}",
            f"max diagonal deviation: {self.max_diagonal_deviation:.3e}",
            "min eigenvalue: " + ("n/a" if self.min_eigenvalue is None else f"{self.min_eigenvalue:.6e}"),
            f"entries outside [0, 1]: {self.range_violations}",
            f"non-finite entries: {self.nonfinite}",
            "result: " + ("PASS" if self.passed else "FAIL (" + "; ".join(self.problems) + ")"),
        ]
        return "\n".join(lines)


def validate_gram(g) -> ValidationReport:
    """Check range, symmetry, unit diagonal and positive semi-definiteness.

    Never raises on bad values; the returned report carries every violation.
    """
    if not isinstance(g, GramMatrix):
        arr = np.asarray(g, dtype=float)
        g = GramMatrix(arr, kind="train-train" if arr.ndim == 2 and arr.shape[0] == arr.shape[1] else "test-train")
    v = g.values
    report = ValidationReport(shape=v.shape, kind=g.kind)

    finite = np.isfinite(v)
    report.nonfinite = int(np.count_nonzero(~finite))
    if report.nonfinite:
        report.problems.append(f"{report.nonfinite} non-finite entries")
    report.range_violations = int(np.count_nonzero(finite & ((v < -RANGE_TOL) | (v > 1 + RANGE_TOL))))
    if report.range_violations:
        report.problems.append(f"{report.range_violations} entries outside [0, 1]")

    if g.kind == "train-train" and v.size and not report.nonfinite:
        report.max_asymmetry = float(np.max(np.abs(v - v.T)))
        if report.max_asymmetry > SYMMETRY_TOL:
            report.problems.append(f"asymmetry {report.max_asymmetry:.3e} > {SYMMETRY_TOL:g}")
        report.max_diagonal_deviation = float(np.max(np.abs(np.diag(v) - 1.0)))
        if report.max_diagonal_deviation > DIAGONAL_TOL:
            report.problems.append(f"diagonal deviation {report.max_diagonal_deviation:.3e} > {DIAGONAL_TOL:g}")
        sym = (v + v.T) / 2
        report.min_eigenvalue = float(np.linalg.eigvalsh(sym)[0])
        if report.min_eigenvalue < PSD_TOL:
            report.problems.append(f"min eigenvalue {report.min_eigenvalue:.3e} < {PSD_TOL:g}")
    return report


def save_gram(g: GramMatrix, path) -> Path:
    """Write ``g`` as a binary dump: magic, JSON header, row-major float64 values."""
    path = Path(path)
    values = np.ascontiguousarray(g.values, dtype="<f8")
    header = {
        "rows": g.rows,
        "cols": g.cols,
        "kind": g.kind,
        "config_digest": g.config_digest,
        "dataset_digest": g.dataset_digest,
        "row_digest": g.row_digest,
        "col_digest": g.col_digest,
        "dtype": "<f8",
        "order": "row-major",
        "values_sha256": hashlib.sha256(values.tobytes()).hexdigest(),
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(values.tobytes())
    return path


def load_gram(path) -> GramMatrix:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read kernel dump {path}: {exc}") from exc
    if raw[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path} is not a kernel dump (bad magic)")
    offset = len(_MAGIC)
    if len(raw) < offset + 4:
        raise FormatError(f"{path} is truncated")
    (hlen,) = struct.unpack("<I", raw[offset : offset + 4])
    offset += 4
    try:
        header = json.loads(raw[offset : offset + hlen])
        rows, cols, kind = int(header["rows"]), int(header["cols"]), header["kind"]
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"{path} has a corrupt header: {exc}") from exc
    body = raw[offset + hlen :]
    if len(body) != rows * cols * 8:
        raise FormatError(f"{path}: expected {rows * cols * 8} value bytes, found {len(body)}")
    if hashlib.sha256(body).hexdigest() != header.get("values_sha256"):
        raise FormatError(f"{path}: value checksum mismatch")
    values = np.frombuffer(body, dtype="<f8").reshape(rows, cols).astype(np.float64)
    try:
        return GramMatrix(
            values,
            kind=kind,
            config_digest=header.get("config_digest"),
            row_digest=header.get("row_digest"),
            col_digest=header.get("col_digest"),
        )
    except (ShapeError, ConfigurationError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def cached_gram_matrix(path, a, b=None, cfg: EncodingConfig = EncodingConfig(), kind: str | None = None,
                       jobs: int = 1) -> tuple[GramMatrix, bool]:
    """:func:`gram_matrix` backed by a dump file at ``path``.

    An existing dump is reused only when its kind and its config, row and
    column digests all match the request; otherwise the matrix is computed
    and the dump rewritten. Returns ``(gram, reused)``.
    """
    path = Path(path)
    a = np.asarray(a, dtype=float)
    b_arr = a if b is None else np.asarray(b, dtype=float)
    want_kind = kind or ("train-train" if b is None else "test-train")
    if path.exists():
        try:
            g = load_gram(path)
        except FormatError:
            g = None
        if g is not None and (g.kind, g.config_digest, g.row_digest, g.col_digest) == (
            want_kind,
            cfg.digest(),
            array_digest(a),
            array_digest(b_arr),
        ):
            return g, True
    g = gram_matrix(a, b, cfg=cfg, kind=want_kind, jobs=jobs)
    save_gram(g, path)
    return g, False


def export_gram_csv(g: GramMatrix, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# kind={g.kind} rows={g.rows} cols={g.cols} config={g.config_digest} dataset={g.dataset_digest}\n")
        np.savetxt(fh, g.values, delimiter=",", fmt="%.17g")
    return path
