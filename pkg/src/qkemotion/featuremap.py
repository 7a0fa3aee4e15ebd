"""Dense angle encoding: two features per qubit followed by a CNOT chain."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError
from .statevector import CNOT, U3, Circuit, run_circuit

ANGLE_SLOTS = ("theta", "phi", "lambda")
ENTANGLEMENTS = ("linear-chain",)


@dataclass(frozen=True)
class EncodingConfig:
    """Shape of the encoding circuit.

    Attributes:
        n_qubits: Qubits in the register; the circuit consumes ``2 * n_qubits`` features.
        n_layers: Repetitions of the rotation + entanglement block. Every layer
            re-encodes the same features.
        angle_clip: Features are clamped to ``[-angle_clip, angle_clip]`` before use.
        entanglement: CNOT topology. Only a nearest-neighbour chain without
            wrap-around is supported.
        axis_schedule: Which two U3 angle slots receive features ``2q`` and
            ``2q + 1``. The remaining slot is held at zero.
    """

    n_qubits: int = 4
    n_layers: int = 1
    angle_clip: float = float(np.pi)
    entanglement: str = "linear-chain"
    axis_schedule: tuple[str, str] = ("theta", "phi")

    def __post_init__(self):
        object.__setattr__(self, "axis_schedule", tuple(self.axis_schedule))
        if not isinstance(self.n_qubits, (int, np.integer)) or self.n_qubits < 1:
            raise ConfigurationError(f"n_qubits must be a positive integer, got {self.n_qubits!r}")
        if not isinstance(self.n_layers, (int, np.integer)) or self.n_layers < 1:
            raise ConfigurationError(f"n_layers must be a positive integer, got {self.n_layers!r}")
        if not self.angle_clip > 0:
            raise ConfigurationError(f"angle_clip must be positive, got {self.angle_clip!r}")
        if self.entanglement not in ENTANGLEMENTS:
            raise ConfigurationError(f"unknown entanglement {self.entanglement!r}")
        if len(self.axis_schedule) != 2 or any(s not in ANGLE_SLOTS for s in self.axis_schedule):
            raise ConfigurationError(f"axis_schedule must name two of {ANGLE_SLOTS}")
        if self.axis_schedule[0] == self.axis_schedule[1]:
            raise ConfigurationError("axis_schedule slots must be distinct")

    @property
    def n_features(self) -> int:
        return 2 * self.n_qubits

    def to_dict(self) -> dict:
        d = asdict(self)
        d["axis_schedule"] = list(self.axis_schedule)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def clip_angles(x, cfg: EncodingConfig) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), -cfg.angle_clip, cfg.angle_clip)


def _check_features(x, cfg):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != cfg.n_features:
        raise ShapeError(
            f"feature vector has shape {x.shape}; encoding needs {cfg.n_features} "
            f"= 2 * n_qubits({cfg.n_qubits}) values"
        )
    if not np.all(np.isfinite(x)):
        raise ShapeError("feature vector contains non-finite values")
    return x


def build_encoding_circuit(x, cfg: EncodingConfig = EncodingConfig()) -> Circuit:
    """Build ``U(x)`` for one feature vector.

    Each layer puts ``U3`` on every qubit ``q`` with features ``x[2q]`` and
    ``x[2q+1]`` in the two scheduled angle slots, then applies
    ``CNOT(q, q+1)`` for ``q = 0 .. n_qubits - 2``.
    """
    x = clip_angles(_check_features(x, cfg), cfg)
    first, second = (ANGLE_SLOTS.index(s) for s in cfg.axis_schedule)
    gates = []
    for _ in range(cfg.n_layers):
        for q in range(cfg.n_qubits):
            angles = [0.0, 0.0, 0.0]
            angles[first] = float(x[2 * q])
            angles[second] = float(x[2 * q + 1])
            gates.append(U3(*angles, target=q))
        for q in range(cfg.n_qubits - 1):
            gates.append(CNOT(q, q + 1))
    return Circuit(cfg.n_qubits, tuple(gates))


def encode(x, cfg: EncodingConfig = EncodingConfig()) -> np.ndarray:
    """Return the statevector ``U(x)|0...0>``."""
    return run_circuit(build_encoding_circuit(x, cfg))


def encode_batch(X, cfg: EncodingConfig = EncodingConfig()) -> np.ndarray:
    """Encode every row of ``X``; one circuit simulation per row."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-D feature matrix, got shape {X.shape}")
    out = np.empty((X.shape[0], 1 << cfg.n_qubits), dtype=np.complex128)
    for i, row in enumerate(X):
        out[i] = encode(row, cfg)
    return out
