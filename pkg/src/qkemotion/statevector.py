"""Dense statevector simulation for circuits built from U3 and CNOT gates.

States are plain ``complex128`` numpy arrays of length ``2**n_qubits``.
Basis index ``k`` stores qubit ``q`` in bit ``q`` of ``k`` (little-endian,
qubit 0 is the least-significant bit).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import ConfigurationError, ShapeError

MAX_QUBITS = 20


@dataclass(frozen=True)
class U3:
    theta: float
    phi: float
    lam: float
    target: int

    def qubits(self) -> tuple[int, ...]:
        return (self.target,)


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ConfigurationError(f"CNOT control and target are both qubit {self.target}")

    def qubits(self) -> tuple[int, ...]:
        return (self.control, self.target)


Gate = Union[U3, CNOT]


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list acting on ``n_qubits`` qubits."""

    n_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        object.__setattr__(self, "gates", tuple(self.gates))
        for gate in self.gates:
            for q in gate.qubits():
                if not 0 <= q < self.n_qubits:
                    raise IndexError(f"{gate} addresses qubit {q} outside 0..{self.n_qubits - 1}")

    def __len__(self):
        return len(self.gates)


class _Counter:
    def __init__(self):
        self._lock = threading.Lock()
        self.value = 0

    def increment(self):
        with self._lock:
            self.value += 1

    def reset(self):
        with self._lock:
            self.value = 0


_simulations = _Counter()


def simulation_count() -> int:
    """Number of :func:`run_circuit` calls since the last reset."""
    return _simulations.value


def reset_simulation_count() -> None:
    _simulations.reset()


def _check_n_qubits(n_qubits):
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be an integer in 1..{MAX_QUBITS}, got {n_qubits!r}")


def _n_qubits_of(state: np.ndarray) -> int:
    size = state.shape[0]
    n = size.bit_length() - 1
    if state.ndim != 1 or size < 2 or (1 << n) != size:
        raise ShapeError(f"statevector length must be a power of two >= 2, got shape {state.shape}")
    return n


def _check_target(state, *qubits):
    n = _n_qubits_of(state)
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} outside 0..{n - 1}")
    return n


def zero_state(n_qubits: int) -> np.ndarray:
    """Return ``|0...0>`` on ``n_qubits`` qubits."""
    _check_n_qubits(n_qubits)
    state = np.zeros(1 << n_qubits, dtype=np.complex128)
    state[0] = 1.0
    return state


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c = np.cos(theta / 2)
    s = np.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=np.complex128,
    )


def apply_u3(state: np.ndarray, theta: float, phi: float, lam: float, target: int) -> np.ndarray:
    """Apply ``U3(theta, phi, lam)`` to qubit ``target`` and return a new state."""
    _check_target(state, target)
    m = u3_matrix(theta, phi, lam)
    # axis 1 of the view is the target qubit's bit
    psi = state.reshape(-1, 2, 1 << target)
    out = np.empty_like(psi)
    a0 = psi[:, 0, :]
    a1 = psi[:, 1, :]
    out[:, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    out[:, 1, :] = m[1, 0] * a0 + m[1, 1] * a1
    return out.reshape(-1)


@lru_cache(maxsize=256)
def _cnot_permutation(n_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    return np.where((idx >> control) & 1, idx ^ (1 << target), idx)


def apply_cnot(state: np.ndarray, control: int, target: int) -> np.ndarray:
    """Flip ``target`` on every basis state whose ``control`` bit is set."""
    if control == target:
        raise ConfigurationError(f"CNOT control and target are both qubit {target}")
    n = _check_target(state, control, target)
    return state[_cnot_permutation(n, control, target)]


def run_circuit(circuit: Circuit) -> np.ndarray:
    """Apply every gate of ``circuit`` in order to ``|0...0>``."""
    _simulations.increment()
    state = zero_state(circuit.n_qubits)
    for gate in circuit.gates:
        if isinstance(gate, U3):
            state = apply_u3(state, gate.theta, gate.phi, gate.lam, gate.target)
        elif isinstance(gate, CNOT):
            state = apply_cnot(state, gate.control, gate.target)
        else:
            raise TypeError(f"unsupported gate {gate!r}")
    if not np.all(np.isfinite(state)):
        raise ConfigurationError("non-finite amplitude produced; check gate angles")
    return state


def inner_product(a: np.ndarray, b: np.ndarray) -> complex:
    """Return ``<a|b> = sum(conj(a_k) * b_k)``."""
    if a.shape != b.shape:
        raise ShapeError(f"statevector shapes differ: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def norm_squared(state: np.ndarray) -> float:
    return float(np.sum(state.real**2 + state.imag**2))
