"""Independent reference computations used by the test-suite.

None of these share code paths with the package implementations they check.
"""

import itertools
from functools import reduce

import numpy as np

from qkemotion.statevector import CNOT, U3

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)


def _kron_qubits(ops):
    # ops[q] acts on qubit q; qubit 0 is the rightmost (least significant) factor
    return reduce(np.kron, reversed(ops))


def single_qubit_u3(theta, phi, lam):
    return np.array(
        [
            [np.cos(theta / 2), -np.exp(1j * lam) * np.sin(theta / 2)],
            [np.exp(1j * phi) * np.sin(theta / 2), np.exp(1j * (phi + lam)) * np.cos(theta / 2)],
        ]
    )


def gate_unitary(gate, n):
    if isinstance(gate, U3):
        ops = [I2] * n
        ops[gate.target] = single_qubit_u3(gate.theta, gate.phi, gate.lam)
        return _kron_qubits(ops)
    if isinstance(gate, CNOT):
        off = [I2] * n
        off[gate.control] = P0
        on = [I2] * n
        on[gate.control] = P1
        on[gate.target] = X
        return _kron_qubits(off) + _kron_qubits(on)
    raise TypeError(gate)


def circuit_unitary(circuit):
    dim = 2**circuit.n_qubits
    U = np.eye(dim, dtype=complex)
    for gate in circuit.gates:
        U = gate_unitary(gate, circuit.n_qubits) @ U
    return U


def oracle_state(circuit):
    zero = np.zeros(2**circuit.n_qubits, dtype=complex)
    zero[0] = 1
    return circuit_unitary(circuit) @ zero


def random_circuit(rng, max_qubits=3, max_gates=20):
    from qkemotion.statevector import Circuit

    n = int(rng.integers(1, max_qubits + 1))
    gates = []
    for _ in range(int(rng.integers(0, max_gates + 1))):
        if n >= 2 and rng.random() < 0.4:
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(CNOT(int(c), int(t)))
        else:
            theta, phi, lam = rng.uniform(-2 * np.pi, 2 * np.pi, size=3)
            gates.append(U3(theta, phi, lam, int(rng.integers(n))))
    return Circuit(n, tuple(gates))


def svm_dual_bruteforce(K, y, C):
    """Optimum of the SVM dual by enumerating every active set.

    Each alpha is pinned at 0, pinned at C, or free; the free block solves
    the equality-constrained stationarity system. The best feasible
    candidate is the global optimum for a positive definite ``K``.
    Returns ``(objective, alphas)``.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    Q = K * np.outer(y, y)
    best, best_alpha = -np.inf, None
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pattern = np.array(pattern)
        alpha = np.where(pattern == 1, C, 0.0)
        free = np.flatnonzero(pattern == 2)
        fixed = np.flatnonzero(pattern != 2)
        if free.size == 0:
            if abs(y @ alpha) > 1e-12:
                continue
        else:
            m = free.size
            A = np.zeros((m + 1, m + 1))
            A[:m, :m] = Q[np.ix_(free, free)]
            A[:m, m] = y[free]
            A[m, :m] = y[free]
            rhs = np.empty(m + 1)
            rhs[:m] = 1.0 - Q[np.ix_(free, fixed)] @ alpha[fixed]
            rhs[m] = -y[fixed] @ alpha[fixed]
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.allclose(A @ sol, rhs, atol=1e-9):
                continue
            af = sol[:m]
            if np.any(af < -1e-12) or np.any(af > C + 1e-12):
                continue
            alpha[free] = np.clip(af, 0, C)
        obj = alpha.sum() - 0.5 * alpha @ Q @ alpha
        if obj > best:
            best, best_alpha = obj, alpha
    return best, best_alpha


def knn_bruteforce(Xtr, ytr, Xte, k=3):
    preds = []
    for x in Xte:
        d = np.sqrt(((Xtr - x) ** 2).sum(axis=1))
        nearest = np.argsort(d, kind="stable")[:k]
        votes = np.bincount(ytr[nearest], minlength=2)
        preds.append(int(np.argmax(votes)))
    return np.array(preds)


def random_pd_kernel(rng, n):
    F = rng.normal(size=(n, n + 3))
    K = F @ F.T / (n + 3)
    return K
