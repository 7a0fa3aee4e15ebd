"""
Fidelity kernel and its Gram matrix
===================================

k(x, y) = |<phi(x)|phi(y)>|^2. A Gram matrix simulates each point once and
takes inner products of the cached states, then validation checks the
properties a kernel must have.
"""

import numpy as np

from qkemotion.featuremap import EncodingConfig
from qkemotion.kernel import gram_matrix, kernel_value, validate_gram

one_qubit = EncodingConfig(n_qubits=1)

# hand-checkable single-qubit values
print("k(|1>, |0>)  =", kernel_value([np.pi, 0], [0, 0], one_qubit))
print("k(|+>, |->)  =", kernel_value([np.pi / 2, 0], [np.pi / 2, np.pi], one_qubit))
print("cos^2(0.4)   =", np.cos(0.4) ** 2, "vs", kernel_value([1.0, 0], [0.2, 0], one_qubit))

rng = np.random.default_rng(0)
X = rng.normal(size=(200, 8))
G = gram_matrix(X)
print(G.values[:4, :4].round(3))

report = validate_gram(G)
print(report.summary())

# a matrix that is not a kernel fails the PSD check
bad = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
print(validate_gram(bad).summary())
