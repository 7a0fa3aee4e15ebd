"""
Soft-margin SVM on a precomputed kernel
=======================================

The dual is solved by sequential minimal optimization. Two tiny problems
have closed-form answers; a planted decision function in the quantum
feature space shows the full train/predict loop.
"""

import numpy as np

from qkemotion.kernel import gram_matrix
from qkemotion.svm import SvmConfig, decision_function, kkt_violation, predict, train

# K = I with opposite labels: alpha = (1, 1), b = 0
m = train(np.eye(2), [1, -1], SvmConfig(c=10))
print("alphas", m.alphas, "bias", m.bias)
print("f at a copy of point 1:", decision_function(m, [[1.0, 0.0]]))

# one point with both labels: both multipliers sit at the box limit C
m = train(np.ones((2, 2)), [1, -1], SvmConfig(c=0.5))
print("alphas pinned at C:", m.alphas)

# labels from a planted function of the fidelity kernel
rng = np.random.default_rng(1)
X = rng.uniform(-np.pi, np.pi, size=(1000, 8))
anchors = rng.uniform(-np.pi, np.pi, size=(10, 8))
f = gram_matrix(X, anchors).values @ rng.normal(size=10)
y = np.where(f >= np.median(f), 1, -1)

Xtr, ytr, Xte, yte = X[:800], y[:800], X[800:], y[800:]
G = gram_matrix(Xtr)
model = train(G, ytr, SvmConfig(c=10))
print("support vectors:", model.support_indices.size, "iterations:", model.iterations)
print("largest KKT residual:", kkt_violation(model, G))
pred = predict(model, gram_matrix(Xte, Xtr, kind="test-train"))
print("held-out accuracy:", np.mean(pred == yte))
