"""
Encoding feature vectors as quantum states
==========================================

Each qubit receives one U3 rotation whose theta and phi angles are two
consecutive features; a chain of CNOTs then entangles neighbours. Eight
features therefore fill a four-qubit register.
"""

import numpy as np

from qkemotion.featuremap import EncodingConfig, build_encoding_circuit, encode
from qkemotion.statevector import norm_squared

x = np.array([0.4, -1.1, 2.0, 0.3, -0.7, 1.6, 0.0, 2.9])

# the circuit: four rotations then CNOT(0,1), CNOT(1,2), CNOT(2,3)
circuit = build_encoding_circuit(x)
for gate in circuit.gates:
    print(gate)

# 16 amplitudes, qubit 0 is the least significant bit of the index
state = encode(x)
print("amplitudes:", np.round(state, 3))
print("norm:", norm_squared(state))

# angles are clipped to [-pi, pi], so far-out features share a state
far = x.copy()
far[0] = 40.0
clipped = x.copy()
clipped[0] = np.pi
print("clipping collapses 40 and pi:", np.allclose(encode(far), encode(clipped)))

# deeper maps repeat the same block
print("gates with 3 layers:", len(build_encoding_circuit(x, EncodingConfig(n_layers=3))))
