"""
Classical baselines against the quantum-kernel SVM
==================================================

A reduced version of the default experiment: every fold trains six classical
models at one budget and the quantum-kernel SVM at two. The defaults
(39 participants, 2000 classical samples, 640/160 and 1600/400 quantum
samples) are what ``qkemotion run`` uses.
"""

from qkemotion.experiment import ExperimentConfig, run_experiment

cfg = ExperimentConfig.from_dict(
    {"n_participants": 10, "classical_budget": 500, "quantum_budgets": [[160, 40], [400, 100]]}
)
result = run_experiment(cfg, write=False)
print(result.classical_table)
print(result.quantum_table)
print("report digest:", result.digest())
