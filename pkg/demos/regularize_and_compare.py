"""Smooth a square under regularized square anisotropies and compare the
smooth flow with the crystalline flow at t = 0.2 (reduced resolution)."""

from anisoflow.harness import ExperimentConfig, run_convergence_study

SQUARE = {"kind": "crystalline", "wulff_vertices": [[1, -1], [1, 1], [-1, 1], [-1, -1]]}
CURVE = {"type": "crystal", "anchor": [1, -1],
         "facets": [{"normal_index": k, "length": 2.0} for k in range(4)]}

cfg = ExperimentConfig(kind="convergence-study", anisotropy=SQUARE, curve=CURVE,
                       epsilons=(0.2, 0.1), checkpoints=(0.1, 0.2), study_n=256,
                       study_dt=5e-4)
table = run_convergence_study(cfg)
print(table.to_csv())
