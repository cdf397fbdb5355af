"""Solve one noisy Wahba instance in every parameterization and compare to SVD."""

import numpy as np

from orientbench.distances import dist_geodesic
from orientbench.representations import Parameterization
from orientbench.wahba import gauss_newton_solve, generate_instance, solve_svd

inst = generate_instance(100, seed=7, noise_sigma=0.01)
R_svd = solve_svd(inst)
print(f"SVD solution is {np.degrees(dist_geodesic(R_svd, inst.R_true)):.3f} deg from the true rotation\n")
print(f"{'parameterization':<18}{'iters':>6}{'error vs SVD [rad]':>22}")
for par in Parameterization:
    _, trace = gauss_newton_solve(par, inst, max_iters=30)
    print(f"{par.value:<18}{trace.iterations:>6}{trace.final:>22.3e}")
