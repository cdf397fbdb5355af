"""Plan the quadrotor roll with iLQR in two charts and print the attitude error along the way."""

import numpy as np

from orientbench.bench import quad_scenario
from orientbench.config import BenchConfig
from orientbench.ilqr import solve_ilqr
from orientbench.so3 import log_so3
from orientbench.tasks import RepresentationProblem

cfg = BenchConfig()
task, u0, seed = quad_scenario(cfg, np.random.SeedSequence(0))
opts = cfg.ilqr.options(cfg.quad, seed)

for rep in ("so3", "euler"):
    problem = RepresentationProblem(task, rep)
    result = solve_ilqr(problem, problem.x0, u0, opts)
    states = [problem.decode(z) for z in result.trajectory.xs]
    err = [np.linalg.norm(log_so3(task.reference(k).T @ x.R)) for k, x in enumerate(states)]
    print(f"{rep}: cost {result.trace.final:.2f} after {result.trace.iterations} iterations")
    for k in range(0, task.horizon + 1, 25):
        print(f"  t={k * task.params.dt:4.2f}s  attitude error {np.degrees(err[k]):7.2f} deg  thrust {result.trajectory.us[min(k, task.horizon - 1), 0]:6.2f} N")
