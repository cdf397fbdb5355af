"""Replicated benchmark runs with deterministic seeding and CSV/JSON reports.

Each replicate draws its randomness from a child of ``SeedSequence(seed)``,
so results do not depend on how replicates are scheduled.  Replicates may
run in worker processes (``ORIENTBENCH_WORKERS`` caps their number); the
output order is always replicate-major.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .charts import ILQR_PARAMETERIZATIONS
from .config import BenchConfig, dump_config
from .ilqr import solve_ilqr
from .representations import Parameterization
from .tasks import FrameTask, QuadFlipTask, RepresentationProblem, hover_controls
from .so3 import random_rotation
from .trace import ConvergenceTrace
from .wahba import gauss_newton_solve, generate_instance, solve_svd

WORKERS_ENV = "ORIENTBENCH_WORKERS"
CSV_COLUMNS = ("replicate", "representation", "iteration", "error_or_cost", "wall_time_s", "converged")
WAHBA_PARAMETERIZATIONS = tuple(Parameterization)


@dataclass
class BenchmarkReport:
    scenario: str
    seed: int
    representations: tuple[Parameterization, ...]
    max_iters: int
    # traces[rep][replicate]
    traces: dict[Parameterization, list[ConvergenceTrace]]
    metadata: dict = field(default_factory=dict)

    @property
    def replicates(self) -> int:
        return len(next(iter(self.traces.values())))

    def matrix(self, rep) -> np.ndarray:
        """``(replicates, max_iters + 1)`` padded values."""
        rep = Parameterization(rep)
        return np.array([t.padded(self.max_iters)[0] for t in self.traces[rep]])

    def finals(self, rep) -> np.ndarray:
        return np.array([t.final for t in self.traces[Parameterization(rep)]])

    def iterations(self, rep) -> np.ndarray:
        return np.array([t.iterations for t in self.traces[Parameterization(rep)]])

    def converged(self, rep) -> np.ndarray:
        return np.array([t.converged for t in self.traces[Parameterization(rep)]])

    def percentiles(self, rep) -> dict[str, np.ndarray]:
        m = self.matrix(rep)
        p25, p50, p75 = np.percentile(m, [25, 50, 75], axis=0)
        return {"p25": p25, "median": p50, "p75": p75}

    # ------------------------------------------------------------ output

    def csv_rows(self, rep, record_wall_time: bool = False):
        rep = Parameterization(rep)
        for i, trace in enumerate(self.traces[rep]):
            values, walls = trace.padded(self.max_iters)
            for k in range(self.max_iters + 1):
                done = trace.converged and k >= trace.iterations
                wall = repr(float(walls[k])) if record_wall_time else ""
                yield (i, rep.value, k, repr(float(values[k])), wall, int(done))

    def summary(self, record_wall_time: bool = False) -> dict:
        out = {
            "scenario": self.scenario,
            "seed": self.seed,
            "replicates": self.replicates,
            "max_iters": self.max_iters,
            "metadata": self.metadata,
            "representations": {},
        }
        for rep in self.representations:
            pct = self.percentiles(rep)
            entry = {k: [float(v) for v in arr] for k, arr in pct.items()}
            entry["final"] = [float(v) for v in self.finals(rep)]
            entry["iterations"] = [int(v) for v in self.iterations(rep)]
            entry["converged_fraction"] = float(np.mean(self.converged(rep)))
            if record_wall_time:
                walls = np.array([t.padded(self.max_iters)[1] for t in self.traces[rep]])
                entry["wall_time_median"] = [float(v) for v in np.median(walls, axis=0)]
            out["representations"][rep.value] = entry
        return out

    def write(self, out_dir, record_wall_time: bool = False) -> list[Path]:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out}: {exc}") from exc
        written = []
        for rep in self.representations:
            path = out / f"{self.scenario}_{rep.value}.csv"
            try:
                with open(path, "w", newline="", encoding="utf-8") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(CSV_COLUMNS)
                    writer.writerows(self.csv_rows(rep, record_wall_time))
            except OSError as exc:
                raise OSError(f"cannot write {path}: {exc}") from exc
            written.append(path)
        path = out / f"{self.scenario}_summary.json"
        try:
            path.write_text(json.dumps(self.summary(record_wall_time), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)
        return written


# ------------------------------------------------------------------ workers


def worker_count(requested: int | None = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    raw = os.environ.get(WORKERS_ENV, "").strip()
    return max(1, int(raw)) if raw else 1


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def _children(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def _collect(scenario, seed, reps, max_iters, per_replicate, metadata) -> BenchmarkReport:
    traces = {rep: [row[j] for row in per_replicate] for j, rep in enumerate(reps)}
    return BenchmarkReport(scenario, seed, reps, max_iters, traces, metadata)


def _parse_reps(reps, allowed) -> tuple[Parameterization, ...]:
    if reps is None:
        return tuple(allowed)
    out = tuple(Parameterization(r) for r in reps)
    bad = [r.value for r in out if r not in allowed]
    if bad:
        raise ValueError(f"unsupported representation(s) for this benchmark: {', '.join(bad)}")
    return out


# ------------------------------------------------------------------ Wahba


def _wahba_replicate(job):
    child, reps, wc = job
    rng = np.random.default_rng(child)
    inst = generate_instance(wc.n_points, rng, wc.noise_sigma)
    R_ref = solve_svd(inst)
    return [gauss_newton_solve(rep, inst, wc.max_iters, wc.tol, R_ref=R_ref)[1] for rep in reps]


def run_wahba(cfg: BenchConfig, reps=None, workers: int | None = None) -> BenchmarkReport:
    wc = cfg.wahba
    if wc.replicates < 1:
        raise ValueError("replicates must be >= 1")
    reps = _parse_reps(reps, WAHBA_PARAMETERIZATIONS)
    jobs = [(c, reps, wc) for c in _children(cfg.seed, wc.replicates)]
    rows = _map(_wahba_replicate, jobs, worker_count(workers))
    meta = {"n_points": wc.n_points, "noise_sigma": wc.noise_sigma, "tol": wc.tol, "init": "identity"}
    return _collect("wahba", cfg.seed, reps, wc.max_iters, rows, meta)


# ------------------------------------------------------------------ iLQR scenarios


def _horizon(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon {T} s is not a whole number of {dt} s steps")
    return n


def frame_scenario(cfg: BenchConfig, child) -> tuple[FrameTask, np.ndarray, int]:
    """Task, initial controls and restart seed of one frame replicate."""
    fc = cfg.frame
    rng = np.random.default_rng(child)
    N = _horizon(fc.horizon_s, fc.dt)
    task = FrameTask(random_rotation(rng), random_rotation(rng), fc.dt, N, fc.w_u, fc.w_R, fc.w_omega)
    u0 = fc.u_init_sigma * rng.normal(size=(N, 3))
    return task, u0, int(rng.integers(2**31))


def quad_scenario(cfg: BenchConfig, child) -> tuple[QuadFlipTask, np.ndarray, int]:
    qc = cfg.quad
    rng = np.random.default_rng(child)
    N = _horizon(qc.horizon_s, qc.dt)
    task = QuadFlipTask(
        params=qc.params(),
        horizon=N,
        w_R=qc.w_R,
        w_u=qc.w_u,
        w_p=qc.w_p,
        thrust_max=qc.thrust_max,
        torque_max=tuple(qc.torque_max),
    )
    sigma = np.array([qc.u_init_sigma, *[qc.torque_init_sigma] * 3])
    u0 = task.bounds.clip(hover_controls(task) + sigma * rng.normal(size=(N, 4)))
    return task, u0, int(rng.integers(2**31))


def _ilqr_replicate(job):
    scenario, child, reps, cfg = job
    if scenario == "frame-ilqr":
        (task, u0, seed), section = frame_scenario(cfg, child), cfg.frame
    else:
        (task, u0, seed), section = quad_scenario(cfg, child), cfg.quad
    traces = []
    for rep in reps:
        problem = RepresentationProblem(task, rep)
        result = solve_ilqr(problem, problem.x0, u0, cfg.ilqr.options(section, seed))
        traces.append(result.trace)
    return traces


def _run_ilqr(scenario: str, cfg: BenchConfig, replicates: int, max_iters: int, reps, workers, meta) -> BenchmarkReport:
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    reps = _parse_reps(reps, ILQR_PARAMETERIZATIONS)
    jobs = [(scenario, c, reps, cfg) for c in _children(cfg.seed, replicates)]
    rows = _map(_ilqr_replicate, jobs, worker_count(workers))
    meta = dict(meta, config=dump_config(cfg))
    return _collect(scenario, cfg.seed, reps, max_iters, rows, meta)


def run_frame_ilqr(cfg: BenchConfig, reps=None, workers: int | None = None) -> BenchmarkReport:
    fc = cfg.frame
    meta = {"T": fc.horizon_s, "dt": fc.dt, "value": "geodesic task cost"}
    return _run_ilqr("frame-ilqr", cfg, fc.replicates, fc.max_iters, reps, workers, meta)


def run_quad_ilqr(cfg: BenchConfig, reps=None, workers: int | None = None) -> BenchmarkReport:
    qc = cfg.quad
    meta = {"T": qc.horizon_s, "dt": qc.dt, "value": "geodesic task cost"}
    return _run_ilqr("quad-ilqr", cfg, qc.replicates, qc.max_iters, reps, workers, meta)
