"""Frame-reaching and quadrotor-flip trajectory problems in every orientation chart.

A problem's state is a flat vector ``[pre, r, post]`` where ``r`` is the
orientation in chart coordinates and ``pre``/``post`` are the Euclidean parts
of the underlying state (``[] / omega`` for the frame, ``p / v, omega`` for the
quadrotor).  Dynamics always integrate on SO(3):
``z' = encode(step(decode(z), u))``.  Linearizations are obtained from the
SO(3) ones through the chart's tangent maps.

Every chart optimizes its own orientation error; :meth:`monitor` evaluates
the common geodesic task cost so results are comparable across charts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .charts import Chart, SO3Chart, make_chart
from .dynamics import (
    QuadrotorParams,
    StateFrame,
    StateQuad,
    frame_linearize,
    hover_control,
    quad_linearize,
    quad_step_arrays,
)
from .ilqr import ControlBounds, Problem
from .representations import Parameterization
from .so3 import exp_so3, oplus_right, random_rotation


@dataclass
class FrameTask:
    """Reach ``R_goal`` at rest after ``horizon`` steps; ``u`` is angular acceleration."""

    R_start: np.ndarray
    R_goal: np.ndarray
    dt: float = 0.02
    horizon: int = 200
    w_u: float = 0.01
    w_R: float = 100.0
    w_omega: float = 10.0

    @property
    def x0(self) -> StateFrame:
        return StateFrame.at_rest(self.R_start)


@dataclass
class QuadFlipTask:
    """Track a full roll ``exp(2 pi t / T e_x)`` and return to ``p_goal``."""

    params: QuadrotorParams = field(default_factory=QuadrotorParams)
    horizon: int = 200
    w_R: float = 10.0
    w_u: float = 1e-3
    w_p: float = 100.0
    p_goal: np.ndarray = field(default_factory=lambda: np.zeros(3))
    thrust_max: float = 40.0
    torque_max: tuple[float, float, float] = (5.0, 5.0, 5.0)

    @property
    def x0(self) -> StateQuad:
        return StateQuad.at_rest()

    def reference(self, k: int) -> np.ndarray:
        return exp_so3(np.array([2.0 * math.pi * k / self.horizon, 0.0, 0.0]))

    @property
    def bounds(self) -> ControlBounds:
        return ControlBounds(
            np.array([0.0, *(-t for t in self.torque_max)]),
            np.array([self.thrust_max, *self.torque_max]),
        )


def random_frame_task(rng: np.random.Generator, **kwargs) -> FrameTask:
    return FrameTask(random_rotation(rng), random_rotation(rng), **kwargs)


class RepresentationProblem(Problem):
    """iLQR problem for a task expressed in one orientation chart."""

    nonnegative_costs = True

    def __init__(self, task, chart: Chart | Parameterization | str):
        self.task = task
        self.chart = chart if isinstance(chart, Chart) else make_chart(chart)
        c = self.chart
        if isinstance(task, FrameTask):
            self.kind = StateFrame
            self.n_pre, self.n_post = 0, 3
            self.nu = 3
            self.bounds = None
            self._refs = [None] * task.horizon + [c.encode(task.R_goal)]
        elif isinstance(task, QuadFlipTask):
            self.kind = StateQuad
            self.n_pre, self.n_post = 3, 6
            self.nu = 4
            self.bounds = task.bounds
            self._refs = [c.encode(task.reference(k)) for k in range(task.horizon + 1)]
        else:
            raise TypeError(f"unsupported task {type(task).__name__}")
        self.horizon = task.horizon
        self.nx = self.n_pre + c.tdim + self.n_post
        self._r = slice(self.n_pre, self.n_pre + c.dim)
        self._post = slice(self.n_pre + c.dim, None)
        self._dr = slice(self.n_pre, self.n_pre + c.tdim)
        self._identity_chart = c.identity_tangent
        self._so3 = None
        n3 = self.n_pre + 3 + self.n_post
        self._template_S = np.zeros((n3, self.nx))
        self._template_F = np.zeros((self.nx, n3))
        for M in (self._template_S, self._template_F):
            rows, cols = M.shape
            for i in range(self.n_pre):
                M[i, i] = 1.0
            for i in range(self.n_post):
                M[rows - self.n_post + i, cols - self.n_post + i] = 1.0

    # ---------------------------------------------------------------- coordinates

    def encode(self, x) -> np.ndarray:
        r = self.chart.encode(x.R)
        if self.kind is StateFrame:
            return np.concatenate((r, x.omega))
        return np.concatenate((x.p, r, x.v, x.omega))

    def decode(self, z):
        R = self.chart.decode(z[self._r])
        post = z[self._post]
        if self.kind is StateFrame:
            return StateFrame(R, post)
        return StateQuad(z[:3], R, post[:3], post[3:])

    @property
    def x0(self) -> np.ndarray:
        return self.encode(self.task.x0)

    def diff(self, z, z_bar):
        out = np.empty(self.nx)
        out[: self.n_pre] = z[: self.n_pre] - z_bar[: self.n_pre]
        out[self._dr] = self.chart.diff(z[self._r], z_bar[self._r])
        out[self.n_pre + self.chart.tdim :] = z[self._post] - z_bar[self._post]
        return out

    def plus(self, z_bar, d):
        out = np.array(z_bar, dtype=float)
        out[: self.n_pre] += d[: self.n_pre]
        out[self._r] = self.chart.plus(z_bar[self._r], d[self._dr])
        out[self._post] += d[self.n_pre + self.chart.tdim :]
        return out

    # ---------------------------------------------------------------- dynamics

    def step(self, z, u, k):
        if self.kind is StateFrame:
            omega = z[self._post] + u * self.task.dt
            R = oplus_right(self.chart.decode(z[self._r]), omega * self.task.dt)
            return np.concatenate((self.chart.encode(R), omega))
        post = z[self._post]
        p, R, v, w = quad_step_arrays(z[:3], self.chart.decode(z[self._r]), post[:3], post[3:], u, self.task.params)
        return np.concatenate((p, self.chart.encode(R), v, w))

    def linearize(self, z, u, k, z_next=None):
        x = self.decode(z)
        if self.kind is StateFrame:
            lin = frame_linearize(x, u, self.task.dt)
        else:
            lin = quad_linearize(x, u, self.task.params)
        if self._identity_chart:
            return lin.A, lin.B
        if z_next is None:
            z_next = self.step(z, u, k)
        S = self._expand(self.chart.to_tangent(z[self._r]), tangent_side=False)
        F = self._expand(self.chart.from_tangent(z_next[self._r]), tangent_side=True)
        return F @ lin.A @ S, F @ lin.B

    def _expand(self, block: np.ndarray, tangent_side: bool) -> np.ndarray:
        # embed a chart block between the identity blocks of the Euclidean parts
        n = self.n_pre
        if tangent_side:
            M = self._template_F.copy()
            M[self._dr, n : n + 3] = block
        else:
            M = self._template_S.copy()
            M[n : n + 3, self._dr] = block
        return M

    # ---------------------------------------------------------------- costs

    def stage_cost(self, z, u, k):
        t = self.task
        c = t.w_u * float(u @ u)
        if self.kind is StateQuad:
            e = self.chart.residual(z[self._r], self._refs[k])
            c += t.w_R * float(e @ e)
        return c

    def stage_expansion(self, z, u, k):
        t = self.task
        lx = np.zeros(self.nx)
        lxx = np.zeros((self.nx, self.nx))
        if self.kind is StateQuad:
            e, J = self.chart.error(z[self._r], self._refs[k])
            lx[self._dr] = 2.0 * t.w_R * (J.T @ e)
            lxx[self._dr, self._dr] = 2.0 * t.w_R * (J.T @ J)
        lu = 2.0 * t.w_u * np.asarray(u, dtype=float)
        luu = 2.0 * t.w_u * np.eye(self.nu)
        return lx, lu, lxx, luu, np.zeros((self.nu, self.nx))

    def terminal_cost(self, z):
        t = self.task
        e = self.chart.residual(z[self._r], self._refs[-1])
        c = t.w_R * float(e @ e)
        if self.kind is StateFrame:
            w = z[self._post]
            return c + t.w_omega * float(w @ w)
        dp = z[:3] - t.p_goal
        return c + t.w_p * float(dp @ dp)

    def terminal_expansion(self, z):
        t = self.task
        lx = np.zeros(self.nx)
        lxx = np.zeros((self.nx, self.nx))
        e, J = self.chart.error(z[self._r], self._refs[-1])
        lx[self._dr] = 2.0 * t.w_R * (J.T @ e)
        lxx[self._dr, self._dr] = 2.0 * t.w_R * (J.T @ J)
        if self.kind is StateFrame:
            w = z[self._post]
            lx[self._dr.stop :] = 2.0 * t.w_omega * w
            lxx[self._dr.stop :, self._dr.stop :] = 2.0 * t.w_omega * np.eye(3)
        else:
            lx[:3] = 2.0 * t.w_p * (z[:3] - t.p_goal)
            lxx[:3, :3] = 2.0 * t.w_p * np.eye(3)
        return lx, lxx

    def monitor(self, zs, us) -> float:
        """Geodesic task cost of the trajectory, identical across charts."""
        if isinstance(self.chart, SO3Chart):
            return self.total_cost(zs, us)
        if self._so3 is None:
            self._so3 = RepresentationProblem(self.task, SO3Chart())
        return self._so3.total_cost([self._so3.encode(self.decode(z)) for z in zs], us)


def task_cost(task, states, us) -> float:
    """Cost of a decoded trajectory measured with geodesic orientation errors."""
    so3 = RepresentationProblem(task, SO3Chart())
    zs = [so3.encode(x) for x in states]
    return so3.total_cost(zs, us)


def hover_controls(task: QuadFlipTask) -> np.ndarray:
    u = hover_control(task.x0, task.params)
    return np.tile(u, (task.horizon, 1))
