"""Invariant and oracle checks shared by ``orientbench selftest`` and the test suite.

Every check draws its samples from ``default_rng(seed)`` and returns a
:class:`CheckResult` holding the worst observed value and the tolerance it
was held to.  Sample counts are arguments so the same code runs as a quick
self test or at full size.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .dynamics import (
    QuadrotorParams,
    StateFrame,
    StateQuad,
    finite_diff_linearize,
    frame_linearize,
    frame_step,
    quad_linearize,
    quad_step,
)
from .ilqr import (
    ControlBounds,
    ILQROptions,
    LinearQuadraticProblem,
    boxqp,
    kkt_residual,
    riccati_lqr,
    solve_ilqr,
)
from .representations import (
    Parameterization,
    attitude_jacobian,
    quat_exp,
    quat_mul,
    quat_to_rotation,
    random_quat,
)
from .so3 import (
    adjoint,
    exp_so3,
    hat,
    left_jacobian,
    log_so3,
    ominus_right,
    oplus_right,
    random_rotation,
    right_jacobian,
    right_jacobian_inv,
)
from .wahba import (
    _quat_point_jacobian,
    generate_instance,
    initial_params,
    residual,
    residual_jacobian,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    worst: float
    tol: float
    samples: int
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tol)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} worst={self.worst:.3e}  tol={self.tol:.0e}  n={self.samples}  {self.seconds:.2f}s"


def _timed(name: str, tol: float, samples: int, fn) -> CheckResult:
    t0 = time.perf_counter()
    worst = float(fn())
    return CheckResult(name, worst, tol, samples, time.perf_counter() - t0)


def _tangent(rng, max_angle: float = math.pi - 1e-3) -> np.ndarray:
    # uniform direction, angle uniform in [0, max_angle)
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    return axis * rng.uniform(0.0, max_angle)


def _relative(J, J_ref) -> float:
    scale = max(float(np.max(np.abs(J_ref))), 1e-12)
    return float(np.max(np.abs(np.asarray(J) - J_ref))) / scale


# ------------------------------------------------------------------ algebra


def check_group_laws(n: int, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """Closure, associativity, identity and inverse on random rotations."""

    def run():
        rng = np.random.default_rng(seed)
        I = np.eye(3)
        worst = 0.0
        for _ in range(n):
            A, B, C = random_rotation(rng), random_rotation(rng), random_rotation(rng)
            AB = A @ B
            worst = max(
                worst,
                np.abs(AB.T @ AB - I).max(),
                abs(np.linalg.det(AB) - 1.0),
                np.abs(AB @ C - A @ (B @ C)).max(),
                np.abs(A @ I - A).max(),
                np.abs(A @ A.T - I).max(),
            )
        return worst

    return _timed("group laws", tol, n, run)


def check_exp_log(n: int, seed: int = 1, tol: float = 1e-10) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            phi = _tangent(rng)
            R = random_rotation(rng)
            worst = max(
                worst,
                np.abs(log_so3(exp_so3(phi)) - phi).max(),
                np.abs(exp_so3(log_so3(R)) - R).max(),
            )
        return worst

    return _timed("exp/log roundtrip", tol, n, run)


def check_plus_minus(n: int, seed: int = 2, tol: float = 1e-10) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            R1, R2 = random_rotation(rng), random_rotation(rng)
            d = _tangent(rng)
            worst = max(
                worst,
                np.abs(ominus_right(oplus_right(R1, d), R1) - d).max(),
                np.abs(oplus_right(R1, ominus_right(R2, R1)) - R2).max(),
            )
        return worst

    return _timed("plus/minus inverse pair", tol, n, run)


def check_adjoint(n: int, seed: int = 3, tol: float = 1e-12) -> CheckResult:
    """``R exp(phi) = exp(Ad_R phi) R`` and ``R hat(phi) R^T = hat(Ad_R phi)``."""

    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            R = random_rotation(rng)
            phi = _tangent(rng)
            Ad = adjoint(R)
            worst = max(
                worst,
                np.abs(R @ exp_so3(phi) - exp_so3(Ad @ phi) @ R).max(),
                np.abs(R @ hat(phi) @ R.T - hat(Ad @ phi)).max(),
            )
        return worst

    return _timed("adjoint identity", tol, n, run)


def check_quat_homomorphism(n: int, seed: int = 4, tol: float = 1e-12) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            q1, q2 = random_quat(rng), random_quat(rng)
            lhs = quat_to_rotation(quat_mul(q2, q1))
            worst = max(worst, np.abs(lhs - quat_to_rotation(q2) @ quat_to_rotation(q1)).max())
        return worst

    return _timed("quaternion homomorphism", tol, n, run)


def algebra_checks(n: int, seed: int = 0) -> list[CheckResult]:
    return [
        check_group_laws(n, seed),
        check_exp_log(n, seed + 1),
        check_plus_minus(n, seed + 2),
        check_adjoint(n, seed + 3),
        check_quat_homomorphism(n, seed + 4),
    ]


# ------------------------------------------------------------------ Jacobians


def _fd_columns(f, x, eps: float) -> np.ndarray:
    # central differences of a vector-valued f around x
    cols = []
    for e in np.eye(len(x)) * eps:
        cols.append((f(x + e) - f(x - e)) / (2.0 * eps))
    return np.column_stack(cols)


def check_right_jacobians(n: int, seed: int = 10, tol: float = 1e-5, eps: float = 1e-6) -> CheckResult:
    """``J_r``, ``J_l`` and ``J_r^-1`` against central differences of exp and log."""

    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            phi = _tangent(rng, 3.0)
            R = exp_so3(phi)
            fd_r = _fd_columns(lambda p: ominus_right(exp_so3(p), R), phi, eps)
            fd_l = _fd_columns(lambda p: log_so3(exp_so3(p) @ R.T), phi, eps)
            fd_inv = _fd_columns(lambda d: log_so3(R @ exp_so3(d)), np.zeros(3), eps)
            worst = max(
                worst,
                _relative(right_jacobian(phi), fd_r),
                _relative(left_jacobian(phi), fd_l),
                _relative(right_jacobian_inv(phi), fd_inv),
            )
        return worst

    return _timed("SO(3) Jacobians", tol, n, run)


def check_attitude_gradient(n: int, seed: int = 11, tol: float = 1e-5, eps: float = 1e-6) -> CheckResult:
    """``G(q)^T grad_q f`` is the gradient of ``f(q (x) quat_exp(d))`` at ``d = 0``."""

    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            q = random_quat(rng)
            p, target = rng.normal(size=3), rng.normal(size=3)

            def f(qq):
                r = quat_to_rotation(qq) @ p - target
                return np.array([r @ r])

            # analytic gradient of the unnormalized sandwich at unit q
            r = quat_to_rotation(q) @ p - target
            grad_q = 2.0 * _quat_point_jacobian(q, p[None, :])[0].T @ r
            analytic = attitude_jacobian(q).T @ grad_q
            fd = _fd_columns(lambda d: f(quat_mul(q, quat_exp(d))), np.zeros(3), eps)[0]
            worst = max(worst, _relative(analytic, fd))
        return worst

    return _timed("attitude Jacobian gradient map", tol, n, run)


def check_dynamics_jacobians(n: int, seed: int = 12, tol: float = 1e-5, eps: float = 1e-6) -> CheckResult:
    """Analytic frame and quadrotor linearizations against the FD oracle."""

    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for i in range(n):
            params = QuadrotorParams(semi_implicit=bool(i % 2 == 0))
            xq = StateQuad(rng.normal(size=3), random_rotation(rng), rng.normal(size=3), rng.normal(size=3))
            uq = np.concatenate(([rng.uniform(0.0, 20.0)], 0.1 * rng.normal(size=3)))
            ana = quad_linearize(xq, uq, params)
            fd = finite_diff_linearize(lambda x, u: quad_step(x, u, params), xq, uq, eps)
            xf = StateFrame(random_rotation(rng), rng.normal(size=3))
            uf = rng.normal(size=3)
            ana_f = frame_linearize(xf, uf, 0.02)
            fd_f = finite_diff_linearize(lambda x, u: frame_step(x, u, 0.02), xf, uf, eps)
            worst = max(
                worst,
                _relative(ana.A, fd.A),
                _relative(ana.B, fd.B),
                _relative(ana_f.A, fd_f.A),
                _relative(ana_f.B, fd_f.B),
            )
        return worst

    return _timed("dynamics linearizations", tol, n, run)


def _fd_step(theta, step, par):
    # finite-difference retraction; naive quaternions are perturbed off the
    # sphere so the Jacobian of the raw residual is what gets checked
    from .wahba import retract

    if par is Parameterization.QUATERNION_NAIVE:
        return theta + step
    return retract(theta, step, par)


def check_wahba_jacobians(n: int, seed: int = 13, tol: float = 1e-5, eps: float = 1e-6) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            inst = generate_instance(10, rng, 0.01)
            R = random_rotation(rng)
            for par in Parameterization:
                theta = initial_params(R, par)
                J = residual_jacobian(theta, par, inst)
                fd = _fd_columns(lambda s: residual(_fd_step(theta, s, par), par, inst), np.zeros(par.step_dim), eps)
                worst = max(worst, _relative(J, fd))
        return worst

    return _timed("Wahba residual Jacobians (x6)", tol, n, run)


def jacobian_checks(n: int, seed: int = 0) -> list[CheckResult]:
    return [
        check_right_jacobians(n, seed + 10),
        check_attitude_gradient(n, seed + 11),
        check_dynamics_jacobians(n, seed + 12),
        check_wahba_jacobians(n, seed + 13),
    ]


# ------------------------------------------------------------------ solver oracles


def double_integrator(dt: float = 0.1):
    A = np.array([[1.0, dt], [0.0, 1.0]])
    B = np.array([[0.5 * dt * dt], [dt]])
    return A, B, 0.1 * np.eye(2), 0.01 * np.eye(1), 10.0 * np.eye(2)


def check_lqr_oracle(horizon: int = 10, tol: float = 1e-6) -> CheckResult:
    """iLQR on an unbounded double integrator against the Riccati optimum."""

    def run():
        A, B, Q, R, Qf = double_integrator()
        x0 = np.array([1.0, -0.5])
        _, optimal = riccati_lqr(A, B, Q, R, Qf, horizon, x0)
        problem = LinearQuadraticProblem(A, B, Q, R, Qf, horizon)
        result = solve_ilqr(problem, x0, np.zeros((horizon, 1)), ILQROptions())
        return abs(result.trajectory.cost - optimal)

    return _timed("LQR oracle", tol, 1, run)


def grid_gap(H, g, lo, hi, x, points: int = 10) -> tuple[float, float]:
    """``(f(x) - grid minimum, allowance)`` for a ``points^3`` grid over the box.

    The allowance bounds how far the grid minimum may sit above the true
    minimum: the nearest grid node lies within half a cell of ``x``.
    """
    f = lambda z: 0.5 * z @ H @ z + g @ z
    axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
    grid = np.array(list(itertools.product(*axes)))
    values = 0.5 * np.einsum("ni,ij,nj->n", grid, H, grid) + grid @ g
    half = 0.5 * (hi - lo) / (points - 1)
    grad = g + H @ x
    allowance = float(np.abs(grad) @ half + 0.5 * np.linalg.eigvalsh(H)[-1] * (half @ half))
    return f(x) - float(values.min()), allowance


def random_box_qp(rng):
    M = rng.normal(size=(3, 3))
    H = M @ M.T + 0.1 * np.eye(3)
    g = 3.0 * rng.normal(size=3)
    lo = -rng.uniform(0.1, 2.0, size=3)
    hi = rng.uniform(0.1, 2.0, size=3)
    return H, g, lo, hi


def check_boxqp_oracle(n: int, seed: int = 20, tol: float = 1e-8) -> CheckResult:
    """KKT residual below ``tol`` and objective not above the grid minimum.

    The reported value is the worst of the KKT residual and the amount by
    which the solution exceeds the grid minimum or undercuts it by more than
    the grid allowance (zero when all hold).
    """

    def run():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            H, g, lo, hi = random_box_qp(rng)
            res = boxqp(H, g, lo, hi)
            gap, allowance = grid_gap(H, g, lo, hi, res.x)
            above = max(gap, 0.0)
            below = max(-gap - allowance, 0.0)
            worst = max(worst, kkt_residual(H, g, lo, hi, res.x), above, below)
        return worst

    return _timed("BoxQP oracle", tol, n, run)


def check_box_unbounded_equivalence(tol: float = 1e-10) -> CheckResult:
    """Infinite bounds reproduce the unbounded solver's iterates."""

    def run():
        A, B, Q, R, Qf = double_integrator()
        x0 = np.array([1.0, -0.5])
        free = LinearQuadraticProblem(A, B, Q, R, Qf, 10)
        boxed = LinearQuadraticProblem(A, B, Q, R, Qf, 10, ControlBounds.unbounded(1))
        a = solve_ilqr(free, x0, np.zeros((10, 1)))
        b = solve_ilqr(boxed, x0, np.zeros((10, 1)))
        n = min(len(a.cost_trace), len(b.cost_trace))
        return max(np.max(np.abs(np.subtract(a.cost_trace[:n], b.cost_trace[:n]))), abs(len(a.cost_trace) - len(b.cost_trace)))

    return _timed("BoxQP with infinite bounds", tol, 1, run)


def solver_checks(n_boxqp: int, seed: int = 0) -> list[CheckResult]:
    return [check_lqr_oracle(), check_boxqp_oracle(n_boxqp, seed + 20), check_box_unbounded_equivalence()]


def run_all(algebra: int = 1000, jacobian: int = 20, boxqp_problems: int = 200, seed: int = 0) -> list[CheckResult]:
    return algebra_checks(algebra, seed) + jacobian_checks(jacobian, seed) + solver_checks(boxqp_problems, seed)
