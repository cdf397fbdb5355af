"""Iterative LQR on manifolds with line search, regularization and box-constrained controls.

Deviations are taken in the problem's own tangent coordinates,
``dx = problem.diff(x, x_bar)``, and the control law is
``u = u_bar - alpha * k - K dx`` clipped to the bounds.
"""

from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg.lapack import dposv

from .trace import ConvergenceTrace


class NonPDQuuError(np.linalg.LinAlgError):
    """Regularized control Hessian is not positive definite."""


@dataclass(frozen=True)
class ControlBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("bounds need matching shapes and lower <= upper")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unbounded(cls, m: int) -> "ControlBounds":
        return cls(np.full(m, -np.inf), np.full(m, np.inf))

    def clip(self, u: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(u, self.lower), self.upper)


@dataclass
class ILQROptions:
    max_iters: int = 100
    tol: float = 1e-7
    mu_init: float = 1e-6
    mu_min: float = 1e-9
    mu_max: float = 1e9
    mu_increase: float = 10.0
    mu_decrease: float = 0.5
    alphas: tuple[float, ...] = tuple(2.0**-i for i in range(11))
    c1: float = 1e-4
    max_restarts: int = 3
    restart_sigma: float = 1e-3
    seed: int = 0
    use_boxqp: bool = True
    boxqp_tol: float = 1e-8
    boxqp_max_iters: int = 100
    # "control": Q_uu + mu I.  "state": mu added to the value Hessian, i.e.
    # Q_uu + mu B^T B and Q_ux + mu B^T A, which also damps the feedback gains
    regularization: str = "control"

    def __post_init__(self) -> None:
        if self.regularization not in ("control", "state"):
            raise ValueError("regularization must be 'control' or 'state'")


@dataclass
class BoxQPResult:
    x: np.ndarray
    free: np.ndarray  # boolean mask
    H_free_inv: np.ndarray | None  # inverse of the free block, for feedback gains
    iterations: int
    converged: bool


@dataclass
class FeedbackPolicy:
    k: np.ndarray  # (N, m)
    K: np.ndarray  # (N, m, n)


@dataclass
class Trajectory:
    xs: list
    us: np.ndarray
    cost: float
    diverged: bool = False


@dataclass
class ILQRResult:
    trajectory: Trajectory
    policy: FeedbackPolicy | None
    trace: ConvergenceTrace
    cost_trace: list[float] = field(default_factory=list)
    restarts: int = 0
    # (accepted step size or 0.0, regularization used) per iteration
    steps: list[tuple[float, float]] = field(default_factory=list)


class Problem:
    """Interface consumed by :func:`solve_ilqr`.

    Subclasses set ``nx`` (tangent dimension), ``nu`` and ``horizon`` and
    implement dynamics, tangent differences and cost expansions.
    """

    nx: int
    nu: int
    horizon: int
    bounds: ControlBounds | None = None
    # lets the line search abandon a trial rollout once its partial cost is too high
    nonnegative_costs: bool = False

    def step(self, x, u, k: int):
        raise NotImplementedError

    def linearize(self, x, u, k: int, x_next=None) -> tuple[np.ndarray, np.ndarray]:
        """``(A, B)`` at step ``k``; ``x_next = step(x, u)`` may be passed to skip recomputing it."""
        raise NotImplementedError

    def diff(self, x, x_bar) -> np.ndarray:
        raise NotImplementedError

    def stage_cost(self, x, u, k: int) -> float:
        raise NotImplementedError

    def stage_expansion(self, x, u, k: int):
        """``(l_x, l_u, l_xx, l_uu, l_ux)`` at step ``k``."""
        raise NotImplementedError

    def terminal_cost(self, x) -> float:
        raise NotImplementedError

    def terminal_expansion(self, x):
        """``(l_x, l_xx)`` of the terminal cost."""
        raise NotImplementedError

    def monitor(self, xs, us) -> float:
        """Value written to the convergence trace; the problem's own cost by default."""
        return self.total_cost(xs, us)

    def total_cost(self, xs, us) -> float:
        return sum(self.stage_cost(xs[k], us[k], k) for k in range(self.horizon)) + self.terminal_cost(
            xs[-1]
        )


# ------------------------------------------------------------------ BoxQP


def boxqp(H, g, lo, hi, x_init=None, tol: float = 1e-8, max_iters: int = 100) -> BoxQPResult:
    """Projected-Newton solver for ``min 1/2 x^T H x + g^T x`` s.t. ``lo <= x <= hi``.

    Coordinates at a bound whose gradient pushes outward are clamped; Newton
    steps are taken on the free subspace with an Armijo search along the
    projection arc.  Converges when the projected-gradient residual
    ``|x - clip(x - grad)|_inf`` drops below ``tol``.

    Raises:
        NonPDQuuError: if a free block of ``H`` is not positive definite.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = g.size
    # interior unconstrained minimizer: one full Newton step is exact
    try:
        H_inv = _pd_inverse(H)
    except NonPDQuuError:
        H_inv = None
    if H_inv is not None:
        x = -H_inv @ g
        if np.all(x > lo) and np.all(x < hi):
            return BoxQPResult(x, np.ones(n, dtype=bool), H_inv, 1, True)
    if x_init is not None:
        x = np.asarray(x_init, dtype=float).copy()
    elif H_inv is None:
        finite = np.isfinite(lo) & np.isfinite(hi)
        x = np.zeros(n)
        x[finite] = 0.5 * (lo[finite] + hi[finite])
    # otherwise start from the clipped unconstrained minimizer
    x = _clip(x, lo, hi)

    def objective(z):
        return 0.5 * (z @ H @ z) + g @ z

    value = objective(x)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        grad = g + H @ x
        if _kkt(x, grad, lo, hi) < tol:
            converged = True
            it -= 1
            break
        free = ~(((x <= lo) & (grad > 0)) | ((x >= hi) & (grad < 0)))
        if not free.any():
            converged = True
            break
        H_free_inv = _pd_inverse(H[free][:, free])
        direction = np.zeros(n)
        direction[free] = -H_free_inv @ grad[free]
        slope = grad @ direction
        if slope >= 0.0:
            # Newton step cannot improve: x is optimal up to round-off
            converged = True
            break
        step = 1.0
        while True:
            candidate = _clip(x + step * direction, lo, hi)
            new_value = objective(candidate)
            if new_value - value <= 0.1 * step * slope or step < 1e-20:
                break
            step *= 0.6
        if step < 1e-20:
            break
        x, value = candidate, new_value
    else:
        converged = _kkt(x, g + H @ x, lo, hi) < tol

    # free set and its inverse at the returned point
    grad = g + H @ x
    free = ~(((x <= lo) & (grad > 0)) | ((x >= hi) & (grad < 0)))
    H_free_inv = _pd_inverse(H[free][:, free]) if free.any() else None
    return BoxQPResult(x, free, H_free_inv, it, bool(converged))


def _clip(x, lo, hi):
    return np.minimum(np.maximum(x, lo), hi)


def _kkt(x, grad, lo, hi) -> float:
    return float(np.max(np.abs(x - _clip(x - grad, lo, hi)), initial=0.0))


@functools.lru_cache(maxsize=None)
def _eye(n: int) -> np.ndarray:
    return np.eye(n)


def _pd_inverse(M: np.ndarray) -> np.ndarray:
    _, inv, info = dposv(M, _eye(M.shape[0]))
    if info != 0:
        raise NonPDQuuError("free block of H is not positive definite")
    return inv


def kkt_residual(H, g, lo, hi, x) -> float:
    """Projected-gradient residual ``|x - clip(x - (Hx + g), lo, hi)|_inf``."""
    return _kkt(x, np.asarray(g) + np.asarray(H) @ x, lo, hi)


# ------------------------------------------------------------------ passes


def rollout(
    problem: Problem,
    x0,
    us,
    policy: FeedbackPolicy | None = None,
    ref: Trajectory | None = None,
    alpha: float = 1.0,
    cost_limit: float = math.inf,
) -> Trajectory:
    """Simulate ``problem`` from ``x0``.

    Without a policy the controls ``us`` are applied open loop.  With a policy
    and reference trajectory the feedback law is applied around ``ref``.
    When the accumulated stage cost exceeds ``cost_limit`` the rollout stops
    early and returns an incomplete trajectory with infinite cost (only
    meaningful for non-negative costs).
    """
    N = problem.horizon
    xs = [x0]
    applied = np.empty((N, problem.nu))
    bounds = problem.bounds
    x = x0
    cost = 0.0
    try:
        with np.errstate(over="raise", invalid="raise"):
            for k in range(N):
                if policy is None:
                    u = np.asarray(us[k], dtype=float)
                else:
                    u = ref.us[k] - alpha * policy.k[k] - policy.K[k] @ problem.diff(x, ref.xs[k])
                if bounds is not None:
                    u = bounds.clip(u)
                applied[k] = u
                cost += problem.stage_cost(x, u, k)
                if cost > cost_limit:
                    return Trajectory(xs, applied, math.inf)
                x = problem.step(x, u, k)
                if not _finite_state(x):
                    return Trajectory(xs, applied, math.inf, diverged=True)
                xs.append(x)
    except (ValueError, FloatingPointError, OverflowError):
        # blow-up inside the dynamics (e.g. sin of an infinite angle)
        return Trajectory(xs, applied, math.inf, diverged=True)
    with np.errstate(over="ignore", invalid="ignore"):
        cost += problem.terminal_cost(x)
    if not math.isfinite(cost):
        return Trajectory(xs, applied, math.inf, diverged=True)
    return Trajectory(xs, applied, float(cost))


def _finite_state(x) -> bool:
    # a sum is finite only if every entry is (overflowing the sum also counts as diverged)
    return math.isfinite(x.sum()) if isinstance(x, np.ndarray) else True


def linearize_trajectory(problem: Problem, traj: Trajectory) -> list:
    xs, us = traj.xs, traj.us
    return [problem.linearize(xs[k], us[k], k, xs[k + 1]) for k in range(problem.horizon)]


def expand_trajectory(problem: Problem, traj: Trajectory) -> list:
    xs, us = traj.xs, traj.us
    return [problem.stage_expansion(xs[k], us[k], k) for k in range(problem.horizon)]


def backward_pass(
    problem: Problem,
    traj: Trajectory,
    mu: float,
    use_boxqp: bool = True,
    linearizations=None,
    boxqp_tol: float = 1e-8,
    boxqp_max_iters: int = 100,
    expansions=None,
    regularization: str = "control",
):
    """Riccati-like sweep; returns ``(policy, d1, d2)``.

    ``d1 = sum Q_u^T k`` and ``d2 = 1/2 sum k^T Q_uu k`` give the predicted
    reduction ``alpha d1 - alpha^2 d2`` for step size ``alpha``.

    Raises:
        NonPDQuuError: when the regularized ``Q_uu`` is not positive definite.
    """
    N, n, m = problem.horizon, problem.nx, problem.nu
    if linearizations is None:
        linearizations = linearize_trajectory(problem, traj)
    if expansions is None:
        expansions = expand_trajectory(problem, traj)
    p, P = problem.terminal_expansion(traj.xs[-1])
    ks = np.zeros((N, m))
    Ks = np.zeros((N, m, n))
    d1 = d2 = 0.0
    bounds = problem.bounds
    boxed = use_boxqp and bounds is not None
    reg = mu * np.eye(m)
    for k in range(N - 1, -1, -1):
        A, B = linearizations[k]
        lx, lu, lxx, luu, lux = expansions[k]
        AB = np.concatenate((A, B), axis=1)
        ABtP = AB.T @ P
        Qall = ABtP @ AB
        q = AB.T @ p
        Qx = lx + q[:n]
        Qu = lu + q[n:]
        Qxx = lxx + Qall[:n, :n]
        Quu = luu + Qall[n:, n:]
        Qux = lux + Qall[n:, :n]
        if regularization == "state":
            Quu_reg = Quu + mu * (B.T @ B)
            Qux_reg = Qux + mu * (B.T @ A)
        else:
            Quu_reg = Quu + reg
            Qux_reg = Qux
        if boxed:
            u_bar = traj.us[k]
            res = boxqp(Quu_reg, Qu, bounds.lower - u_bar, bounds.upper - u_bar, None, boxqp_tol, boxqp_max_iters)
            kk = -res.x
            KK = np.zeros((m, n))
            if res.H_free_inv is not None:
                KK[res.free] = res.H_free_inv @ Qux_reg[res.free]
        else:
            # Cholesky solve; info > 0 flags a non-positive-definite matrix
            _, sol, info = dposv(Quu_reg, np.column_stack((Qu, Qux_reg)))
            if info != 0:
                raise NonPDQuuError(f"Q_uu not positive definite at step {k}")
            kk = sol[:, 0]
            KK = sol[:, 1:]
        ks[k] = kk
        Ks[k] = KK
        Quu_k = Quu @ kk
        d1 += Qu @ kk
        d2 += 0.5 * (kk @ Quu_k)
        # P = Qxx + K^T Quu K - Qxu K - K^T Qux ;  p = Qx - K^T Qu + K^T Quu k - Qxu k
        W = KK.T @ Quu - Qux.T
        p = Qx + W @ kk - KK.T @ Qu
        P = Qxx + W @ KK - KK.T @ Qux
        P = 0.5 * (P + P.T)
    return FeedbackPolicy(ks, Ks), float(d1), float(d2)


# ------------------------------------------------------------------ solver


def solve_ilqr(problem: Problem, x0, u_init, opts: ILQROptions | None = None) -> ILQRResult:
    """Minimize the problem's cost from ``x0`` starting with controls ``u_init``.

    Each iteration runs a backward pass (raising ``mu`` until ``Q_uu`` is
    positive definite) and a backtracking line search accepting a step when
    the actual reduction reaches ``c1`` times the predicted one.  When the
    search fails at ``mu_max`` the controls are perturbed and the solve
    restarts, at most ``max_restarts`` times.  The trace records
    ``problem.monitor`` of the current nominal trajectory per iteration.
    """
    opts = opts or ILQROptions()
    us = np.array(u_init, dtype=float)
    if us.shape != (problem.horizon, problem.nu) or not np.all(np.isfinite(us)):
        raise ValueError("u_init must be a finite (horizon, nu) array")
    rng = np.random.default_rng(opts.seed)
    if problem.bounds is not None:
        us = problem.bounds.clip(us)
    traj = rollout(problem, x0, us)
    if traj.diverged:
        raise FloatingPointError("initial rollout is not finite")
    trace = ConvergenceTrace()
    costs = [traj.cost]
    t0 = time.perf_counter()
    trace.record(problem.monitor(traj.xs, traj.us), 0.0)
    mu = opts.mu_init
    restarts = 0
    policy = None
    lin = None
    steps = []
    for it in range(1, opts.max_iters + 1):
        if lin is None:
            lin = linearize_trajectory(problem, traj)
            expansions = expand_trajectory(problem, traj)
        accepted = False
        while True:
            try:
                policy, d1, d2 = backward_pass(
                    problem, traj, mu, opts.use_boxqp, lin, opts.boxqp_tol, opts.boxqp_max_iters, expansions,
                    opts.regularization,
                )
                break
            except NonPDQuuError:
                mu = max(mu * opts.mu_increase, opts.mu_min)
                if mu > opts.mu_max:
                    policy = None
                    break
        if policy is not None:
            if d1 - d2 < opts.tol:
                # nothing left to gain at full step
                trace.converged = True
                trace.record(problem.monitor(traj.xs, traj.us), time.perf_counter() - t0)
                costs.append(traj.cost)
                break
            for alpha in opts.alphas:
                expected = alpha * d1 - alpha * alpha * d2
                limit = traj.cost - opts.c1 * expected if problem.nonnegative_costs else math.inf
                cand = rollout(problem, x0, None, policy, traj, alpha, limit)
                actual = traj.cost - cand.cost
                if not cand.diverged and expected > 0.0 and actual >= opts.c1 * expected:
                    accepted = True
                    break
        steps.append((alpha if accepted else 0.0, mu))
        if accepted:
            delta = traj.cost - cand.cost
            traj = cand
            lin = None
            mu = min(max(mu * opts.mu_decrease, opts.mu_min), opts.mu_max)
            trace.record(problem.monitor(traj.xs, traj.us), time.perf_counter() - t0)
            costs.append(traj.cost)
            if abs(delta) < opts.tol:
                trace.converged = True
                break
            continue
        mu *= opts.mu_increase
        if mu > opts.mu_max:
            if restarts >= opts.max_restarts:
                trace.record(problem.monitor(traj.xs, traj.us), time.perf_counter() - t0)
                costs.append(traj.cost)
                break
            restarts += 1
            trace.flags.append(it)
            noisy = traj.us + opts.restart_sigma * rng.normal(size=traj.us.shape)
            cand = rollout(problem, x0, noisy)
            if not cand.diverged and cand.cost <= traj.cost * (1.0 + 1e-3) + 1e-9:
                traj = cand
                lin = None
            mu = opts.mu_init
        trace.record(problem.monitor(traj.xs, traj.us), time.perf_counter() - t0)
        costs.append(traj.cost)
    return ILQRResult(traj, policy, trace, costs, restarts, steps)


# ------------------------------------------------------------------ LQ oracle problem


class LinearQuadraticProblem(Problem):
    """Euclidean ``x' = A x + B u`` with cost ``sum x^T Q x + u^T R u + x_N^T Qf x_N``.

    Costs carry no 1/2 factor; expansions are exact.
    """

    nonnegative_costs = True

    def __init__(self, A, B, Q, R, Qf, horizon: int, bounds: ControlBounds | None = None):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.Q = np.asarray(Q, dtype=float)
        self.R = np.asarray(R, dtype=float)
        self.Qf = np.asarray(Qf, dtype=float)
        self.nx, self.nu = self.B.shape
        self.horizon = horizon
        self.bounds = bounds

    def step(self, x, u, k):
        return self.A @ x + self.B @ u

    def linearize(self, x, u, k, x_next=None):
        return self.A, self.B

    def diff(self, x, x_bar):
        return x - x_bar

    def stage_cost(self, x, u, k):
        return float(x @ self.Q @ x + u @ self.R @ u)

    def stage_expansion(self, x, u, k):
        return 2 * self.Q @ x, 2 * self.R @ u, 2 * self.Q, 2 * self.R, np.zeros((self.nu, self.nx))

    def terminal_cost(self, x):
        return float(x @ self.Qf @ x)

    def terminal_expansion(self, x):
        return 2 * self.Qf @ x, 2 * self.Qf


def riccati_lqr(A, B, Q, R, Qf, horizon: int, x0):
    """Finite-horizon discrete Riccati recursion; returns ``(gains, optimal cost)``.

    Optimal control ``u_k = -K_k x_k``; cost as in :class:`LinearQuadraticProblem`.
    """
    P = np.asarray(Qf, dtype=float)
    gains = []
    for _ in range(horizon):
        K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
        P = Q + A.T @ P @ (A - B @ K)
        P = 0.5 * (P + P.T)
        gains.append(K)
    gains.reverse()
    x0 = np.asarray(x0, dtype=float)
    return gains, float(x0 @ P @ x0)
