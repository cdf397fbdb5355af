"""Wahba's problem: instances, the SVD solution and Gauss-Newton per parameterization.

The least-squares cost is ``sum_i |p_w^i - R(theta) p_b^i|^2`` with residuals
stacked point by point into a ``3N`` vector.  Each parameterization supplies
its model matrix, an analytic residual Jacobian and a retraction; the solver
takes the descent step ``theta <- retract(theta, -(J^T J)^-1 J^T r)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .distances import dist_geodesic, project_so3
from .representations import (
    H,
    Parameterization,
    T,
    attitude_jacobian,
    encode_rotation,
    euler_body_jacobian,
    euler_to_rotation,
    quat_exp,
    quat_L,
    quat_R,
    quat_mul,
    quat_normalize,
    quat_to_rotation,
)
from .so3 import exp_so3, oplus_right, random_rotation, right_jacobian
from .trace import ConvergenceTrace

LEVENBERG_DAMPING = 1e-9
_COND_LIMIT = 1e12


class DegenerateInputError(ValueError):
    """Raised when the point configuration does not determine a unique rotation."""


@dataclass(frozen=True)
class WahbaInstance:
    points_body: np.ndarray  # (N, 3)
    points_world: np.ndarray  # (N, 3)
    R_true: np.ndarray
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.points_body.shape != self.points_world.shape or self.points_body.shape[0] < 3:
            raise ValueError("need matching (N, 3) point arrays with N >= 3")


def generate_instance(n: int, seed, noise_sigma: float = 0.0) -> WahbaInstance:
    """Random instance: uniform rotation, unit-sphere body points, Gaussian noise.

    ``seed`` may be anything accepted by :func:`numpy.random.default_rng`.
    """
    if n < 3:
        raise ValueError("need at least 3 points")
    rng = np.random.default_rng(seed)
    R_true = random_rotation(rng)
    pb = rng.normal(size=(n, 3))
    pb /= np.linalg.norm(pb, axis=1, keepdims=True)
    pw = pb @ R_true.T
    if noise_sigma > 0.0:
        pw = pw + noise_sigma * rng.normal(size=(n, 3))
    return WahbaInstance(pb, pw, R_true, float(noise_sigma))


def attitude_profile(inst: WahbaInstance) -> np.ndarray:
    """``B = sum_i p_w^i (p_b^i)^T``."""
    return inst.points_world.T @ inst.points_body


def solve_svd(inst: WahbaInstance) -> np.ndarray:
    B = attitude_profile(inst)
    s = np.linalg.svd(B, compute_uv=False)
    if s[1] <= 1e-10 * s[0]:
        raise DegenerateInputError("collinear points: rotation about their common axis is free")
    return project_so3(B)


def cost(theta, par: Parameterization, inst: WahbaInstance) -> float:
    r = residual(theta, par, inst)
    return float(r @ r)


# ----------------------------------------------------------- parameterization glue


def initial_params(R, par: Parameterization) -> np.ndarray:
    par = Parameterization(par)
    if par is Parameterization.SO3_MANIFOLD:
        return np.array(R, dtype=float)
    return encode_rotation(R, par)


def model_matrix(theta, par: Parameterization) -> np.ndarray:
    """The matrix multiplying body points; not projected for flat matrices."""
    par = Parameterization(par)
    theta = np.asarray(theta, dtype=float)
    if par is Parameterization.FLAT_MATRIX:
        return theta.reshape(3, 3)
    if par is Parameterization.SO3_MANIFOLD:
        return theta
    if par is Parameterization.EULER_ZYX:
        return euler_to_rotation(theta, "ZYX")
    if par is Parameterization.AXIS_ANGLE:
        return exp_so3(theta)
    # sandwich product q (x) p (x) q* without renormalizing, so off-sphere
    # perturbations change the residual as the quaternion Jacobian says
    return H.T @ quat_L(theta) @ quat_R(theta).T @ H


def as_rotation(theta, par: Parameterization) -> np.ndarray:
    """A valid rotation for the iterate (flat matrices are projected)."""
    par = Parameterization(par)
    if par is Parameterization.FLAT_MATRIX:
        return project_so3(model_matrix(theta, par))
    if par in (Parameterization.QUATERNION_NAIVE, Parameterization.QUATERNION_ATTITUDE):
        return quat_to_rotation(theta)
    return model_matrix(theta, par)


def retract(theta, step, par: Parameterization) -> np.ndarray:
    par = Parameterization(par)
    theta = np.asarray(theta, dtype=float)
    step = np.asarray(step, dtype=float)
    if par is Parameterization.SO3_MANIFOLD:
        return oplus_right(theta, step)
    if par is Parameterization.QUATERNION_NAIVE:
        return quat_normalize(theta + step)
    if par is Parameterization.QUATERNION_ATTITUDE:
        # first order: q (x) [1, step] = q + G(q) step
        return quat_mul(theta, quat_exp(step))
    return theta + step


def residual(theta, par: Parameterization, inst: WahbaInstance) -> np.ndarray:
    M = model_matrix(theta, par)
    return (inst.points_world - inst.points_body @ M.T).ravel()


def _skew_batch(P: np.ndarray) -> np.ndarray:
    S = np.zeros((P.shape[0], 3, 3))
    S[:, 0, 1], S[:, 0, 2] = -P[:, 2], P[:, 1]
    S[:, 1, 0], S[:, 1, 2] = P[:, 2], -P[:, 0]
    S[:, 2, 0], S[:, 2, 1] = -P[:, 1], P[:, 0]
    return S


def _quat_point_jacobian(q: np.ndarray, pb: np.ndarray) -> np.ndarray:
    # d(q (x) p (x) q*)/dq = H^T [R(p (x) q*) + L(q (x) p) T], per point
    qc = T @ q
    Lq = quat_L(q)
    out = np.empty((pb.shape[0], 3, 4))
    for i, p in enumerate(pb):
        ph = H @ p
        out[i] = H.T @ (quat_R(quat_L(ph) @ qc) + quat_L(Lq @ ph) @ T)
    return out


def residual_jacobian(theta, par: Parameterization, inst: WahbaInstance) -> np.ndarray:
    """``dr/dstep`` (3N x step_dim) consistent with :func:`retract`."""
    par = Parameterization(par)
    theta = np.asarray(theta, dtype=float)
    pb = inst.points_body
    n = pb.shape[0]
    if par is Parameterization.FLAT_MATRIX:
        J = np.zeros((n, 3, 9))
        for a in range(3):
            J[:, a, 3 * a : 3 * a + 3] = -pb
        return J.reshape(3 * n, 9)
    if par is Parameterization.QUATERNION_NAIVE:
        return -_quat_point_jacobian(theta, pb).reshape(3 * n, 4)
    if par is Parameterization.QUATERNION_ATTITUDE:
        Jq = -_quat_point_jacobian(theta, pb).reshape(3 * n, 4)
        return Jq @ attitude_jacobian(theta)
    # rotation-based parameterizations: r_i = p_w - R p_b, dr_i = R hat(p_b) dphi
    R = model_matrix(theta, par)
    RS = np.einsum("ij,njk->nik", R, _skew_batch(pb))
    if par is Parameterization.SO3_MANIFOLD:
        return RS.reshape(3 * n, 3)
    if par is Parameterization.EULER_ZYX:
        D = euler_body_jacobian(theta, "ZYX")
    else:
        D = right_jacobian(theta)
    return (RS @ D).reshape(3 * n, 3)


def _gauss_newton_step(J: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, bool]:
    JtJ = J.T @ J
    g = J.T @ r
    if np.linalg.cond(JtJ) < _COND_LIMIT:
        try:
            return np.linalg.solve(JtJ, g), False
        except np.linalg.LinAlgError:
            pass
    return np.linalg.solve(JtJ + LEVENBERG_DAMPING * np.eye(len(g)), g), True


def gauss_newton_solve(
    par: Parameterization,
    inst: WahbaInstance,
    max_iters: int = 50,
    tol: float = 1e-13,
    R_init=None,
    R_ref=None,
) -> tuple[np.ndarray, ConvergenceTrace]:
    """Gauss-Newton over ``par`` starting from ``R_init`` (identity by default).

    The trace holds the geodesic distance between each iterate and ``R_ref``
    (the SVD solution unless given).  Iteration stops once the step norm
    drops below ``tol``; a step of that size is not applied.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    par = Parameterization(par)
    if R_ref is None:
        R_ref = solve_svd(inst)
    theta = initial_params(np.eye(3) if R_init is None else R_init, par)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    trace.record(dist_geodesic(as_rotation(theta, par), R_ref), 0.0)
    for k in range(1, max_iters + 1):
        J = residual_jacobian(theta, par, inst)
        r = residual(theta, par, inst)
        step, damped = _gauss_newton_step(J, r)
        if not np.all(np.isfinite(step)):
            break
        if np.linalg.norm(step) < tol:
            trace.converged = True
            break
        if damped:
            trace.flags.append(k)
        theta = retract(theta, -step, par)
        trace.record(dist_geodesic(as_rotation(theta, par), R_ref), time.perf_counter() - t0)
    return as_rotation(theta, par), trace
