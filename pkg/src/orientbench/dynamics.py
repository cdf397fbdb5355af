"""Rigid frame and quadrotor dynamics on SO(3) with analytic linearizations.

Tangent-space state ordering is the dataclass field order: ``(R, omega)`` for
the frame and ``(p, R, v, omega)`` for the quadrotor.  Rotation blocks are
perturbed on the right, ``R (+) d = R exp(d)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .representations import Parameterization, decode_rotation, encode_rotation
from .so3 import cross, exp_so3, hat, ominus_right, oplus_right, right_jacobian

_I3 = np.eye(3)
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class StateFrame:
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def at_rest(cls, R=None) -> "StateFrame":
        return cls(np.eye(3) if R is None else np.asarray(R, dtype=float), np.zeros(3))


@dataclass(frozen=True)
class StateQuad:
    p: np.ndarray
    R: np.ndarray
    v: np.ndarray  # body frame
    omega: np.ndarray  # body frame

    @classmethod
    def at_rest(cls, p=None, R=None) -> "StateQuad":
        return cls(
            np.zeros(3) if p is None else np.asarray(p, dtype=float),
            np.eye(3) if R is None else np.asarray(R, dtype=float),
            np.zeros(3),
            np.zeros(3),
        )


@dataclass(frozen=True)
class QuadrotorParams:
    """Rigid-body quadrotor driven by a body wrench ``u = (F_z, tau_x, tau_y, tau_z)``."""

    mass: float = 1.0
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.01, 0.01, 0.02]))
    g: float = 9.81
    dt: float = 0.01
    include_gravity: bool = True
    semi_implicit: bool = True

    def __post_init__(self) -> None:
        inertia = np.asarray(self.inertia, dtype=float)
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if not np.allclose(inertia, inertia.T) or np.any(np.linalg.eigvalsh(inertia) <= 0.0):
            raise ValueError("inertia must be symmetric positive definite")
        object.__setattr__(self, "inertia", inertia)
        object.__setattr__(self, "_inertia_inv", np.linalg.inv(inertia))
        object.__setattr__(self, "_gravity", np.array([0.0, 0.0, -self.g]))

    @property
    def inertia_inv(self) -> np.ndarray:
        return self._inertia_inv

    @property
    def hover_thrust(self) -> float:
        return self.mass * self.g


@dataclass(frozen=True)
class Linearization:
    A: np.ndarray
    B: np.ndarray


# ------------------------------------------------------------------ frame


def frame_step(x: StateFrame, u, dt: float) -> StateFrame:
    """``omega' = omega + u dt`` then ``R' = R (+) omega' dt``."""
    omega = x.omega + np.asarray(u, dtype=float) * dt
    return StateFrame(oplus_right(x.R, omega * dt), omega)


def frame_linearize(x: StateFrame, u, dt: float) -> Linearization:
    omega = x.omega + np.asarray(u, dtype=float) * dt
    phi = omega * dt
    Jr = right_jacobian(phi)
    A = np.zeros((6, 6))
    A[:3, :3] = exp_so3(phi).T
    A[:3, 3:] = Jr * dt
    A[3:, 3:] = _I3
    B = np.vstack((Jr * dt * dt, _I3 * dt))
    return Linearization(A, B)


# --------------------------------------------------------------- quadrotor


def _accelerations(x: StateQuad, u: np.ndarray, params: QuadrotorParams):
    return _body_accelerations(x.R, x.v, x.omega, u, params)


def _body_accelerations(R, v, omega, u, params: QuadrotorParams):
    wx, wy, wz = omega.tolist()
    vx, vy, vz = v.tolist()
    f, tx, ty, tz = u.tolist()
    ax = -(wy * vz - wz * vy)
    ay = -(wz * vx - wx * vz)
    az = f / params.mass - (wx * vy - wy * vx)
    if params.include_gravity:
        gx, gy, gz = R[2].tolist()  # R^T [0, 0, -g] = -g R[2]
        ax -= params.g * gx
        ay -= params.g * gy
        az -= params.g * gz
    hx, hy, hz = (params.inertia @ omega).tolist()
    tau = np.array([tx - (wy * hz - wz * hy), ty - (wz * hx - wx * hz), tz - (wx * hy - wy * hx)])
    return np.array([ax, ay, az]), params.inertia_inv @ tau


def quad_step_arrays(p, R, v, omega, u, params: QuadrotorParams):
    """:func:`quad_step` on bare arrays; returns ``(p, R, v, omega)``."""
    dt = params.dt
    a, alpha = _body_accelerations(R, v, omega, u, params)
    v1 = v + a * dt
    w1 = omega + alpha * dt
    if params.semi_implicit:
        return p + R @ (v1 * dt), oplus_right(R, w1 * dt), v1, w1
    return p + R @ (v * dt), oplus_right(R, omega * dt), v1, w1


def quad_step(x: StateQuad, u, params: QuadrotorParams) -> StateQuad:
    """One Euler step; semi-implicit by default (velocities first)."""
    return StateQuad(*quad_step_arrays(x.p, x.R, x.v, x.omega, np.asarray(u, dtype=float), params))


def quad_linearize(x: StateQuad, u, params: QuadrotorParams) -> Linearization:
    u = np.asarray(u, dtype=float)
    dt = params.dt
    R, v, omega = x.R, x.v, x.omega
    I = params.inertia
    Iinv = params.inertia_inv
    a, alpha = _accelerations(x, u, params)
    v1 = v + a * dt
    w1 = omega + alpha * dt

    # velocity blocks
    dv_dR = np.zeros((3, 3))
    if params.include_gravity:
        dv_dR = hat(R.T @ params._gravity) * dt
    dv_dv = _I3 - hat(omega) * dt
    dv_dw = hat(v) * dt
    dw_dw = _I3 + dt * Iinv @ (hat(I @ omega) - hat(omega) @ I)
    dv_du = np.zeros((3, 4))
    dv_du[:, 0] = E3 * dt / params.mass
    dw_du = np.zeros((3, 4))
    dw_du[:, 1:] = Iinv * dt

    A = np.zeros((12, 12))
    B = np.zeros((12, 4))
    P, Q, V, W = slice(0, 3), slice(3, 6), slice(6, 9), slice(9, 12)
    A[P, P] = _I3
    A[V, Q], A[V, V], A[V, W] = dv_dR, dv_dv, dv_dw
    A[W, W] = dw_dw
    B[V] = dv_du
    B[W] = dw_du
    if params.semi_implicit:
        phi = w1 * dt
        Jr = right_jacobian(phi)
        Rdt = R * dt
        A[P, Q] = -R @ hat(v1) * dt + Rdt @ dv_dR
        A[P, V] = Rdt @ dv_dv
        A[P, W] = Rdt @ dv_dw
        A[Q, Q] = exp_so3(phi).T
        A[Q, W] = Jr @ dw_dw * dt
        B[P] = Rdt @ dv_du
        B[Q] = Jr @ dw_du * dt
    else:
        phi = omega * dt
        A[P, Q] = -R @ hat(v) * dt
        A[P, V] = R * dt
        A[Q, Q] = exp_so3(phi).T
        A[Q, W] = right_jacobian(phi) * dt
    return Linearization(A, B)


def hover_control(x: StateQuad, params: QuadrotorParams) -> np.ndarray:
    """Wrench cancelling gravity along body z and the gyroscopic torque."""
    thrust = params.hover_thrust * (x.R.T @ E3)[2] if params.include_gravity else 0.0
    return np.concatenate(([thrust], cross(x.omega, params.inertia @ x.omega)))


# ----------------------------------------------------- finite differences


def _is_rotation_field(value) -> bool:
    return np.shape(value) == (3, 3)


def state_dim(x) -> int:
    return sum(3 if _is_rotation_field(getattr(x, f.name)) else np.size(getattr(x, f.name)) for f in fields(x))


def state_plus(x, dx):
    """Retract a dataclass state: right-plus on rotation fields, addition elsewhere."""
    dx = np.asarray(dx, dtype=float)
    out = {}
    i = 0
    for f in fields(x):
        value = getattr(x, f.name)
        if _is_rotation_field(value):
            out[f.name] = oplus_right(value, dx[i : i + 3])
            i += 3
        else:
            n = np.size(value)
            out[f.name] = value + dx[i : i + n]
            i += n
    return replace(x, **out)


def state_minus(x1, x0) -> np.ndarray:
    """Tangent difference ``x1 (-) x0`` in field order."""
    parts = []
    for f in fields(x0):
        a, b = getattr(x1, f.name), getattr(x0, f.name)
        parts.append(ominus_right(a, b) if _is_rotation_field(b) else np.ravel(a - b))
    return np.concatenate(parts)


def finite_diff_linearize(step_fn, x, u, eps: float = 1e-6) -> Linearization:
    """Central-difference linearization of ``step_fn(x, u)`` in tangent coordinates.

    ``x`` may be a dataclass state (rotation fields perturbed with right-plus)
    or a plain vector.
    """
    if not 1e-8 <= eps <= 1e-4:
        raise ValueError("eps must lie in [1e-8, 1e-4]")
    u = np.asarray(u, dtype=float)
    if isinstance(x, np.ndarray) or np.isscalar(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        plus, minus = (lambda s, d: s + d), (lambda a, b: np.atleast_1d(a - b))
        n = x.size
    else:
        plus, minus, n = state_plus, state_minus, state_dim(x)
    f0 = step_fn(x, u)
    A = np.zeros((np.size(minus(f0, f0)), n))
    for i in range(n):
        d = np.zeros(n)
        d[i] = eps
        A[:, i] = (minus(step_fn(plus(x, d), u), f0) - minus(step_fn(plus(x, -d), u), f0)) / (2 * eps)
    B = np.zeros((A.shape[0], u.size))
    for j in range(u.size):
        d = np.zeros(u.size)
        d[j] = eps
        B[:, j] = (minus(step_fn(x, u + d), f0) - minus(step_fn(x, u - d), f0)) / (2 * eps)
    return Linearization(A, B)


# ------------------------------------------------------------ adapters


def state_adapter(x, par: Parameterization) -> np.ndarray:
    """Flat vector with the rotation field encoded in ``par`` coordinates."""
    parts = []
    for f in fields(x):
        value = getattr(x, f.name)
        if _is_rotation_field(value):
            parts.append(encode_rotation(value, par))
        else:
            parts.append(np.ravel(value))
    return np.concatenate(parts)


def state_from_adapter(vec, par: Parameterization, kind: type):
    """Inverse of :func:`state_adapter` for ``kind`` in (StateFrame, StateQuad)."""
    par = Parameterization(par)
    vec = np.asarray(vec, dtype=float)
    out = {}
    i = 0
    for f in fields(kind):
        if f.name == "R":
            n = par.param_dim
            out["R"] = decode_rotation(vec[i : i + n], par)
        else:
            n = 3
            out[f.name] = vec[i : i + n].copy()
        i += n
    if i != vec.size:
        raise ValueError(f"expected {i} entries, got {vec.size}")
    return kind(**out)
