"""Euler angles, axis-angle and unit quaternions, and conversions to SO(3).

Quaternions are ``[q_s, q_x, q_y, q_z]`` (scalar first, Hamilton product).
Euler conventions are intrinsic axis strings: ``"ZYX"`` means
``R = R_Z(t1) R_Y(t2) R_X(t3)``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .so3 import exp_so3, log_so3, rot_x, rot_y, rot_z

GIMBAL_TOL = 1e-7

# H r embeds a 3-vector as a pure quaternion; T q conjugates.
H = np.vstack((np.zeros((1, 3)), np.eye(3)))
T = np.diag([1.0, -1.0, -1.0, -1.0])

IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])

_AXES = {"X": 0, "Y": 1, "Z": 2}
_PRINCIPAL = (rot_x, rot_y, rot_z)
TAIT_BRYAN = ("XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX")
PROPER_EULER = ("ZXZ", "ZYZ")
CONVENTIONS = TAIT_BRYAN + PROPER_EULER


class Parameterization(str, Enum):
    """Orientation parameterizations compared by the benchmarks."""

    FLAT_MATRIX = "flat"
    EULER_ZYX = "euler"
    AXIS_ANGLE = "axis-angle"
    QUATERNION_NAIVE = "quat"
    QUATERNION_ATTITUDE = "quat-attitude"
    SO3_MANIFOLD = "so3"

    @property
    def param_dim(self) -> int:
        return _PARAM_DIM[self]

    @property
    def step_dim(self) -> int:
        """Dimension of the update vector an optimizer works with."""
        return _STEP_DIM[self]


_PARAM_DIM = {
    Parameterization.FLAT_MATRIX: 9,
    Parameterization.EULER_ZYX: 3,
    Parameterization.AXIS_ANGLE: 3,
    Parameterization.QUATERNION_NAIVE: 4,
    Parameterization.QUATERNION_ATTITUDE: 4,
    Parameterization.SO3_MANIFOLD: 9,
}
_STEP_DIM = {
    Parameterization.FLAT_MATRIX: 9,
    Parameterization.EULER_ZYX: 3,
    Parameterization.AXIS_ANGLE: 3,
    Parameterization.QUATERNION_NAIVE: 4,
    Parameterization.QUATERNION_ATTITUDE: 3,
    Parameterization.SO3_MANIFOLD: 3,
}


# --------------------------------------------------------------------------- Euler


@dataclass(frozen=True)
class EulerAngles:
    angles: np.ndarray
    convention: str = "ZYX"
    gimbal_lock: bool = False


@functools.lru_cache(maxsize=None)
def _check_convention(convention: str) -> tuple[int, int, int]:
    convention = convention.upper()
    if convention not in CONVENTIONS:
        raise ValueError(f"unsupported Euler convention {convention!r}")
    return tuple(_AXES[c] for c in convention)  # type: ignore[return-value]


def _parity(i: int, j: int) -> float:
    # +1 when (i, j, k) is a cyclic permutation of (0, 1, 2)
    return 1.0 if (j - i) % 3 == 1 else -1.0


def euler_to_rotation(angles, convention: str = "ZYX") -> np.ndarray:
    a1, a2, a3 = _check_convention(convention)
    t1, t2, t3 = angles.tolist() if isinstance(angles, np.ndarray) else (float(t) for t in angles)
    if convention == "ZYX":
        c1, s1 = math.cos(t1), math.sin(t1)
        c2, s2 = math.cos(t2), math.sin(t2)
        c3, s3 = math.cos(t3), math.sin(t3)
        return np.array(
            [
                [c1 * c2, c1 * s2 * s3 - s1 * c3, c1 * s2 * c3 + s1 * s3],
                [s1 * c2, s1 * s2 * s3 + c1 * c3, s1 * s2 * c3 - c1 * s3],
                [-s2, c2 * s3, c2 * c3],
            ]
        )
    return _PRINCIPAL[a1](t1) @ _PRINCIPAL[a2](t2) @ _PRINCIPAL[a3](t3)


def _wrap(angle: float) -> float:
    # atan2 yields [-pi, pi]; canonical range is (-pi, pi]
    return math.pi if angle <= -math.pi else angle


def rotation_to_euler(R, convention: str = "ZYX") -> EulerAngles:
    """Extract Euler angles with ``atan2`` closed forms.

    At gimbal lock the third angle is pinned to zero, the first absorbs the
    free combination and ``gimbal_lock`` is set.
    """
    R = np.asarray(R, dtype=float)
    i, j, third = _check_convention(convention)
    if convention == "ZYX":
        (r00, r01, _), (r10, r11, r12), (r20, r21, r22) = R.tolist()
        b = math.asin(max(-1.0, min(1.0, -r20)))
        if abs(math.cos(b)) >= GIMBAL_TOL:
            a, c = math.atan2(r10, r00), math.atan2(r21, r22)
            return EulerAngles(np.array([_wrap(a), b, _wrap(c)]), "ZYX", False)
    if third != i:
        k = third
        s = _parity(i, j)
        sin_b = max(-1.0, min(1.0, s * R[i, k]))
        b = math.asin(sin_b)
        locked = abs(math.cos(b)) < GIMBAL_TOL
        if not locked:
            a = math.atan2(-s * R[j, k], R[k, k])
            c = math.atan2(-s * R[i, j], R[i, i])
    else:
        k = 3 - i - j
        s = _parity(i, j)
        b = math.acos(max(-1.0, min(1.0, R[i, i])))
        locked = abs(math.sin(b)) < GIMBAL_TOL
        if not locked:
            a = math.atan2(R[j, i], -s * R[k, i])
            c = math.atan2(R[i, j], s * R[i, k])
    if locked:
        c = 0.0
        a = math.atan2(s * R[k, j], R[j, j])
    return EulerAngles(np.array([_wrap(a), b, _wrap(c)]), convention.upper(), locked)


def euler_body_jacobian(angles, convention: str = "ZYX") -> np.ndarray:
    """Matrix ``E`` with ``R^T dR = hat(E dtheta)`` (body angular rates)."""
    a1, a2, a3 = _check_convention(convention)
    t1, t2, t3 = angles.tolist() if isinstance(angles, np.ndarray) else (float(t) for t in angles)
    if convention == "ZYX":
        c2, s2 = math.cos(t2), math.sin(t2)
        c3, s3 = math.cos(t3), math.sin(t3)
        return np.array([[-s2, 0.0, 1.0], [c2 * s3, c3, 0.0], [c2 * c3, -s3, 0.0]])
    R2 = _PRINCIPAL[a2](t2)
    R3 = _PRINCIPAL[a3](t3)
    E = np.empty((3, 3))
    E[:, 0] = (R2 @ R3).T[:, a1]
    E[:, 1] = R3.T[:, a2]
    E[:, 2] = 0.0
    E[a3, 2] = 1.0
    return E


# ---------------------------------------------------------------------- axis-angle


def axis_angle_to_rotation(phi) -> np.ndarray:
    return exp_so3(phi)


def rotation_to_axis_angle(R) -> np.ndarray:
    return log_so3(R)


# ---------------------------------------------------------------------- quaternion


def _components(q) -> list[float]:
    return q.tolist() if isinstance(q, np.ndarray) else [float(c) for c in q]


def quat_L(q) -> np.ndarray:
    """Left-multiplication matrix: ``q (x) p = L(q) p``."""
    s, x, y, z = _components(q)
    return np.array(
        [[s, -x, -y, -z], [x, s, -z, y], [y, z, s, -x], [z, -y, x, s]]
    )


def quat_R(q) -> np.ndarray:
    """Right-multiplication matrix: ``p (x) q = R(q) p``."""
    s, x, y, z = _components(q)
    return np.array(
        [[s, -x, -y, -z], [x, s, z, -y], [y, -z, s, x], [z, y, -x, s]]
    )


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / math.sqrt(float(q @ q))


def quat_mul(q2, q1) -> np.ndarray:
    """Hamilton product ``q2 (x) q1``, renormalized."""
    a0, a1, a2, a3 = _components(q2)
    b0, b1, b2, b3 = _components(q1)
    s = a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3
    x = a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2
    y = a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1
    z = a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0
    n = math.sqrt(s * s + x * x + y * y + z * z)
    return np.array([s / n, x / n, y / n, z / n])


def quat_conjugate(q) -> np.ndarray:
    return T @ np.asarray(q, dtype=float)


def quat_to_rotation(q) -> np.ndarray:
    """``A(q) = H^T L(q) R(q)^T H`` for the normalized ``q``."""
    s, x, y, z = _components(q)
    n = math.sqrt(s * s + x * x + y * y + z * z)
    s, x, y, z = s / n, x / n, y / n, z / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - s * z), 2 * (x * z + s * y)],
            [2 * (x * y + s * z), 1 - 2 * (x * x + z * z), 2 * (y * z - s * x)],
            [2 * (x * z - s * y), 2 * (y * z + s * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_rotate(q, r) -> np.ndarray:
    """``q (x) r (x) q*`` evaluated as ``H^T L(q) R(q)^T H r``."""
    q = np.asarray(q, dtype=float)
    return H.T @ quat_L(q) @ quat_R(q).T @ H @ np.asarray(r, dtype=float)


def canonical_quat(q) -> np.ndarray:
    """Representative of ``+-q`` with non-negative scalar part."""
    q = np.asarray(q, dtype=float)
    if q[0] < 0.0:
        return -q
    if q[0] == 0.0:
        k = int(np.argmax(np.abs(q[1:]) > 0.0)) + 1
        if q[k] < 0.0:
            return -q
    return q


def rotation_to_quat(R) -> np.ndarray:
    """Shepperd extraction; result has ``q_s >= 0``."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    diag = [tr, R[0, 0], R[1, 1], R[2, 2]]
    choice = diag.index(max(diag))
    if choice == 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif choice == 1:
        s = 2.0 * math.sqrt(max(0.0, 1.0 + R[0, 0] - R[1, 1] - R[2, 2]))
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif choice == 2:
        s = 2.0 * math.sqrt(max(0.0, 1.0 + R[1, 1] - R[0, 0] - R[2, 2]))
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(max(0.0, 1.0 + R[2, 2] - R[0, 0] - R[1, 1]))
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    return canonical_quat(quat_normalize(q))


def attitude_jacobian(q) -> np.ndarray:
    """``G(q) = L(q) H`` (4x3): maps quaternion-space gradients to rotation space."""
    return quat_L(q) @ H


def quat_exp(v) -> np.ndarray:
    """Exponential of the pure quaternion ``[0, v]``: ``[cos|v|, sin|v| v/|v|]``."""
    v = np.asarray(v, dtype=float)
    n = math.sqrt(float(v @ v))
    if n < 1e-8:
        return np.concatenate(([1.0 - 0.5 * n * n], (1.0 - n * n / 6.0) * v))
    return np.concatenate(([math.cos(n)], (math.sin(n) / n) * v))


def quat_from_axis_angle(phi) -> np.ndarray:
    """Unit quaternion of ``exp_so3(phi)`` (half-angle encoding)."""
    return quat_exp(0.5 * np.asarray(phi, dtype=float))


def random_quat(rng: np.random.Generator) -> np.ndarray:
    return quat_normalize(rng.normal(size=4))


# ------------------------------------------------------------------ flat encodings


def encode_rotation(R, par: Parameterization) -> np.ndarray:
    """Flat parameter vector of ``R`` in parameterization ``par`` (canonical)."""
    R = np.asarray(R, dtype=float)
    par = Parameterization(par)
    if par in (Parameterization.FLAT_MATRIX, Parameterization.SO3_MANIFOLD):
        return R.ravel().copy()
    if par is Parameterization.EULER_ZYX:
        return rotation_to_euler(R, "ZYX").angles
    if par is Parameterization.AXIS_ANGLE:
        return log_so3(R)
    return rotation_to_quat(R)


def decode_rotation(theta, par: Parameterization) -> np.ndarray:
    """Rotation matrix of a parameter vector (flat matrices are only reshaped)."""
    theta = np.asarray(theta, dtype=float)
    par = Parameterization(par)
    if par in (Parameterization.FLAT_MATRIX, Parameterization.SO3_MANIFOLD):
        return theta.reshape(3, 3).copy()
    if par is Parameterization.EULER_ZYX:
        return euler_to_rotation(theta, "ZYX")
    if par is Parameterization.AXIS_ANGLE:
        return exp_so3(theta)
    return quat_to_rotation(theta)


__all__ = [
    "CONVENTIONS",
    "EulerAngles",
    "H",
    "IDENTITY_QUAT",
    "Parameterization",
    "T",
    "attitude_jacobian",
    "axis_angle_to_rotation",
    "canonical_quat",
    "decode_rotation",
    "encode_rotation",
    "euler_body_jacobian",
    "euler_to_rotation",
    "quat_L",
    "quat_R",
    "quat_conjugate",
    "quat_exp",
    "quat_from_axis_angle",
    "quat_mul",
    "quat_normalize",
    "quat_rotate",
    "quat_to_rotation",
    "random_quat",
    "rotation_to_axis_angle",
    "rotation_to_euler",
    "rotation_to_quat",
]
