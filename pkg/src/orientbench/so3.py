"""The SO(3) matrix Lie group and its Lie algebra.

Rotations are plain ``(3, 3)`` float arrays and tangent vectors are plain
``(3,)`` arrays ``phi = theta * a`` with ``|a| = 1``.  The right convention is
the default everywhere: ``R (+) dphi = R exp(dphi)`` and
``R2 (-) R1 = log(R1^T R2)``.  Left variants exist under explicit names.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

SMALL_ANGLE = 1e-5
NEAR_PI = 1e-2  # log switches to the axis-extraction branch when pi - theta < NEAR_PI
ORTHO_DRIFT = 1e-9
SKEW_TOL = 1e-9

_I3 = np.eye(3)


class NotSkewError(ValueError):
    """Raised by :func:`vee` when the input is not skew-symmetric."""


def hat(v) -> np.ndarray:
    """Skew-symmetric matrix with ``hat(v) @ w == cross(v, w)``."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def cross(a, b) -> np.ndarray:
    """``a x b`` for 3-vectors (much cheaper than ``np.cross`` on single vectors)."""
    a0, a1, a2 = float(a[0]), float(a[1]), float(a[2])
    b0, b1, b2 = float(b[0]), float(b[1]), float(b[2])
    return np.array([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0])


def vee(M, tol: float = SKEW_TOL) -> np.ndarray:
    """Inverse of :func:`hat`.

    Raises:
        NotSkewError: if ``|M + M^T|_F > tol``.
    """
    M = np.asarray(M, dtype=float)
    if np.linalg.norm(M + M.T) > tol:
        raise NotSkewError("matrix is not skew-symmetric")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def orthonormality_error(R) -> float:
    """Frobenius norm of ``R R^T - I``."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R @ R.T - _I3))


def is_rotation(R, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return orthonormality_error(R) <= tol and abs(np.linalg.det(R) - 1.0) <= tol


def orthonormalize(R) -> np.ndarray:
    """Gram-Schmidt on the columns of ``R`` (right-handed result)."""
    R = np.asarray(R, dtype=float)
    c0 = R[:, 0] / np.linalg.norm(R[:, 0])
    c1 = R[:, 1] - (c0 @ R[:, 1]) * c0
    c1 /= np.linalg.norm(c1)
    c2 = cross(c0, c1)
    return np.column_stack((c0, c1, c2))


def _guard(R: np.ndarray) -> np.ndarray:
    D = (R @ R.T - _I3).ravel()
    if float(D @ D) > ORTHO_DRIFT * ORTHO_DRIFT:
        return orthonormalize(R)
    return R


def _exp_rows(x: float, y: float, z: float):
    theta2 = x * x + y * y + z * z
    theta = math.sqrt(theta2)
    if theta < SMALL_ANGLE:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        a = math.sin(theta) / theta
        half = math.sin(0.5 * theta)
        b = 2.0 * half * half / theta2
    # I + a*hat(phi) + b*hat(phi)^2, expanded
    return (
        (1.0 - b * (y * y + z * z), b * x * y - a * z, b * x * z + a * y),
        (b * x * y + a * z, 1.0 - b * (x * x + z * z), b * y * z - a * x),
        (b * x * z - a * y, b * y * z + a * x, 1.0 - b * (x * x + y * y)),
    )


def exp_so3(phi) -> np.ndarray:
    """Exponential map (Rodrigues formula)."""
    return np.array(_exp_rows(float(phi[0]), float(phi[1]), float(phi[2])))


def log_so3(R) -> np.ndarray:
    """Logarithm map, canonicalized to ``|phi| <= pi``.

    Uses ``atan2`` for the angle so both ends of ``[0, pi]`` stay accurate.
    Near ``pi`` the axis is read from the symmetric part of ``R``; the sign
    comes from the antisymmetric part.
    """
    R = np.asarray(R, dtype=float)
    (r00, r01, r02), (r10, r11, r12), (r20, r21, r22) = R.tolist()
    w0, w1, w2 = r21 - r12, r02 - r20, r10 - r01
    s = 0.5 * math.sqrt(w0 * w0 + w1 * w1 + w2 * w2)  # sin(theta)
    c = 0.5 * (r00 + r11 + r22 - 1.0)  # cos(theta)
    theta = math.atan2(s, c)
    if theta < SMALL_ANGLE:
        f = 0.5 * (1.0 + theta * theta / 6.0)
        return np.array([f * w0, f * w1, f * w2])
    if math.pi - theta > NEAR_PI:
        f = 0.5 * theta / s
        return np.array([f * w0, f * w1, f * w2])
    w = np.array([w0, w1, w2])
    B = 0.5 * (R + R.T) - c * _I3  # = (1 - cos theta) a a^T
    i = int(np.argmax(np.diag(B)))
    axis = B[:, i] / math.sqrt(B[i, i] * (1.0 - c))
    axis /= np.linalg.norm(axis)
    d = axis @ w
    if d < 0.0:
        axis = -axis
    elif d == 0.0:
        # exactly pi: both signs are valid, pick the first nonzero component positive
        k = int(np.argmax(np.abs(axis) > 1e-12))
        if axis[k] < 0.0:
            axis = -axis
    return theta * axis


def oplus_right(R, dphi) -> np.ndarray:
    """``R (+) dphi = R exp(dphi)``; ``dphi`` lives in the tangent space at ``R``."""
    (e00, e01, e02), (e10, e11, e12), (e20, e21, e22) = _exp_rows(float(dphi[0]), float(dphi[1]), float(dphi[2]))
    rows = []
    for r0, r1, r2 in np.asarray(R, dtype=float).tolist():
        rows.append((r0 * e00 + r1 * e10 + r2 * e20, r0 * e01 + r1 * e11 + r2 * e21, r0 * e02 + r1 * e12 + r2 * e22))
    (a0, a1, a2), (b0, b1, b2), (c0, c1, c2) = rows
    # same drift measure as _guard, without building R R^T
    ab, ac, bc = a0 * b0 + a1 * b1 + a2 * b2, a0 * c0 + a1 * c1 + a2 * c2, b0 * c0 + b1 * c1 + b2 * c2
    aa = a0 * a0 + a1 * a1 + a2 * a2 - 1.0
    bb = b0 * b0 + b1 * b1 + b2 * b2 - 1.0
    cc = c0 * c0 + c1 * c1 + c2 * c2 - 1.0
    drift = aa * aa + bb * bb + cc * cc + 2.0 * (ab * ab + ac * ac + bc * bc)
    out = np.array(rows)
    return orthonormalize(out) if drift > ORTHO_DRIFT * ORTHO_DRIFT else out


def oplus_left(dphi, R) -> np.ndarray:
    """``dphi (+) R = exp(dphi) R``; ``dphi`` lives in the tangent space at identity."""
    return _guard(exp_so3(dphi) @ np.asarray(R, dtype=float))


def ominus_right(R2, R1) -> np.ndarray:
    """``R2 (-) R1 = log(R1^T R2)``."""
    return log_so3(np.asarray(R1, dtype=float).T @ np.asarray(R2, dtype=float))


def ominus_left(R2, R1) -> np.ndarray:
    """``R2 (-) R1 = log(R2 R1^T)``."""
    return log_so3(np.asarray(R2, dtype=float) @ np.asarray(R1, dtype=float).T)


def adjoint(R) -> np.ndarray:
    """Adjoint of SO(3): the rotation matrix itself."""
    return np.array(R, dtype=float)


def _jacobian_coefficients(theta2: float) -> tuple[float, float]:
    theta = math.sqrt(theta2)
    if theta < SMALL_ANGLE:
        return 0.5 - theta2 / 24.0, 1.0 / 6.0 - theta2 / 120.0
    half = math.sin(0.5 * theta)
    return 2.0 * half * half / theta2, (theta - math.sin(theta)) / (theta2 * theta)


def _with_hat(alpha: float, beta: float, gamma: float, x: float, y: float, z: float) -> np.ndarray:
    # alpha I + beta hat(phi) + gamma hat(phi)^2, using hat^2 = phi phi^T - theta^2 I
    d = alpha - gamma * (x * x + y * y + z * z)
    return np.array(
        [
            [d + gamma * x * x, gamma * x * y - beta * z, gamma * x * z + beta * y],
            [gamma * x * y + beta * z, d + gamma * y * y, gamma * y * z - beta * x],
            [gamma * x * z - beta * y, gamma * y * z + beta * x, d + gamma * z * z],
        ]
    )


def right_jacobian(phi) -> np.ndarray:
    """Right Jacobian ``J_r``: ``exp(phi + d) ~= exp(phi) exp(J_r(phi) d)``."""
    x, y, z = float(phi[0]), float(phi[1]), float(phi[2])
    b, c = _jacobian_coefficients(x * x + y * y + z * z)
    return _with_hat(1.0, -b, c, x, y, z)


def left_jacobian(phi) -> np.ndarray:
    """Left Jacobian, ``J_l(phi) = J_r(-phi)``."""
    x, y, z = float(phi[0]), float(phi[1]), float(phi[2])
    b, c = _jacobian_coefficients(x * x + y * y + z * z)
    return _with_hat(1.0, b, c, x, y, z)


def right_jacobian_inv(phi) -> np.ndarray:
    """Closed-form inverse of :func:`right_jacobian` (singular at ``|phi| = 2 pi``)."""
    x, y, z = float(phi[0]), float(phi[1]), float(phi[2])
    theta2 = x * x + y * y + z * z
    theta = math.sqrt(theta2)
    if theta < SMALL_ANGLE:
        d = 1.0 / 12.0 + theta2 / 720.0
    else:
        d = 1.0 / theta2 - (1.0 + math.cos(theta)) / (2.0 * theta * math.sin(theta))
    return _with_hat(1.0, 0.5, d, x, y, z)


def manifold_derivative_check(
    f: Callable[[np.ndarray], np.ndarray], J, R, eps: float = 1e-6
) -> float:
    """Largest column error of ``J`` against the right-Jacobian limit definition.

    Returns ``max_i |(f(R (+) eps e_i) (-) f(R)) / eps - J e_i|`` using forward
    differences with right plus/minus.
    """
    J = np.asarray(J, dtype=float)
    f0 = f(R)
    worst = 0.0
    for i in range(3):
        e = np.zeros(3)
        e[i] = eps
        column = ominus_right(f(oplus_right(R, e)), f0) / eps
        worst = max(worst, float(np.linalg.norm(column - J[:, i])))
    return worst


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform sample on SO(3) from a normalized 4-D Gaussian quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
