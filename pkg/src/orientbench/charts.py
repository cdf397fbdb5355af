"""Orientation coordinates for trajectory optimization.

A chart stores an orientation as a flat vector ``r`` and supplies

* ``diff(r, r_bar)`` and ``plus(r_bar, d)``: the deviation the optimizer works with,
* ``to_tangent(r)``: ``(3, tdim)`` map from a deviation to a right tangent
  perturbation ``dphi`` of the rotation, and ``from_tangent(r)`` its ``(tdim, 3)``
  counterpart for the encoded successor,
* ``error(r, r_ref)``: residual ``e`` of the orientation cost ``|e|^2`` and
  ``de/d(deviation)``; ``residual`` returns ``e`` alone.

Only the SO(3) and attitude-quaternion charts measure deviations on the
manifold; the others subtract coordinates.
"""

from __future__ import annotations

import numpy as np

from .representations import (
    Parameterization,
    attitude_jacobian,
    canonical_quat,
    euler_body_jacobian,
    euler_to_rotation,
    quat_exp,
    quat_mul,
    quat_to_rotation,
    rotation_to_euler,
    rotation_to_quat,
    T,
)
from .so3 import (
    exp_so3,
    hat,
    log_so3,
    ominus_right,
    oplus_right,
    right_jacobian,
    right_jacobian_inv,
)

_I3 = np.eye(3)


class Chart:
    par: Parameterization
    dim: int
    tdim: int
    identity_tangent = False  # to_tangent and from_tangent are both I3

    def encode(self, R) -> np.ndarray:
        raise NotImplementedError

    def decode(self, r) -> np.ndarray:
        raise NotImplementedError

    def diff(self, r, r_bar) -> np.ndarray:
        return np.asarray(r, dtype=float) - r_bar

    def plus(self, r_bar, d) -> np.ndarray:
        return np.asarray(r_bar, dtype=float) + d

    def to_tangent(self, r) -> np.ndarray:
        raise NotImplementedError

    def from_tangent(self, r) -> np.ndarray:
        raise NotImplementedError

    def error(self, r, r_ref) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(r, dtype=float) - r_ref, np.eye(self.tdim)

    def residual(self, r, r_ref) -> np.ndarray:
        """``error(r, r_ref)[0]`` without the Jacobian."""
        return np.asarray(r, dtype=float) - r_ref

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class SO3Chart(Chart):
    par = Parameterization.SO3_MANIFOLD
    dim = 9
    tdim = 3
    identity_tangent = True

    def encode(self, R):
        return np.asarray(R, dtype=float).ravel().copy()

    def decode(self, r):
        return np.asarray(r, dtype=float).reshape(3, 3)

    def diff(self, r, r_bar):
        return ominus_right(self.decode(r), self.decode(r_bar))

    def plus(self, r_bar, d):
        return oplus_right(self.decode(r_bar), d).ravel()

    def to_tangent(self, r):
        return _I3

    def from_tangent(self, r):
        return _I3

    def error(self, r, r_ref):
        e = self.residual(r, r_ref)
        return e, right_jacobian_inv(e)

    def residual(self, r, r_ref):
        return log_so3(self.decode(r_ref).T @ self.decode(r))


class EulerChart(Chart):
    """ZYX Euler angles with plain subtraction (no wrap handling)."""

    par = Parameterization.EULER_ZYX
    dim = 3
    tdim = 3

    def encode(self, R):
        return rotation_to_euler(R, "ZYX").angles

    def decode(self, r):
        return euler_to_rotation(r, "ZYX")

    def to_tangent(self, r):
        return euler_body_jacobian(r, "ZYX")

    def from_tangent(self, r):
        return np.linalg.inv(euler_body_jacobian(r, "ZYX"))


class AxisAngleChart(Chart):
    par = Parameterization.AXIS_ANGLE
    dim = 3
    tdim = 3

    def encode(self, R):
        return log_so3(R)

    def decode(self, r):
        return exp_so3(r)

    def to_tangent(self, r):
        return right_jacobian(r)

    def from_tangent(self, r):
        return right_jacobian_inv(r)


class QuatNaiveChart(Chart):
    """Quaternion treated as a point of R^4 (4-D deviations)."""

    par = Parameterization.QUATERNION_NAIVE
    dim = 4
    tdim = 4

    def encode(self, R):
        return rotation_to_quat(R)

    def decode(self, r):
        return quat_to_rotation(r)

    def to_tangent(self, r):
        # dphi = 2 G(q)^T dq for unit q; the radial direction does not rotate
        return 2.0 * attitude_jacobian(r).T

    def from_tangent(self, r):
        return 0.5 * attitude_jacobian(r)


class QuatAttitudeChart(Chart):
    """Quaternion stored in R^4 with 3-D deviations through the attitude Jacobian."""

    par = Parameterization.QUATERNION_ATTITUDE
    dim = 4
    tdim = 3
    identity_tangent = True

    def encode(self, R):
        return rotation_to_quat(R)

    def decode(self, r):
        return quat_to_rotation(r)

    def diff(self, r, r_bar):
        rel = canonical_quat(quat_mul(T @ np.asarray(r_bar, dtype=float), r))
        return 2.0 * rel[1:]

    def plus(self, r_bar, d):
        return quat_mul(r_bar, quat_exp(0.5 * np.asarray(d, dtype=float)))

    def to_tangent(self, r):
        return _I3

    def from_tangent(self, r):
        return _I3

    def error(self, r, r_ref):
        # e = 2 vec(q_ref* (x) q); |e|^2 = 4 sin^2(theta / 2) for either sign of q.
        # de/dd = H^T L(q_ref* (x) q) H = w I + hat(v) for q_ref* (x) q = [w, v]
        rel = quat_mul(T @ np.asarray(r_ref, dtype=float), r)
        return 2.0 * rel[1:], rel[0] * _I3 + hat(rel[1:])

    def residual(self, r, r_ref):
        return 2.0 * quat_mul(T @ np.asarray(r_ref, dtype=float), r)[1:]


CHARTS: dict[Parameterization, type[Chart]] = {
    Parameterization.SO3_MANIFOLD: SO3Chart,
    Parameterization.EULER_ZYX: EulerChart,
    Parameterization.AXIS_ANGLE: AxisAngleChart,
    Parameterization.QUATERNION_NAIVE: QuatNaiveChart,
    Parameterization.QUATERNION_ATTITUDE: QuatAttitudeChart,
}

ILQR_PARAMETERIZATIONS = tuple(CHARTS)


def make_chart(par) -> Chart:
    par = Parameterization(par)
    if par not in CHARTS:
        raise ValueError(f"{par.value!r} is not supported for trajectory optimization")
    return CHARTS[par]()
