"""Distances between rotations and projection of arbitrary matrices onto SO(3)."""

from __future__ import annotations

import warnings

import numpy as np

from .so3 import log_so3


class DegenerateProjectionWarning(RuntimeWarning):
    """The nearest rotation is not unique; the returned candidate is one of several."""


def dist_naive(Rd, Rp) -> float:
    """Frobenius norm of ``Rd - Rp``; ``Rp`` need not be a rotation."""
    return float(np.linalg.norm(np.asarray(Rd, dtype=float) - np.asarray(Rp, dtype=float)))


def dist_geodesic(Rd, Rp) -> float:
    """Rotation angle of the relative rotation, in ``[0, pi]``."""
    Rd = np.asarray(Rd, dtype=float)
    Rp = np.asarray(Rp, dtype=float)
    return float(np.linalg.norm(log_so3(Rp.T @ Rd)))


def project_so3(M, rtol: float = 1e-12) -> np.ndarray:
    """Nearest rotation to ``M`` in Frobenius norm.

    ``R = U diag(1, 1, det(U V^T)) V^T`` from ``M = U S V^T``.  Emits
    :class:`DegenerateProjectionWarning` when ``s2 + s3`` vanishes relative to
    ``s1`` (the minimizer is then not unique).
    """
    M = np.asarray(M, dtype=float)
    U, S, Vt = np.linalg.svd(M)
    d = np.sign(np.linalg.det(U @ Vt)) or 1.0
    if S[1] + S[2] <= rtol * max(S[0], np.finfo(float).tiny):
        warnings.warn("projection onto SO(3) is not unique", DegenerateProjectionWarning, stacklevel=2)
    return U @ np.diag([1.0, 1.0, d]) @ Vt


def dist_chordal(Rd, M) -> float:
    """Naive distance between ``Rd`` and the SO(3) projection of ``M``."""
    return dist_naive(Rd, project_so3(M))
