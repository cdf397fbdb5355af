import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from orientbench.so3 import (
    NotSkewError,
    adjoint,
    cross,
    exp_so3,
    hat,
    is_rotation,
    left_jacobian,
    log_so3,
    manifold_derivative_check,
    ominus_left,
    ominus_right,
    oplus_left,
    oplus_right,
    orthonormalize,
    random_rotation,
    right_jacobian,
    right_jacobian_inv,
    rot_x,
    rot_z,
    vee,
)

# frozen from scipy.spatial.transform.Rotation.from_rotvec
PHI = np.array([0.3, -0.2, 0.5])
EXP_PHI = np.array(
    [
        [0.8595338985586632, -0.4979915370029221, -0.11491695393636675],
        [0.43986763295823095, 0.8353156052067087, -0.3297943376922552],
        [0.2602267140480945, 0.23292116428443665, 0.937032437284918],
    ]
)
# central differences of exp at PHI, mapped back with log (step 1e-7)
JR_PHI = np.array(
    [
        [0.9525767349703534, 0.2323712235134124, 0.12140244842315284],
        [-0.25199464352567996, 0.9444003099652423, 0.12895691010150484],
        [-0.07234389839248412, -0.1616626101219506, 0.9787412949867101],
    ]
)

vectors = st.lists(st.floats(-3.0, 3.0, allow_nan=False), min_size=3, max_size=3).map(np.array)
seeds = st.integers(0, 2**32 - 1)


def test_hat_example():
    np.testing.assert_array_equal(hat([1, 2, 3]), [[0, -3, 2], [3, 0, -1], [-2, 1, 0]])


@given(vectors, vectors)
def test_hat_is_cross_product(a, b):
    np.testing.assert_allclose(hat(a) @ b, np.cross(a, b), atol=1e-12)
    np.testing.assert_allclose(cross(a, b), np.cross(a, b), atol=1e-12)


@given(vectors)
def test_vee_inverts_hat(v):
    np.testing.assert_array_equal(vee(hat(v)), v)


def test_vee_rejects_symmetric():
    with pytest.raises(NotSkewError):
        vee(np.eye(3))


def test_exp_quarter_turn_about_x():
    np.testing.assert_allclose(exp_so3([math.pi / 2, 0, 0]), rot_x(math.pi / 2), atol=1e-15)


def test_exp_matches_frozen_oracle():
    np.testing.assert_allclose(exp_so3(PHI), EXP_PHI, atol=1e-15)


@settings(max_examples=50)
@given(vectors)
def test_exp_matches_scipy(v):
    np.testing.assert_allclose(exp_so3(v), Rotation.from_rotvec(v).as_matrix(), atol=1e-13)


@pytest.mark.parametrize("theta", [0.0, 1e-12, 1e-6, 1e-5, 1e-4, 0.5, 3.0, math.pi - 1e-3, math.pi - 1e-9])
def test_exp_log_roundtrip_across_branches(theta):
    axis = np.array([1.0, -2.0, 0.5]) / np.linalg.norm([1.0, -2.0, 0.5])
    phi = theta * axis
    np.testing.assert_allclose(log_so3(exp_so3(phi)), phi, atol=1e-10)


def test_log_at_pi_is_canonical():
    phi = log_so3(rot_z(math.pi))
    assert np.linalg.norm(phi) == pytest.approx(math.pi)
    np.testing.assert_allclose(phi, [0, 0, math.pi], atol=1e-12)


@given(seeds)
def test_log_exp_roundtrip_on_group(seed):
    R = random_rotation(np.random.default_rng(seed))
    phi = log_so3(R)
    assert np.linalg.norm(phi) <= math.pi + 1e-12
    np.testing.assert_allclose(exp_so3(phi), R, atol=1e-10)


def test_ominus_about_common_axis():
    np.testing.assert_allclose(ominus_right(rot_z(0.9), rot_z(0.2)), [0, 0, 0.7], atol=1e-14)


def test_oplus_left_applies_in_world_frame():
    R = oplus_left([0, 0, 0.2], rot_x(0.5))
    np.testing.assert_allclose(R, rot_z(0.2) @ rot_x(0.5), atol=1e-15)


@given(seeds, vectors)
def test_plus_minus_are_inverse(seed, d):
    d = d * (0.9 * math.pi / 3.0 / math.sqrt(3.0))  # stay inside the injectivity radius
    R = random_rotation(np.random.default_rng(seed))
    np.testing.assert_allclose(ominus_right(oplus_right(R, d), R), d, atol=1e-10)
    np.testing.assert_allclose(ominus_left(oplus_left(d, R), R), d, atol=1e-10)


@given(seeds, vectors)
def test_adjoint_moves_tangent_vectors(seed, v):
    R = random_rotation(np.random.default_rng(seed))
    np.testing.assert_allclose(R @ exp_so3(v) @ R.T, exp_so3(adjoint(R) @ v), atol=1e-12)


def test_right_jacobian_matches_frozen_oracle():
    np.testing.assert_allclose(right_jacobian(PHI), JR_PHI, atol=1e-8)


@given(vectors)
def test_left_right_jacobian_relation(v):
    np.testing.assert_allclose(left_jacobian(v), right_jacobian(-v), atol=1e-14)
    np.testing.assert_allclose(left_jacobian(v), exp_so3(v) @ right_jacobian(v), atol=1e-12)


@pytest.mark.parametrize("scale", [0.0, 1e-7, 1e-3, 1.0, 2.5, 3.1])
def test_right_jacobian_inverse(scale):
    phi = scale * np.array([0.6, 0.0, -0.8])
    np.testing.assert_allclose(right_jacobian_inv(phi) @ right_jacobian(phi), np.eye(3), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_manifold_derivative_check_on_inverse_map(seed):
    rng = np.random.default_rng(seed)
    R = random_rotation(rng)
    # f(R) = R^T has right Jacobian -Ad(R)
    assert manifold_derivative_check(lambda X: X.T, -adjoint(R), R) < 1e-5
    assert manifold_derivative_check(lambda X: X.T, np.eye(3), R) > 0.5


def test_orthonormalize_repairs_drift():
    R = rot_z(0.3) + 1e-6 * np.arange(9.0).reshape(3, 3)
    assert not is_rotation(R)
    assert is_rotation(orthonormalize(R))


def test_oplus_keeps_rotation_after_many_steps():
    R = np.eye(3)
    for _ in range(10000):
        R = oplus_right(R, [0.013, -0.021, 0.007])
    assert is_rotation(R, tol=1e-9)


def test_random_rotation_is_uniform_enough():
    rng = np.random.default_rng(0)
    angles = np.array([np.linalg.norm(log_so3(random_rotation(rng))) for _ in range(4000)])
    # Haar measure: angle density (1 - cos t) / pi, so E[t] = pi / 2 + 2 / pi
    assert angles.mean() == pytest.approx(math.pi / 2 + 2 / math.pi, abs=0.03)
