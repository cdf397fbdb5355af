import numpy as np
import pytest

from orientbench.distances import dist_geodesic
from orientbench.representations import Parameterization
from orientbench.so3 import log_so3, random_rotation, rot_z
from orientbench.wahba import (
    DegenerateInputError,
    WahbaInstance,
    as_rotation,
    cost,
    gauss_newton_solve,
    generate_instance,
    initial_params,
    residual,
    residual_jacobian,
    retract,
    solve_svd,
)

ALL = list(Parameterization)


def test_instance_is_deterministic():
    a, b = generate_instance(20, 7), generate_instance(20, 7)
    np.testing.assert_array_equal(a.points_body, b.points_body)
    np.testing.assert_array_equal(a.points_world, b.points_world)


def test_instance_needs_three_points():
    with pytest.raises(ValueError):
        generate_instance(2, 0)


def test_noiseless_residual_at_truth():
    inst = generate_instance(50, 1)
    for par in ALL:
        theta = initial_params(inst.R_true, par)
        assert np.abs(residual(theta, par, inst)).max() < 1e-14


def test_identity_instance_residual():
    pb = np.random.default_rng(0).normal(size=(10, 3))
    inst = WahbaInstance(pb, pb.copy(), np.eye(3))
    assert np.all(residual(np.eye(3), Parameterization.SO3_MANIFOLD, inst) == 0.0)


def test_cost_is_sum_of_squared_residuals():
    rng = np.random.default_rng(2)
    inst = generate_instance(30, 2, noise_sigma=0.1)
    R = random_rotation(rng)
    direct = sum(float(np.sum((pw - R @ pb) ** 2)) for pb, pw in zip(inst.points_body, inst.points_world))
    assert cost(R, Parameterization.SO3_MANIFOLD, inst) == pytest.approx(direct, rel=1e-12)


def test_svd_recovers_truth():
    inst = generate_instance(100, 3)
    assert dist_geodesic(solve_svd(inst), inst.R_true) < 1e-12


def test_svd_small_exact_case():
    pb = np.eye(3)
    R = rot_z(0.3)
    inst = WahbaInstance(pb, pb @ R.T, R)
    np.testing.assert_allclose(solve_svd(inst), R, atol=1e-15)


def test_svd_with_noise():
    errors = [dist_geodesic(solve_svd(inst), inst.R_true) for inst in (generate_instance(100, s, 0.01) for s in range(50))]
    assert max(errors) < 0.05


def test_svd_beats_random_rotations():
    inst = generate_instance(40, 4, noise_sigma=0.2)
    R = solve_svd(inst)
    best = cost(R, Parameterization.SO3_MANIFOLD, inst)
    rng = np.random.default_rng(4)
    q = rng.normal(size=(100_000, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    w, x, y, z = q.T
    Rs = np.stack(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    ).transpose(2, 0, 1)
    # cost(R) = const - 2 tr(R^T B)
    B = inst.points_world.T @ inst.points_body
    const = float(np.sum(inst.points_world**2) + np.sum(inst.points_body**2))
    costs = const - 2.0 * np.einsum("nij,ij->n", Rs, B)
    assert best <= costs.min() + 1e-9


def test_svd_rejects_collinear_points():
    pb = np.outer(np.linspace(1, 2, 5), [1.0, 0.0, 0.0])
    with pytest.raises(DegenerateInputError):
        solve_svd(WahbaInstance(pb, pb.copy(), np.eye(3)))


def _perturbed(theta, s, par):
    # the naive quaternion's Jacobian is with respect to plain addition
    if par is Parameterization.QUATERNION_NAIVE:
        return theta + s
    return retract(theta, s, par)


@pytest.mark.parametrize("par", ALL)
def test_residual_jacobians_match_finite_differences(par):
    rng = np.random.default_rng(5)
    eps = 1e-6
    for _ in range(10):
        inst = generate_instance(10, rng, 0.01)
        theta = initial_params(random_rotation(rng), par)
        J = residual_jacobian(theta, par, inst)
        fd = np.column_stack(
            [
                (residual(_perturbed(theta, e, par), par, inst) - residual(_perturbed(theta, -e, par), par, inst)) / (2 * eps)
                for e in eps * np.eye(par.step_dim)
            ]
        )
        assert np.abs(J - fd).max() <= 1e-5 * np.abs(fd).max()


def test_flat_jacobian_pattern():
    inst = generate_instance(4, 6)
    J = residual_jacobian(np.eye(3).ravel(), Parameterization.FLAT_MATRIX, inst)
    for i, p in enumerate(inst.points_body):
        np.testing.assert_array_equal(J[3 * i : 3 * i + 3], -np.kron(np.eye(3), p))


def test_attitude_jacobian_has_rank_three():
    inst = generate_instance(10, 7)
    rng = np.random.default_rng(7)
    for _ in range(10):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        J = residual_jacobian(q, Parameterization.QUATERNION_ATTITUDE, inst)
        assert J.shape == (30, 3)
        assert np.linalg.matrix_rank(J) == 3


@pytest.mark.parametrize("par", [Parameterization.SO3_MANIFOLD, Parameterization.QUATERNION_ATTITUDE])
def test_manifold_solvers_converge_fast(par):
    for seed in range(20):
        inst = generate_instance(100, seed)
        _, trace = gauss_newton_solve(par, inst, max_iters=15)
        assert min(trace.values) < 1e-10


def test_attitude_quaternion_matches_so3():
    inst = generate_instance(100, 8)
    R1, _ = gauss_newton_solve(Parameterization.SO3_MANIFOLD, inst)
    R2, _ = gauss_newton_solve(Parameterization.QUATERNION_ATTITUDE, inst)
    assert dist_geodesic(R1, R2) < 1e-9


def test_start_at_solution_stops_immediately():
    inst = generate_instance(100, 9)
    R, trace = gauss_newton_solve(Parameterization.SO3_MANIFOLD, inst, R_init=solve_svd(inst))
    assert trace.converged
    assert trace.iterations == 0
    assert trace.final <= 1e-13


@pytest.mark.parametrize("par", [Parameterization.SO3_MANIFOLD, Parameterization.QUATERNION_ATTITUDE])
def test_cost_non_increasing(par):
    for seed in range(200):
        inst = generate_instance(100, seed)
        theta = initial_params(np.eye(3), par)
        prev = cost(theta, par, inst)
        for _ in range(8):
            J, r = residual_jacobian(theta, par, inst), residual(theta, par, inst)
            theta = retract(theta, -np.linalg.solve(J.T @ J, J.T @ r), par)
            now = cost(theta, par, inst)
            assert now <= prev * (1 + 1e-9) + 1e-20
            prev = now


def test_naive_quaternion_stays_normalized():
    inst = generate_instance(100, 10)
    theta = initial_params(np.eye(3), Parameterization.QUATERNION_NAIVE)
    for _ in range(10):
        J = residual_jacobian(theta, Parameterization.QUATERNION_NAIVE, inst)
        r = residual(theta, Parameterization.QUATERNION_NAIVE, inst)
        theta = retract(theta, -np.linalg.lstsq(J, r, rcond=None)[0], Parameterization.QUATERNION_NAIVE)
        assert np.linalg.norm(theta) == pytest.approx(1.0, abs=1e-15)


def test_flat_iterate_is_projected_for_the_error():
    M = 1.7 * rot_z(0.2)
    np.testing.assert_allclose(as_rotation(M.ravel(), Parameterization.FLAT_MATRIX), rot_z(0.2), atol=1e-15)


def test_attitude_retraction_rotates_by_the_step():
    q = initial_params(rot_z(0.1), Parameterization.QUATERNION_ATTITUDE)
    q2 = retract(q, [0.0, 0.0, 0.25], Parameterization.QUATERNION_ATTITUDE)
    np.testing.assert_allclose(log_so3(as_rotation(q2, Parameterization.QUATERNION_ATTITUDE)), [0, 0, 0.6], atol=1e-14)
