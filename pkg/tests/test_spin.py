import numpy as np
import pytest

from echolab import (
    CoherentSpec,
    TopParams,
    angular_momentum_matrices,
    coherent_state,
    heisenberg_correlations,
    top_propagator,
)


def test_spin_half_matrices():
    ops = angular_momentum_matrices(0.5)
    assert ops.dim == 2
    np.testing.assert_allclose(ops.jz, np.diag([0.5, -0.5]))
    np.testing.assert_allclose(ops.jx, [[0.0, 0.5], [0.5, 0.0]])


def test_spin_one_matrices():
    ops = angular_momentum_matrices(1)
    np.testing.assert_allclose(ops.jz, np.diag([1.0, 0.0, -1.0]))
    jsq = ops.jx @ ops.jx + ops.jy @ ops.jy + ops.jz @ ops.jz
    np.testing.assert_allclose(jsq, 2.0 * np.eye(3), atol=1e-12)


@pytest.mark.parametrize("J", [0.5, 1, 2.5, 5, 20])
def test_commutators_and_casimir(J):
    ops = angular_momentum_matrices(J)
    for a, b, c in ((ops.jx, ops.jy, ops.jz), (ops.jy, ops.jz, ops.jx), (ops.jz, ops.jx, ops.jy)):
        comm = a @ b - b @ a
        assert np.abs(comm - 1j * c).max() < 1e-12
    jsq = ops.jx @ ops.jx + ops.jy @ ops.jy + ops.jz @ ops.jz
    assert np.abs(jsq - J * (J + 1) * np.eye(ops.dim)).max() < 1e-12


def test_jz_strictly_descending():
    ops = angular_momentum_matrices(3)
    assert np.all(np.diff(ops.m) == -1.0)


@pytest.mark.parametrize("bad", [0.3, -1, 0, 0.25, np.nan])
def test_invalid_spin_rejected(bad):
    with pytest.raises(ValueError):
        angular_momentum_matrices(bad)


class TestCoherentState:
    def test_north_pole_is_top_ladder_state(self):
        psi = coherent_state(7, CoherentSpec(0.0, 1.3))
        expected = np.zeros(15)
        expected[0] = 1.0
        np.testing.assert_allclose(psi, expected, atol=1e-15)

    def test_south_pole_up_to_phase(self):
        J, phi = 4, 0.9
        psi = coherent_state(J, CoherentSpec(np.pi, phi))
        expected = np.zeros(9, dtype=complex)
        expected[-1] = np.exp(1j * J * phi)
        np.testing.assert_allclose(psi, expected, atol=1e-15)

    def test_equator_spin_one_amplitudes(self):
        psi = coherent_state(1, CoherentSpec(np.pi / 2, 0.0))
        np.testing.assert_allclose(psi, [0.5, 1 / np.sqrt(2), 0.5], atol=1e-15)

    def test_unit_norm_at_large_spin(self):
        psi = coherent_state(200, CoherentSpec(np.pi / np.sqrt(3), np.pi / np.sqrt(2)))
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-12

    @pytest.mark.parametrize("J", [0.5, 5, 40])
    def test_direction_expectations(self, J, rng):
        # <J> must point along the spec direction with length J
        spec = CoherentSpec(float(rng.uniform(0.05, np.pi - 0.05)), float(rng.uniform(0, 2 * np.pi)))
        psi = coherent_state(J, spec)
        ops = angular_momentum_matrices(J)
        got = np.array(
            [np.vdot(psi, op @ psi).real for op in (ops.jx, ops.jy, ops.jz)]
        )
        np.testing.assert_allclose(got, J * spec.direction(), rtol=1e-10, atol=1e-10)

    def test_theta_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            CoherentSpec(-0.1, 0.0)
        with pytest.raises(ValueError):
            CoherentSpec(np.pi + 0.1, 0.0)


class TestTopPropagator:
    def test_trivial_parameters_give_identity(self):
        U = top_propagator(TopParams(alpha=0.0, gamma=0.0, J=3))
        np.testing.assert_allclose(U, np.eye(7), atol=1e-12)

    def test_quarter_rotation_fourth_power_is_identity(self):
        # integer spin: a full 2 pi rotation about y is the identity
        U = top_propagator(TopParams(alpha=0.0, gamma=np.pi / 2, J=3))
        U4 = np.linalg.matrix_power(U, 4)
        assert np.abs(U4 - np.eye(7)).max() < 1e-10

    def test_unitarity(self):
        U = top_propagator(TopParams(alpha=30.0, gamma=np.pi / 2.1, J=10))
        assert np.abs(U.conj().T @ U - np.eye(21)).max() < 1e-10

    def test_hbar_is_inverse_spin(self):
        p = TopParams(alpha=1.0, gamma=1.0, J=49)
        assert p.hbar_eff == 1.0 / 49


class TestHeisenbergCorrelations:
    def test_identity_observable(self):
        U = top_propagator(TopParams(alpha=12.0, gamma=1.0, J=2))
        psi = coherent_state(2, CoherentSpec(1.0, 2.0))
        corr, mean = heisenberg_correlations(U, np.eye(5), psi, 6)
        np.testing.assert_allclose(corr, np.ones((6, 6)), atol=1e-12)
        np.testing.assert_allclose(mean, np.ones(6), atol=1e-12)

    def test_hermitian_table_and_variance(self):
        ops = angular_momentum_matrices(3)
        U = top_propagator(TopParams(alpha=8.0, gamma=1.3, J=3))
        psi = coherent_state(3, CoherentSpec(0.7, 0.2))
        corr, mean = heisenberg_correlations(U, ops.jz / 3.0, psi, 10)
        assert np.abs(corr - corr.conj().T).max() < 1e-12
        diag = np.diagonal(corr).real
        assert np.all(diag + 1e-12 >= mean.real**2)

    def test_period_four_under_quarter_rotation(self):
        ops = angular_momentum_matrices(2)
        U = top_propagator(TopParams(alpha=0.0, gamma=np.pi / 2, J=2))
        psi = coherent_state(2, CoherentSpec(1.1, 0.4))
        corr, mean = heisenberg_correlations(U, ops.jz / 2.0, psi, 9)
        np.testing.assert_allclose(corr[4:8, 4:8], corr[0:4, 0:4], atol=1e-10)
        np.testing.assert_allclose(mean[4:8], mean[0:4], atol=1e-10)

    def test_stationary_under_identity_dynamics(self):
        ops = angular_momentum_matrices(2)
        psi = coherent_state(2, CoherentSpec(0.9, 1.7))
        corr, mean = heisenberg_correlations(np.eye(5), ops.jx, psi, 5)
        assert np.abs(corr - corr[0, 0]).max() < 1e-12
        assert np.abs(mean - mean[0]).max() < 1e-12

    def test_agrees_with_direct_back_evolution(self, rng):
        # independent route: build V(t) explicitly by conjugation
        ops = angular_momentum_matrices(2)
        U = top_propagator(TopParams(alpha=17.0, gamma=2.2, J=2))
        V = ops.jz / 2.0
        psi = coherent_state(2, CoherentSpec(2.0, 5.1))
        tmax = 7
        corr, mean = heisenberg_correlations(U, V, psi, tmax)
        vt = [V.astype(complex)]
        for _ in range(tmax - 1):
            vt.append(U.conj().T @ vt[-1] @ U)
        for xi in range(tmax):
            assert abs(np.vdot(psi, vt[xi] @ psi) - mean[xi]) < 1e-12
            for zeta in range(tmax):
                want = np.vdot(psi, vt[xi] @ vt[zeta] @ psi)
                assert abs(corr[xi, zeta] - want) < 1e-12

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            heisenberg_correlations(np.eye(3), np.eye(4), np.ones(3) / np.sqrt(3), 5)

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            heisenberg_correlations(
                np.diag([1.0, 0.5]), np.eye(2), np.array([1.0, 0.0]), 3
            )
