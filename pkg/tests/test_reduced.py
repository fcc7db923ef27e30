import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coolctl.quantum import LindbladSystem, integrate_full, spectrum_desc
from coolctl.reduced import (
    SimplexError, UnitarySchedule, apply_generator, as_simplex_point, compensating_hamiltonian,
    derv_sample, haar_unitaries, haar_unitary, induced_generator, integrate_reduced, is_unitary,
    j_matrices, j_matrix, lift_control, lifted_spectra, permutation_matrix,
)
from coolctl.systems import SWAP_23, make_lambda_system, make_spin_spin, make_v_system

SYSTEMS = [make_lambda_system, make_v_system, make_spin_spin]
GAMMA_V = np.array([[0, 1, 2], [0, 0, 0], [0, 0, 0]], dtype=float)


class TestJMatrix:
    def test_v_system_identity(self):
        np.testing.assert_allclose(j_matrix(make_v_system(1, 2)), GAMMA_V)

    def test_spin_spin_identity(self):
        want = np.zeros((4, 4))
        want[0, 2] = want[1, 3] = 1
        np.testing.assert_allclose(j_matrix(make_spin_spin()), want)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            j_matrix(make_v_system(), 2 * np.eye(3))

    @pytest.mark.parametrize("make", SYSTEMS)
    def test_permutation_relabels(self, make):
        sys = make()
        j1 = j_matrix(sys)
        for perm in itertools.permutations(range(sys.n)):
            p = permutation_matrix(perm)
            # J(P)_ij = J(1)_{p(i) p(j)}
            np.testing.assert_allclose(j_matrix(sys, p), j1[np.ix_(perm, perm)])

    @pytest.mark.parametrize("make", SYSTEMS)
    def test_permutation_equivariance_random(self, make):
        sys = make()
        rng = np.random.default_rng(5)
        for u in haar_unitaries(sys.n, 5, rng.integers(1 << 30)):
            ju = j_matrix(sys, u)
            for perm in itertools.permutations(range(sys.n)):
                p = permutation_matrix(perm)
                np.testing.assert_allclose(j_matrix(sys, u @ p), ju[np.ix_(perm, perm)], atol=1e-12)

    @pytest.mark.parametrize("make", SYSTEMS)
    def test_sampled_generators_are_rate_matrices(self, make):
        sys = make()
        js = j_matrices(sys, haar_unitaries(sys.n, 10000, seed=11))
        assert js.min() >= -1e-12
        gs = induced_generator(js)
        assert np.abs(gs.sum(axis=1)).max() <= 1e-12
        off = gs * (1 - np.eye(sys.n))
        assert off.min() >= -1e-12

    def test_vectorized_matches_scalar(self):
        sys = make_spin_spin()
        us = haar_unitaries(4, 7, seed=3)
        np.testing.assert_allclose(j_matrices(sys, us), [j_matrix(sys, u) for u in us])


class TestGenerators:
    def test_v_system_generator(self):
        np.testing.assert_allclose(induced_generator(GAMMA_V), [[0, 1, 2], [0, -1, 0], [0, 0, -2]])

    def test_zero(self):
        np.testing.assert_array_equal(induced_generator(np.zeros((3, 3))), 0)

    def test_uniform_columns_sum_to_zero(self):
        g = induced_generator(np.full((4, 4), 0.3 / 16))
        assert np.abs(g.sum(axis=0)).max() <= 1e-15

    def test_apply_v_system(self):
        a, b, c = 0.5, 0.3, 0.2
        g = induced_generator(GAMMA_V)
        np.testing.assert_allclose(apply_generator(g, [a, b, c]), [b + 2 * c, -b, -2 * c])

    def test_apply_spin_spin(self):
        lam = np.array([0.4, 0.3, 0.2, 0.1])
        g = induced_generator(j_matrix(make_spin_spin()))
        a, b, c, d = lam
        np.testing.assert_allclose(apply_generator(g, lam), [c, d, -c, -d])

    def test_apply_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply_generator(np.zeros((3, 3)), [1.0, 0.0])


class TestHaar:
    def test_deterministic(self):
        np.testing.assert_array_equal(haar_unitary(3, 7), haar_unitary(3, 7))
        np.testing.assert_array_equal(haar_unitaries(3, 10, 7), haar_unitaries(3, 10, 7))

    def test_unitary_special(self):
        us = haar_unitaries(4, 500, seed=1)
        assert is_unitary(us)
        np.testing.assert_allclose(np.linalg.det(us), 1, atol=1e-10)

    def test_first_moment(self):
        us = haar_unitaries(2, 10000, seed=2)
        x = np.abs(us[:, 0, 0]) ** 2
        # |u11|^2 is uniform on [0, 1] for n = 2
        assert abs(x.mean() - 0.5) <= 3 * np.sqrt(1 / 12 / len(x))

    def test_second_moment(self):
        us = haar_unitaries(3, 20000, seed=3)
        x = np.abs(us[:, 1, 2]) ** 2
        # E|u_ij|^4 = 2/(n(n+1))
        assert abs((x ** 2).mean() - 2 / 12) < 0.01

    def test_chunking_is_schedule_independent(self):
        big = haar_unitaries(2, 3000, seed=4)
        np.testing.assert_array_equal(big[:2048], haar_unitaries(2, 2048, seed=4))

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            haar_unitary(1)

    def test_derv_sample_zero_terms(self):
        sys = LindbladSystem.from_terms([np.zeros((3, 3))])
        np.testing.assert_array_equal(derv_sample(sys, [0.5, 0.3, 0.2], 50, seed=0), 0)

    def test_derv_sample_near_zero_at_schur_basis(self):
        # V upper triangular: e1 is fixed by U = 1, so small perturbations give small derivatives
        sys = make_v_system()
        derivs = derv_sample(sys, [1.0, 0, 0], 20000, seed=6)
        assert np.linalg.norm(derivs, axis=1).min() < 0.05

    def test_derv_sample_tangent(self):
        d = derv_sample(make_spin_spin(), [0.4, 0.3, 0.2, 0.1], 200, seed=1)
        assert np.abs(d.sum(axis=1)).max() <= 1e-12


class TestUnitarySchedule:
    def test_validation(self):
        with pytest.raises(ValueError):
            UnitarySchedule([0.0, 1.0], [np.eye(2), 2 * np.eye(2)])
        with pytest.raises(ValueError):
            UnitarySchedule([0.0, 1.0], [np.eye(2), np.diag([1j, 1j])])
        with pytest.raises(ValueError):
            UnitarySchedule([1.0, 0.0], [np.eye(2), np.eye(2)])

    def test_piecewise_drops_empty_segments(self):
        s = UnitarySchedule.piecewise([(np.eye(3), 0.0), (permutation_matrix(SWAP_23), 1.0)])
        np.testing.assert_allclose(s.times, [0.0, 1.0])

    def test_at(self):
        s = UnitarySchedule.piecewise([(np.eye(3), 1.0), (permutation_matrix(SWAP_23), 1.0)])
        assert np.allclose(np.abs(s.at(0.5)), np.eye(3))
        assert np.allclose(np.abs(s.at(1.5)), permutation_matrix(SWAP_23))


class TestIntegrateReduced:
    def test_scalar_decay(self):
        sys = make_v_system(1, 2)
        _, lams = integrate_reduced(sys, [0, 1, 0], UnitarySchedule.constant(np.eye(3), 1.0), 1.0, 1e-3)
        e = np.exp(-1)
        np.testing.assert_allclose(lams[-1], [1 - e, e, 0], atol=1e-8)

    def test_fixed_point(self):
        sys = make_v_system(1, 2)
        _, lams = integrate_reduced(sys, [1, 0, 0], UnitarySchedule.constant(np.eye(3), 3.0), 3.0, 1e-2)
        np.testing.assert_array_equal(lams, np.broadcast_to([1.0, 0, 0], lams.shape))

    def test_spin_spin_decoupled(self):
        sys = make_spin_spin()
        times, lams = integrate_reduced(sys, [0, 0, 0.5, 0.5],
                                        UnitarySchedule.constant(np.eye(4), 2.0), 2.0, 1e-3)
        e = np.exp(-times)
        want = np.stack([(1 - e) / 2, (1 - e) / 2, e / 2, e / 2], axis=1)
        np.testing.assert_allclose(lams, want, atol=1e-10)

    @pytest.mark.parametrize("make", SYSTEMS)
    def test_forward_invariance(self, make):
        sys = make()
        us = haar_unitaries(sys.n, 4, seed=9)
        sched = UnitarySchedule(np.arange(5) * 0.5, np.concatenate([us, us[-1:]]))
        lam0 = np.eye(sys.n)[-1]
        _, lams = integrate_reduced(sys, lam0, sched, 2.0, 1e-3)
        assert lams.min() >= -1e-9
        np.testing.assert_allclose(lams.sum(axis=1), 1)

    def test_simplex_violation_raises(self):
        sys = LindbladSystem.from_terms([10 * np.array([[0, 1], [0, 0]])])
        with pytest.raises(SimplexError):
            integrate_reduced(sys, [0, 1], UnitarySchedule.constant(np.eye(2), 5.0), 5.0, 1.0)

    def test_rejects_non_simplex(self):
        with pytest.raises(ValueError):
            as_simplex_point([0.7, 0.7])


class TestCompensation:
    @pytest.mark.parametrize("make", SYSTEMS)
    def test_zero_on_diagonal_states(self, make):
        sys = make()
        rng = np.random.default_rng(1)
        for lam in rng.dirichlet(np.ones(sys.n), 100):
            assert np.abs(compensating_hamiltonian(sys, np.diag(lam))).max() <= 1e-12

    def test_cancels_tangent_drift(self):
        rng = np.random.default_rng(2)
        v = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        sys = LindbladSystem.from_terms([v])
        u = haar_unitary(3, 3)
        rho = u @ np.diag([0.6, 0.3, 0.1]) @ u.conj().T
        hc = compensating_hamiltonian(sys, rho)
        assert np.abs(hc - hc.conj().T).max() <= 1e-12
        total = sys.dissipative_part(rho) - 1j * (hc @ rho - rho @ hc)
        # the remaining drift commutes with rho (no unitary-orbit component)
        assert np.abs(total @ rho - rho @ total).max() <= 1e-12

    def test_lift_constant_control(self):
        h0 = np.diag([0.3, -0.1, -0.2]).astype(complex)
        sys = LindbladSystem.from_terms(make_v_system().terms, h0=h0)
        times = np.linspace(0, 1, 11)
        ctrl = UnitarySchedule(times, np.broadcast_to(np.eye(3), (11, 3, 3)))
        _, lams = integrate_reduced(sys, [0.2, 0.3, 0.5], ctrl, 1.0, 0.1)
        sched = lift_control(sys, times, lams, ctrl)
        np.testing.assert_allclose(sched.hamiltonians, np.broadcast_to(-h0, (10, 3, 3)), atol=1e-12)

    def test_lift_misaligned(self):
        sys = make_v_system()
        ctrl = UnitarySchedule.constant(np.eye(3), 1.0)
        with pytest.raises(ValueError):
            lift_control(sys, [0.0, 0.5, 1.0], np.full((3, 3), 1 / 3), ctrl)

    def test_lift_unitary_motion_without_dissipation(self):
        sys = LindbladSystem.from_terms([np.zeros((3, 3))])
        times = np.linspace(0, 1, 51)
        k = np.array([[0.0, 1, 0], [1, 0, 0.5], [0, 0.5, 0]])
        from scipy.linalg import expm
        us = np.array([expm(-1j * k * t) for t in times])
        lams = np.tile([0.6, 0.3, 0.1], (51, 1))
        spectra = lifted_spectra(sys, times, lams, UnitarySchedule(times, us))
        np.testing.assert_allclose(spectra, lams, atol=1e-12)

    def test_lift_v_system_permutation_schedule(self):
        sys = make_v_system(1, 2)
        times = np.linspace(0, 2, 401)
        p = permutation_matrix(SWAP_23)
        us = np.array([np.eye(3) if t < 1 else p for t in times], dtype=complex)
        ctrl = UnitarySchedule(times, np.array([u * np.exp(-1j * np.angle(np.linalg.det(u)) / 3) for u in us]))
        _, lams = integrate_reduced(sys, [0.2, 0.3, 0.5], ctrl, 2.0, 0.005)
        # the permutation jump at t = 1 is instantaneous; lift each segment separately
        for part in (slice(0, 200), slice(201, 401)):
            t = times[part] - times[part][0]
            seg = UnitarySchedule(t, ctrl.unitaries[part])
            spectra = lifted_spectra(sys, t, lams[part], seg)
            np.testing.assert_allclose(spectra, np.sort(lams[part], axis=1)[:, ::-1], atol=1e-6)

    def test_lift_rotating_frame_with_dissipation(self):
        # smoothly rotating frame on a generic qubit: the reduced integrator holds
        # U per step, so agreement with the lifted full dynamics is first order in dt
        rng = np.random.default_rng(4)
        v = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        sys = LindbladSystem.from_terms([0.5 * v])
        from scipy.linalg import expm
        gen = np.array([[0, 1], [-1, 0]]) * 0.7
        errs = []
        for steps in (500, 1000):
            times = np.linspace(0, 1, steps + 1)
            ctrl = UnitarySchedule(times, np.array([expm(gen * t) for t in times], dtype=complex))
            _, lams = integrate_reduced(sys, [0.9, 0.1], ctrl, 1.0, 1.0 / steps)
            assert np.abs(lams[:, 0] - lams[:, 1]).min() > 0.1
            spectra = lifted_spectra(sys, times, lams, ctrl)
            errs.append(np.abs(spectra - np.sort(lams, axis=1)[:, ::-1]).max())
        assert errs[1] < 1e-4
        assert 1.8 < errs[0] / errs[1] < 2.2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(SYSTEMS))
def test_generator_columns_and_sign(seed, make):
    sys = make()
    g = induced_generator(j_matrix(sys, haar_unitary(sys.n, seed)))
    assert np.abs(g.sum(axis=0)).max() <= 1e-12
    off = g - np.diag(np.diag(g))
    assert off.min() >= -1e-12
