import math

import numpy as np
import numpy.testing as npt
import pytest

from rbx.engine import rao_blackwellize_quadrature, sphere_product_rule
from rbx.mechanics import PrincipalStress2, Rotation2, SymTensor2, SymTensor3, dev_norm, rotate, trace, von_mises_phi
from rbx.oracles import (S1, S2, S3, S4, BarGeometry, ElasticConstants, OracleError, bruteforce_bound,
                         bruteforce_candidates, damage_D, damage_T, damage_split_bruteforce, damage_split_closed,
                         damage_sufficiency_witness, damage_targets, fiber_stretch, microsphere_orbit,
                         microsphere_truth, resample_level_set, steelbar_master_curve, steelbar_surrogate,
                         yield_labels, yield_statistic, yield_truth)

K = ElasticConstants(3.0, 2.0, 1.0)

class TestYield:
    def test_boundary_is_elastic(self):
        assert yield_truth(PrincipalStress2(1.0, 0.0)) == 0
        assert yield_truth(PrincipalStress2(1.0, 1.0)) == 0

    def test_labels(self):
        npt.assert_array_equal(yield_labels([[0.0, 0.0], [2.0, 0.0], [-1.0, 1.0]]), [0.0, 1.0, 1.0])

    def test_statistic(self):
        npt.assert_allclose(yield_statistic(np.array([[1.0, 0.0], [1.0, -1.0]]))[:, 0], [1.0, math.sqrt(3.0)])

class TestMicrosphere:
    def test_closed_form(self):
        assert microsphere_truth(SymTensor3.identity()) == 1.0

    def test_quadrature_matches_random_spd(self):
        rng = np.random.default_rng(0)
        rule = sphere_product_rule(8, 16)
        for _ in range(10):
            a = rng.normal(size=(3, 3))
            c = SymTensor3.from_matrix(a @ a.T + 0.1 * np.eye(3))
            value = rao_blackwellize_quadrature(fiber_stretch, microsphere_orbit(c), rule)
            assert abs(value - microsphere_truth(c)) < 1e-8

    def test_orbit_states(self):
        states = microsphere_orbit(SymTensor3.identity())(np.array([[0.3, 1.0], [1.2, 4.0]]))
        assert states.shape == (2, 6)
        npt.assert_allclose(fiber_stretch(states), [1.0, 1.0], atol=1e-14)

class TestElasticConstants:
    def test_invalid(self):
        with pytest.raises(OracleError):
            ElasticConstants(0.0, 1.0, 1.0)
        with pytest.raises(OracleError):
            ElasticConstants(1.0, 1.0, -1.0)

class TestDamageSplit:
    def test_expansion_has_no_residual(self):
        s = damage_split_closed(SymTensor2(0.01, 0.01, 0.0), K)
        assert s.psi_R == 0.0
        assert s.psi_D == s.psi_0

    def test_compression_keeps_all_volumetric_energy(self):
        s = damage_split_closed(SymTensor2(-0.01, -0.01, 0.0), K)
        assert s.psi_R > 0.0
        assert s.psi_D >= 0.0

    def test_zero_strain(self):
        s = damage_split_closed(SymTensor2(0.0, 0.0, 0.0), K)
        assert (s.psi_R, s.psi_D, s.psi_0) == (0.0, 0.0, 0.0)

    def test_energy_invariants(self):
        rows = np.random.default_rng(1).uniform(-0.1, 0.1, size=(10000, 3))
        s = damage_split_closed(rows, K)
        npt.assert_allclose(s.psi_R + s.psi_D, s.psi_0, rtol=0.0, atol=1e-12)
        assert np.all(s.psi_R >= 0.0) and np.all(s.psi_D >= 0.0)
        cone = K.gamma * np.asarray(dev_norm(s.eta_bar)) - np.asarray(trace(s.eta_bar))
        assert np.max(cone) <= 1e-12

    def test_bruteforce_agreement(self):
        rng = np.random.default_rng(2)
        for eps in rng.uniform(-0.1, 0.1, size=(100, 3)):
            closed = damage_split_closed(eps, K).psi_R
            brute = damage_split_bruteforce(eps, K, 21).psi_R
            gap = brute - closed
            assert gap >= -1e-12
            assert gap <= 2.0 * bruteforce_bound(eps, K, 21) + 1e-15

    def test_bruteforce_refines(self):
        eps = np.array([-0.05, 0.02, 0.03])
        coarse = damage_split_bruteforce(eps, K, 11).psi_R
        fine = damage_split_bruteforce(eps, K, 21).psi_R
        assert fine <= coarse + 1e-15

    def test_candidates_in_cone(self):
        eta = bruteforce_candidates(np.array([0.02, -0.03, 0.01]), K, 5)
        assert eta.shape == (125, 3, 3)
        tr = np.trace(eta, axis1=1, axis2=2)
        dev = eta - (tr / 3.0)[:, None, None] * np.eye(3)
        assert np.all(K.gamma * np.sqrt(np.sum(dev * dev, axis=(1, 2))) <= tr + 1e-12)

    def test_bruteforce_resolution(self):
        with pytest.raises(OracleError):
            damage_split_bruteforce(np.array([0.01, 0.0, 0.0]), K, 1)

class TestStatistics:
    def test_dimensions(self):
        rows = np.random.default_rng(3).uniform(-0.1, 0.1, size=(7, 3))
        assert [s(rows).shape[1] for s in (S1, S2, S3, S4)] == [1, 2, 3, 3]
        npt.assert_allclose(S2(rows)[:, 0], damage_D(rows))
        npt.assert_allclose(S2(rows)[:, 1], damage_T(rows))

    def test_s2_sufficient(self):
        rng = np.random.default_rng(4)
        sources = rng.uniform(-0.1, 0.1, size=(200, 3))
        partners = resample_level_set(sources, [1.234])
        assert all(damage_sufficiency_witness(a, b, K, S2) for a, b in zip(sources, partners))

    def test_s1_not_sufficient(self):
        assert not damage_sufficiency_witness([0.01, 0.01, 0.0], [-0.01, -0.01, 0.0], K, S1)

    def test_level_set_resampling(self):
        rows = np.array([[0.03, -0.01, 0.02], [-0.05, 0.04, 0.0]])
        out = resample_level_set(rows, np.linspace(0.0, 2.0 * math.pi, 5))
        assert out.shape == (10, 3)
        npt.assert_allclose(damage_T(out), np.repeat(damage_T(rows), 5), atol=1e-15)
        npt.assert_allclose(damage_D(out), np.repeat(damage_D(rows), 5), atol=1e-15)
        npt.assert_allclose(damage_targets(out, K), np.repeat(damage_targets(rows, K), 5, axis=0), atol=1e-10)

class TestSteelbar:
    def test_geometry(self):
        with pytest.raises(OracleError):
            BarGeometry(9.0, 1.0)
        assert BarGeometry(4.0, 1.0).ratio == 0.25

    def test_master_curve_ends(self):
        assert steelbar_master_curve(0.0) == 0.004
        assert steelbar_master_curve(1.0) == 0.0

    def test_collapse(self):
        w = np.linspace(4.0, 8.0, 5)
        g = BarGeometry(w, 0.5 * w)
        force = steelbar_surrogate(g, 210000.0)
        npt.assert_allclose(force / (210000.0 * w ** 2), steelbar_master_curve(0.5), rtol=1e-14)

    def test_modulus_must_be_positive(self):
        with pytest.raises(OracleError):
            steelbar_surrogate(BarGeometry(4.0, 1.0), 0.0)

class TestOracleProperties:
    def test_residual_energy_continuous_across_cone(self):
        # plane strain (T/2 + a, T/2 - a): D^2 = T^2/6 + 2 a^2, so T = D at a = T sqrt(5/12)
        T = 0.02
        a_star = T * math.sqrt(5.0 / 12.0)

        def psi_R(a):
            return damage_split_closed(SymTensor2(0.5 * T + a, 0.5 * T - a, 0.0), K).psi_R

        delta = 1e-4
        assert psi_R(a_star - delta) == 0.0 and psi_R(a_star - 0.5 * delta) == 0.0
        jump, half = psi_R(a_star + delta), psi_R(a_star + 0.5 * delta)
        assert 0.0 < jump < 1e-6
        assert 0.24 < half / jump < 0.26

    def test_split_invariant_under_plane_rotation(self):
        rows = np.random.default_rng(31).uniform(-0.1, 0.1, size=(1000, 3))
        t = SymTensor2(rows[:, 0], rows[:, 1], rows[:, 2])
        base = damage_split_closed(t, K)
        for theta in np.random.default_rng(32).uniform(0.0, 2.0 * math.pi, 10):
            turned = damage_split_closed(rotate(t, Rotation2(theta)), K)
            for name in ("psi_R", "psi_D", "psi_0"):
                npt.assert_allclose(getattr(turned, name), getattr(base, name), rtol=1e-9, atol=1e-15)

    def test_yield_label_changes_once_along_rays(self):
        radius = np.linspace(0.0, 3.0, 3001)
        for angle in np.random.default_rng(33).uniform(0.0, 2.0 * math.pi, 100):
            s = PrincipalStress2(radius * math.cos(angle), radius * math.sin(angle))
            labels = yield_truth(s)
            npt.assert_array_equal(labels, np.asarray(von_mises_phi(s, 1.0)) > 0.0)
            assert labels[0] == 0 and labels[-1] == 1
            assert np.count_nonzero(np.diff(labels)) == 1
