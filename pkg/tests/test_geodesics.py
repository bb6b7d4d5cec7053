import numpy as np
import pytest

from htype_xray.algebra import GroupPoint, group_mul
from htype_xray.geodesics import (
    GeodesicSpec,
    MomentumPair,
    flow_origin,
    gamma_centered,
    guiding_center,
    helical_shift,
    momentum_left,
    momentum_right,
    sample_flow,
    translate_curve,
)

from conftest import random_unit


class TestFlow:
    def test_starts_at_origin(self, h1):
        p = flow_origin(h1, np.array([1.0, 0.0]), np.array([1.0]), 0.0)
        assert np.allclose(p.x, 0.0) and np.allclose(p.u, 0.0)

    def test_zero_charge_is_a_line(self, h1):
        p = flow_origin(h1, np.array([1.0, 0.0]), np.zeros(1), 3.0)
        assert np.allclose(p.x, [3.0, 0.0]) and np.allclose(p.u, 0.0)

    def test_full_turn(self, h1):
        # one helical period: horizontal loop closes, central climb pi
        p = flow_origin(h1, np.array([1.0, 0.0]), np.array([1.0]), 2.0 * np.pi)
        assert np.max(np.abs(p.x)) < 1e-13
        assert np.allclose(p.u, [np.pi])

    def test_unit_speed(self, quat, rng):
        nu = random_unit(rng, 4)
        lam = rng.standard_normal(3)
        h = 1e-5
        for s in (0.0, 0.9, 4.4):
            a = flow_origin(quat, nu, lam, s - h)
            b = flow_origin(quat, nu, lam, s + h)
            speed = np.linalg.norm(b.x - a.x) / (2 * h)
            assert abs(speed - 1.0) < 1e-8

    def test_small_charge_matches_line(self, h1):
        nu = np.array([np.cos(0.3), np.sin(0.3)])
        lam = np.array([1e-8])
        for s in np.linspace(0.0, 10.0, 11):
            helix = flow_origin(h1, nu, lam, s)
            line = flow_origin(h1, nu, np.zeros(1), s)
            assert np.max(np.abs(helix.x - line.x)) < 1e-6
            assert np.max(np.abs(helix.u - line.u)) < 1e-6

    def test_left_translation_equivariance(self, h1, rng):
        base = GroupPoint(rng.standard_normal(2), rng.standard_normal(1))
        nu = random_unit(rng, 2)
        lam = np.array([0.8])
        spec = GeodesicSpec(base, nu, lam)
        rows = sample_flow(h1, spec, [0.0, 1.3])
        direct = group_mul(h1, base, flow_origin(h1, nu, lam, 1.3))
        assert np.allclose(rows[1][1:3], direct.x)
        assert np.allclose(rows[1][3:], direct.u)


class TestGammaCentered:
    def test_initial_point(self, h1):
        nu = np.array([1.0, 0.0])
        lam = np.array([2.0])
        g0 = gamma_centered(h1, nu, lam, 0.0)
        Jinv = -h1.j_map(lam) / 4.0
        assert np.allclose(g0.x, Jinv @ nu)
        assert np.allclose(g0.u, 0.0)

    def test_momentum_is_pure_charge(self, quat, rng):
        nu = random_unit(rng, 4)
        lam = rng.standard_normal(3)
        for s in (0.0, 0.7, 2.9):
            g = gamma_centered(quat, nu, lam, s)
            vel = momentum_right(quat, s, nu, lam)
            mp = momentum_left(quat, g, vel)
            assert np.max(np.abs(mp.nu)) < 1e-12
            assert np.allclose(mp.zeta, lam)

    def test_rejects_zero_charge(self, h1):
        with pytest.raises(ValueError):
            gamma_centered(h1, np.array([1.0, 0.0]), np.zeros(1), 1.0)


class TestHelicalShift:
    def test_zero_shift(self, h1):
        nu = np.array([1.0, 0.0])
        a, b = helical_shift(h1, nu, np.array([1.0]), 0.4, 0)
        assert np.allclose(a.x, b.x) and np.allclose(a.u, b.u)

    @pytest.mark.parametrize("k", [1, -2, 3])
    def test_periodicity(self, quat, rng, k):
        nu = random_unit(rng, 4)
        lam = rng.standard_normal(3)
        a, b = helical_shift(quat, nu, lam, 0.8, k)
        assert np.max(np.abs(a.x - b.x)) < 1e-12
        assert np.max(np.abs(a.u - b.u)) < 1e-12


class TestMomenta:
    def test_left_at_origin(self, h1, rng):
        pm = MomentumPair(rng.standard_normal(2), rng.standard_normal(1))
        out = momentum_left(h1, GroupPoint(np.zeros(2), np.zeros(1)), pm)
        assert np.allclose(out.nu, pm.nu) and np.allclose(out.zeta, pm.zeta)

    def test_conserved_along_flow(self, quat, rng):
        nu = random_unit(rng, 4)
        lam = 0.7 * random_unit(rng, 3)
        for s in np.linspace(0.0, 20.0, 50):
            p = flow_origin(quat, nu, lam, float(s))
            vel = momentum_right(quat, float(s), nu, lam)
            mp = momentum_left(quat, p, vel)
            assert np.max(np.abs(mp.nu - nu)) < 1e-11
            assert np.allclose(mp.zeta, lam)

    def test_right_rotates(self, h1):
        nu = np.array([1.0, 0.0])
        mu = np.array([1.0])
        out = momentum_right(h1, 0.0, nu, mu)
        assert np.allclose(out.nu, nu)
        s = 0.9
        out = momentum_right(h1, s, nu, mu)
        assert abs(np.linalg.norm(out.nu) - 1.0) < 1e-14
        again = momentum_right(h1, s + 2.0 * np.pi, nu, mu)
        assert np.max(np.abs(again.nu - out.nu)) < 1e-12


class TestGuidingCenter:
    def test_centered_curve_has_zero_center(self, h1):
        nu = np.array([0.0, 1.0])
        lam = np.array([1.3])
        for s in (0.0, 1.1):
            g = gamma_centered(h1, nu, lam, s)
            vel = momentum_right(h1, s, nu, lam).nu
            assert np.max(np.abs(guiding_center(h1, g, vel, lam))) < 1e-12

    def test_zero_velocity(self, h1):
        p = GroupPoint([0.3, 0.4], [0.0])
        assert np.allclose(guiding_center(h1, p, np.zeros(2), np.array([1.0])), p.x)

    def test_constant_along_translated_geodesics(self, quat, rng):
        nu = random_unit(rng, 4)
        lam = random_unit(rng, 3)
        base = GroupPoint(rng.standard_normal(4), rng.standard_normal(3))
        centers = []
        for s in np.linspace(0.0, 7.0, 15):
            p = translate_curve(quat, base, flow_origin(quat, nu, lam, float(s)))
            vel = momentum_right(quat, float(s), nu, lam).nu
            centers.append(guiding_center(quat, p, vel, lam))
        centers = np.array(centers)
        assert np.max(np.abs(centers - centers[0])) < 1e-11

    def test_rejects_zero_mu(self, h1):
        with pytest.raises(ValueError):
            guiding_center(h1, GroupPoint(np.zeros(2), np.zeros(1)), np.zeros(2), np.zeros(1))


def test_spec_requires_unit_velocity(h1):
    with pytest.raises(ValueError):
        GeodesicSpec(GroupPoint(np.zeros(2), np.zeros(1)), np.array([2.0, 0.0]), np.zeros(1))
