import numpy as np
import pytest

from htype_xray.algebra import (
    GroupPoint,
    HTypeStructure,
    alpha_homomorphism,
    dilate,
    group_identity,
    group_inv,
    group_mul,
    j_map,
    rotation_frame,
    standard_complex_structure,
)

from conftest import random_unit


def random_point(rng, S, scale=1.0):
    return GroupPoint(scale * rng.standard_normal(2 * S.n), scale * rng.standard_normal(S.m))


class TestStructure:
    def test_heisenberg_generator(self, h1):
        assert np.allclose(h1.generators[0], [[0.0, -1.0], [1.0, 0.0]])

    def test_quaternionic_generators_anticommute(self, quat):
        for i in range(3):
            for j in range(3):
                anti = quat.generators[i] @ quat.generators[j] + quat.generators[j] @ quat.generators[i]
                target = -2.0 * np.eye(4) if i == j else np.zeros((4, 4))
                assert np.max(np.abs(anti - target)) < 1e-14

    def test_invalid_generators_rejected(self):
        bad = [np.eye(2)]  # not skew
        with pytest.raises(ValueError):
            HTypeStructure(n=1, m=1, generators=bad)

    def test_from_config(self):
        S = HTypeStructure.from_config({"family": "heisenberg", "n": 2})
        assert (S.n, S.m) == (2, 1)
        S = HTypeStructure.from_config({"family": "quaternionic"})
        assert (S.n, S.m) == (2, 3)
        custom = HTypeStructure.from_config({
            "family": "custom", "n": 1, "m": 1,
            "generators": [[[0.0, -1.0], [1.0, 0.0]]],
        })
        assert custom.n == 1
        with pytest.raises(ValueError):
            HTypeStructure.from_config({"family": "nope"})


class TestJMap:
    def test_linear_in_mu(self, h1):
        assert np.allclose(j_map(h1, np.array([2.0])), [[0.0, -2.0], [2.0, 0.0]])

    def test_zero(self, quat):
        assert np.allclose(j_map(quat, np.zeros(3)), 0.0)

    def test_htype_identity_random(self, quat, rng):
        mu = random_unit(rng, 3)
        M = j_map(quat, mu)
        assert np.max(np.abs(M @ M + np.eye(4))) < 1e-12

    @pytest.mark.parametrize("family", ["h1", "h2", "quat"])
    def test_htype_identity_sweep(self, family, h1, h2, quat, rng):
        S = {"h1": h1, "h2": h2, "quat": quat}[family]
        for _ in range(1000):
            mu = rng.standard_normal(S.m)
            nsq = float(mu @ mu)
            if nsq < 1e-12:
                continue
            M = S.j_map(mu)
            assert np.max(np.abs(M @ M + nsq * np.eye(2 * S.n))) <= 1e-12 * nsq

    def test_dimension_mismatch(self, h1):
        with pytest.raises(ValueError):
            j_map(h1, np.array([1.0, 2.0]))


class TestGroupLaw:
    def test_central_sign_convention(self, h1):
        # omega(x, x') = <J x, x'> makes (e1,0)(e2,0) land at +1/2
        p = GroupPoint([1.0, 0.0], [0.0])
        q = GroupPoint([0.0, 1.0], [0.0])
        out = group_mul(h1, p, q)
        assert np.allclose(out.x, [1.0, 1.0])
        assert np.allclose(out.u, [0.5])

    def test_inverse(self, quat, rng):
        p = random_point(rng, quat)
        e = group_mul(quat, p, group_inv(quat, p))
        assert np.max(np.abs(e.x)) < 1e-14 and np.max(np.abs(e.u)) < 1e-14
        assert np.allclose(group_inv(quat, p).x, -p.x)
        pp = group_inv(quat, group_inv(quat, p))
        assert np.allclose(pp.x, p.x) and np.allclose(pp.u, p.u)

    def test_identity(self, h1):
        e = group_identity(h1)
        p = GroupPoint([0.3, -0.7], [0.2])
        out = group_mul(h1, e, p)
        assert np.allclose(out.x, p.x) and np.allclose(out.u, p.u)

    @pytest.mark.parametrize("family", ["h1", "quat"])
    def test_associativity(self, family, h1, quat, rng):
        S = {"h1": h1, "quat": quat}[family]
        for _ in range(100):
            p, q, w = (random_point(rng, S) for _ in range(3))
            lhs = group_mul(S, group_mul(S, p, q), w)
            rhs = group_mul(S, p, group_mul(S, q, w))
            assert np.max(np.abs(lhs.x - rhs.x)) < 1e-13
            assert np.max(np.abs(lhs.u - rhs.u)) < 1e-13


class TestDilation:
    def test_scaling(self):
        p = GroupPoint([1.0, -2.0], [3.0])
        d = dilate(2.0, p)
        assert np.allclose(d.x, [2.0, -4.0]) and np.allclose(d.u, [12.0])

    def test_inverse_pair(self, rng, h1):
        p = random_point(rng, h1)
        q = dilate(2.5, dilate(1 / 2.5, p))
        assert np.allclose(q.x, p.x) and np.allclose(q.u, p.u)

    def test_homomorphism(self, quat, rng):
        eps = 1.7
        for _ in range(25):
            p, q = random_point(rng, quat), random_point(rng, quat)
            lhs = dilate(eps, group_mul(quat, p, q))
            rhs = group_mul(quat, dilate(eps, p), dilate(eps, q))
            assert np.max(np.abs(lhs.x - rhs.x)) < 1e-13
            assert np.max(np.abs(lhs.u - rhs.u)) < 1e-13

    def test_rejects_nonpositive(self, h1):
        with pytest.raises(ValueError):
            dilate(0.0, group_identity(h1))


class TestRotationFrame:
    def test_heisenberg_standard_is_identity(self, h2):
        assert np.array_equal(rotation_frame(h2, np.array([3.0])), np.eye(4))

    def test_orthogonal_and_reconstructs(self, quat, rng):
        for _ in range(50):
            mu = rng.standard_normal(3)
            if np.linalg.norm(mu) < 1e-6:
                continue
            R = rotation_frame(quat, mu)
            assert np.max(np.abs(R.T @ R - np.eye(4))) < 1e-13
            J = standard_complex_structure(2)
            target = np.linalg.norm(mu) * R @ J @ R.T
            assert np.max(np.abs(quat.j_map(mu) - target)) < 1e-11

    def test_deterministic(self, quat, rng):
        mu = rng.standard_normal(3)
        A = rotation_frame(quat, mu)
        B = rotation_frame(quat, mu)
        assert A.tobytes() == B.tobytes()

    def test_rejects_zero(self, h1):
        with pytest.raises(ValueError):
            rotation_frame(h1, np.zeros(1))


class TestAlphaHomomorphism:
    def test_central_only(self, quat, rng):
        mu = rng.standard_normal(3)
        u = rng.standard_normal(3)
        out = alpha_homomorphism(quat, mu, GroupPoint(np.zeros(4), u))
        assert np.max(np.abs(out.x)) == 0.0
        assert np.isclose(out.u[0], np.dot(mu, u) / np.linalg.norm(mu))

    def test_h1_identity_map(self, h1):
        p = GroupPoint([0.4, -0.9], [0.7])
        out = alpha_homomorphism(h1, np.array([1.0]), p)
        assert np.allclose(out.x, p.x) and np.allclose(out.u, p.u)

    def test_homomorphism(self, quat, rng):
        target = HTypeStructure.heisenberg(2)
        for _ in range(25):
            mu = rng.standard_normal(3)
            if np.linalg.norm(mu) < 1e-6:
                continue
            p, q = random_point(rng, quat), random_point(rng, quat)
            lhs = alpha_homomorphism(quat, mu, group_mul(quat, p, q))
            rhs = group_mul(target, alpha_homomorphism(quat, mu, p),
                            alpha_homomorphism(quat, mu, q))
            assert np.max(np.abs(lhs.x - rhs.x)) < 1e-12
            assert np.max(np.abs(lhs.u - rhs.u)) < 1e-12

    def test_intertwines_dilations(self, quat, rng):
        # alpha_mu(delta_eps p) equals the Heisenberg dilation of alpha_mu(p)
        eps = 1.3
        mu = random_unit(rng, 3)
        p = random_point(rng, quat)
        lhs = alpha_homomorphism(quat, mu, dilate(eps, p))
        rhs = dilate(eps, alpha_homomorphism(quat, mu, p))
        assert np.max(np.abs(lhs.x - rhs.x)) < 1e-13
        assert np.max(np.abs(lhs.u - rhs.u)) < 1e-13

    def test_rejects_zero_mu(self, h1):
        with pytest.raises(ValueError):
            alpha_homomorphism(h1, np.zeros(1), group_identity(h1))
