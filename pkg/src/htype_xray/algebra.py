"""H-type Lie algebra and group structures.

An H-type group is a step-2 nilpotent Lie group G = exp(v + z) whose
Clifford-type maps J_mu (mu in z*) are skew, orthogonal and satisfy
J_mu^2 = -|mu|^2 I.  Everything downstream (geodesics, representations,
transforms) is parameterized by one of these structures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "HTypeStructure",
    "GroupPoint",
    "Covector",
    "j_map",
    "omega_form",
    "group_mul",
    "group_inv",
    "group_identity",
    "dilate",
    "rotation_frame",
    "alpha_homomorphism",
    "standard_complex_structure",
]

STRUCTURE_TOL = 1e-12


def standard_complex_structure(n):
    """Standard block form J = [[0, -I], [I, 0]] on R^{2n}."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def _quaternion_generators():
    # Left multiplication by i, j, k on H = R^4 with basis (1, i, j, k).
    Li = np.array([
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
    ])
    Lj = np.array([
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
    ])
    Lk = np.array([
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    return [Li, Lj, Lk]


@dataclass
class HTypeStructure:
    """H-type structure: dim v = 2n, dim z = m, generators J_1..J_m.

    Generators are validated at construction: each J_i must be
    skew-symmetric, orthogonal, and pairwise anticommuting
    (J_i J_j + J_j J_i = -2 delta_ij I).
    """

    n: int
    m: int
    generators: list
    name: str = "custom"
    _frame_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if len(self.generators) != self.m:
            raise ValueError(f"expected {self.m} generators, got {len(self.generators)}")
        self.generators = [np.asarray(J, dtype=float) for J in self.generators]
        d = 2 * self.n
        eye = np.eye(d)
        for i, J in enumerate(self.generators):
            if J.shape != (d, d):
                raise ValueError(f"generator {i} has shape {J.shape}, expected {(d, d)}")
            if np.max(np.abs(J + J.T)) > STRUCTURE_TOL:
                raise ValueError(f"generator {i} is not skew-symmetric")
            for j in range(i, self.m):
                anti = self.generators[i] @ self.generators[j] + self.generators[j] @ self.generators[i]
                target = -2.0 * eye if i == j else 0.0
                if np.max(np.abs(anti - target)) > STRUCTURE_TOL:
                    raise ValueError(f"generators {i},{j} violate the anticommutation identity")

    # -- constructors -------------------------------------------------

    @classmethod
    def heisenberg(cls, n=1):
        """Heisenberg group H_n: m = 1, J_1 = [[0,-I],[I,0]]."""
        return cls(n=n, m=1, generators=[standard_complex_structure(n)], name=f"heisenberg({n})")

    @classmethod
    def quaternionic(cls):
        """Quaternionic Heisenberg group: 2n = 4, m = 3."""
        return cls(n=2, m=3, generators=_quaternion_generators(), name="quaternionic")

    @classmethod
    def from_config(cls, block):
        """Build from a config block {family, n?, m?, generators?}."""
        family = block.get("family")
        if family == "heisenberg":
            return cls.heisenberg(int(block.get("n", 1)))
        if family == "quaternionic":
            return cls.quaternionic()
        if family == "custom":
            if "generators" not in block:
                raise ValueError("custom structure requires explicit generators")
            gens = [np.asarray(g, dtype=float) for g in block["generators"]]
            return cls(n=int(block["n"]), m=int(block["m"]), generators=gens)
        raise ValueError(f"unknown structure family: {family!r}")

    # -- basic maps ----------------------------------------------------

    def j_map(self, mu):
        """J_mu = sum_k mu_k J_k; satisfies J_mu^2 = -|mu|^2 I."""
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.m,):
            raise ValueError(f"mu has shape {mu.shape}, expected ({self.m},)")
        J = np.zeros((2 * self.n, 2 * self.n))
        for k in range(self.m):
            J += mu[k] * self.generators[k]
        return J

    def omega(self, x, xp):
        """Bracket form omega(x,x') with components omega_k = <J_k x, x'>.

        Broadcasts over leading axes so grids of points can be combined.
        """
        x = np.asarray(x, dtype=float)
        xp = np.asarray(xp, dtype=float)
        comps = [np.sum((x @ J.T) * xp, axis=-1) for J in self.generators]
        return np.stack(comps, axis=-1)


@dataclass
class GroupPoint:
    """Point (x, u) in exponential coordinates, x in R^{2n}, u in R^m."""

    x: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.u = np.asarray(self.u, dtype=float)

    def conforms(self, S):
        return self.x.shape == (2 * S.n,) and self.u.shape == (S.m,)


@dataclass
class Covector:
    """Momentum (nu, zeta): horizontal nu in v*, central zeta in z*."""

    nu: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.zeta = np.asarray(self.zeta, dtype=float)

    @property
    def nu_norm(self):
        return float(np.linalg.norm(self.nu))

    @property
    def zeta_norm(self):
        return float(np.linalg.norm(self.zeta))


def j_map(S, mu):
    return S.j_map(mu)


def omega_form(S, x, xp):
    return S.omega(x, xp)


def group_identity(S):
    return GroupPoint(np.zeros(2 * S.n), np.zeros(S.m))


def _check_point(S, p):
    if not p.conforms(S):
        raise ValueError("group point does not conform to the structure dimensions")


def group_mul(S, p, q):
    """Dynkin product (x,u)(x',u') = (x+x', u+u'+omega(x,x')/2)."""
    _check_point(S, p)
    _check_point(S, q)
    return GroupPoint(p.x + q.x, p.u + q.u + 0.5 * S.omega(p.x, q.x))


def group_inv(S, p):
    """Inverse; equals (-x, -u) for step-2 groups."""
    _check_point(S, p)
    return GroupPoint(-p.x, -p.u)


def dilate(eps, p):
    """Anisotropic dilation delta_eps(x, u) = (eps x, eps^2 u)."""
    if eps <= 0:
        raise ValueError("dilation parameter must be positive")
    return GroupPoint(eps * p.x, eps * eps * p.u)


def rotation_frame(S, mu):
    """Orthogonal R_mu with J_mu = |mu| R_mu J R_mu^t, J the standard block form.

    Depends only on mu/|mu|.  Deterministic: invariant planes are picked
    greedily in standard-basis order (p_i = normalized projection of the
    first remaining basis vector, q_i = J_mu_hat p_i), which gives
    R_mu = I for the standard Heisenberg generator with mu > 0.
    Bitwise-identical output for identical input (cached per structure).
    """
    mu = np.asarray(mu, dtype=float)
    norm = np.linalg.norm(mu)
    if norm == 0.0:
        raise ValueError("rotation frame undefined for mu = 0")
    mu_hat = mu / norm
    key = mu_hat.tobytes()
    cached = S._frame_cache.get(key)
    if cached is not None:
        return cached.copy()

    Jh = S.j_map(mu_hat)
    n = S.n
    ps = []
    qs = []
    basis_done = np.zeros((0, 2 * n))
    for _ in range(n):
        # first standard basis vector with a substantial component left
        for j in range(2 * n):
            v = np.zeros(2 * n)
            v[j] = 1.0
            if basis_done.shape[0]:
                v = v - basis_done.T @ (basis_done @ v)
            r = np.linalg.norm(v)
            if r > 1e-8:
                p = v / r
                break
        else:  # pragma: no cover - all vectors exhausted means a logic error
            raise RuntimeError("failed to complete the invariant-plane basis")
        q = Jh @ p
        ps.append(p)
        qs.append(q)
        basis_done = np.vstack([basis_done, p, q])
    R = np.column_stack(ps + qs)
    S._frame_cache[key] = R
    return R.copy()


def alpha_homomorphism(S, mu, p):
    """Normalizing homomorphism alpha_mu(x, u) = (R_mu^t x, mu.u/|mu|) into H_n."""
    mu = np.asarray(mu, dtype=float)
    norm = np.linalg.norm(mu)
    if norm == 0.0:
        raise ValueError("alpha_mu undefined for mu = 0")
    _check_point(S, p)
    R = rotation_frame(S, mu)
    z = R.T @ p.x
    t = float(np.dot(mu, p.u)) / norm
    return GroupPoint(z, np.array([t]))
