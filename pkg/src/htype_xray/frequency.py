"""Group Fourier transform, compatibility lattice, and operator-valued multipliers.

The Fourier transform F(f)(mu) = int f(g) pi_mu(g)* dg is computed entrywise
against conjugated entry functions; for the Gaussian-Hermite ansatz the
horizontal integral is a polynomial against a Gaussian, so tensor
Gauss-Hermite quadrature (after completing the square) is exact up to the
node budget.  The loop multiplier is evaluated two independent ways: a
periodic trapezoid rule over the geodesic loop (valid for every compatible
pair) and a Laguerre-function closed form (valid for aligned pairs, where
the frame intertwiner exists).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, j0

from .algebra import rotation_frame
from .fock import (
    FockBasis,
    FockOperator,
    antilinear_complex_matrix,
    complex_coords,
    intertwiner_U,
    real_matrix,
    special_hermite_1d,
    special_hermite_table,
    rep_tables,
)
from .geodesics import gamma_centered
from .transform import Quadrature

__all__ = [
    "CompatiblePair",
    "RelationCoords",
    "MultiplierReport",
    "MCAveragedNormal",
    "UnsupportedPairError",
    "compatible",
    "lattice_dual",
    "relation_coords",
    "pair_from_coords",
    "gft",
    "gft_quotient",
    "gft_scalar",
    "bessel_multiplier",
    "multiplier_J_quadrature",
    "multiplier_J_spectral",
    "normal_op",
    "haar_unitary_commuting",
    "averaged_normal_mc",
    "averaged_eigenvalues",
    "averaged_normal_exact",
    "eigenvalue_lower_bound",
    "invertibility_certificate",
    "dilation_lemma_check",
    "plancherel_calibration",
    "transverse_basis",
]

COMPAT_TOL = 1e-9
ALIGN_TOL = 1e-12


class UnsupportedPairError(ValueError):
    """Closed-form route requested for a pair without an aligned frame."""


# ---------------------------------------------------------------------------
# compatibility lattice
# ---------------------------------------------------------------------------

def compatible(lam, mu, tol=COMPAT_TOL):
    """Integer k with mu.lam = 2 k |lam|^3, or None if no integer is within tol.

    Tolerance is relative on the normalized ratio mu.lam / (2|lam|^3).
    """
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = np.linalg.norm(lam)
    if r == 0.0 or np.linalg.norm(mu) == 0.0:
        raise ValueError("compatibility requires nonzero momenta")
    t = float(np.dot(mu, lam)) / (2.0 * r ** 3)
    k = int(np.rint(t))
    if abs(t - k) <= tol * max(1.0, abs(t)):
        return k
    return None


@dataclass
class CompatiblePair:
    """Charge-frequency lattice element: mu.lam = 2 k |lam|^3."""

    lam: np.ndarray
    mu: np.ndarray
    k: int

    def __post_init__(self):
        self.lam = np.asarray(self.lam, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        r = float(np.linalg.norm(self.lam))
        if r == 0.0 or np.linalg.norm(self.mu) == 0.0:
            raise ValueError("compatible pair requires nonzero momenta")
        resid = abs(float(np.dot(self.mu, self.lam)) - 2.0 * self.k * r ** 3)
        if resid > 1e-10 * r ** 3 * max(1.0, abs(self.k)):
            raise ValueError("momenta fail the compatibility relation")

    @classmethod
    def build(cls, lam, mu, tol=COMPAT_TOL):
        k = compatible(lam, mu, tol)
        if k is None:
            raise ValueError("momenta are not compatible")
        return cls(lam, mu, k)

    @classmethod
    def from_k(cls, lam, k, mu_perp=None):
        """mu = mu_perp + 2 k |lam| lam with mu_perp orthogonal to lam."""
        lam = np.asarray(lam, dtype=float)
        r = float(np.linalg.norm(lam))
        mu = 2.0 * k * r * lam
        if mu_perp is not None:
            mu_perp = np.asarray(mu_perp, dtype=float)
            if abs(np.dot(mu_perp, lam)) > 1e-12 * max(1.0, np.linalg.norm(mu_perp)) * r:
                raise ValueError("mu_perp must be orthogonal to lam")
            mu = mu + mu_perp
        return cls(lam, mu, int(k))

    @property
    def wsq(self):
        """|w|^2 = |mu| / |lam|^2 for a unit horizontal velocity."""
        return float(np.linalg.norm(self.mu)) / float(np.linalg.norm(self.lam)) ** 2

    def alignment(self):
        """Cosine of the angle between mu and lam."""
        return float(np.dot(self.mu, self.lam)
                     / (np.linalg.norm(self.mu) * np.linalg.norm(self.lam)))


def lattice_dual(lam, radius, transverse_steps=2):
    """Samples of the dual lattice {mu : mu.lam = 2k|lam|^3} with |mu| <= radius.

    For m = 1 this is the exact point set {2 k |lam| lam, k != 0}; for m > 1
    each hyperplane k is sampled on a cartesian transverse grid with
    (2*transverse_steps+1)^(m-1) points (k = 0 keeps only mu != 0).
    """
    lam = np.asarray(lam, dtype=float)
    r = float(np.linalg.norm(lam))
    if r == 0.0:
        raise ValueError("lattice requires lam != 0")
    m = lam.shape[0]
    out = []
    kmax = int(np.floor(radius / (2.0 * r ** 2)))
    if m == 1:
        for k in range(-kmax, kmax + 1):
            if k == 0:
                continue
            out.append(CompatiblePair.from_k(lam, k))
        return out
    perp = transverse_basis(lam)
    for k in range(-kmax, kmax + 1):
        par = 2.0 * k * r * lam
        room = radius ** 2 - float(par @ par)
        if room < 0:
            continue
        rmax = np.sqrt(room)
        ticks = np.linspace(-rmax, rmax, 2 * transverse_steps + 1)
        for coeffs in np.stack(np.meshgrid(*[ticks] * (m - 1), indexing="ij"), axis=-1).reshape(-1, m - 1):
            mu = par + perp.T @ coeffs
            if np.linalg.norm(mu) == 0.0 or np.linalg.norm(mu) > radius:
                continue
            out.append(CompatiblePair(lam, mu, k))
    return out


def transverse_basis(lam):
    """Deterministic orthonormal basis of the hyperplane orthogonal to lam; rows."""
    lam = np.asarray(lam, dtype=float)
    m = lam.shape[0]
    lam_hat = lam / np.linalg.norm(lam)
    rows = []
    for j in range(m):
        v = np.zeros(m)
        v[j] = 1.0
        v = v - np.dot(v, lam_hat) * lam_hat
        for row in rows:
            v = v - np.dot(v, row) * row
        norm = np.linalg.norm(v)
        if norm > 1e-10:
            rows.append(v / norm)
        if len(rows) == m - 1:
            break
    return np.array(rows).reshape(m - 1, m)


@dataclass
class RelationCoords:
    """Geometric coordinates on the charge-frequency relation."""

    lambda_hat: np.ndarray
    mu_perp: np.ndarray
    two_k: int

    def __post_init__(self):
        self.lambda_hat = np.asarray(self.lambda_hat, dtype=float)
        self.mu_perp = np.asarray(self.mu_perp, dtype=float)
        if abs(float(np.dot(self.mu_perp, self.lambda_hat))) > 1e-12 * max(1.0, np.linalg.norm(self.mu_perp)):
            raise ValueError("mu_perp must be orthogonal to lambda")
        if self.two_k % 2:
            raise ValueError("two_k must be even")


def relation_coords(pair):
    """(lambda_hat, transverse part of mu at the |lam|=1 normalization, 2k)."""
    r = float(np.linalg.norm(pair.lam))
    lam_hat = pair.lam / r
    mu_perp = (pair.mu - float(np.dot(pair.mu, lam_hat)) * lam_hat) / r ** 2
    return RelationCoords(lam_hat, mu_perp, 2 * pair.k)


def pair_from_coords(rc, lam_norm=1.0):
    """Inverse of relation_coords at charge magnitude lam_norm."""
    lam = rc.lambda_hat * lam_norm
    k = rc.two_k // 2
    mu = lam_norm ** 2 * rc.mu_perp + 2.0 * k * lam_norm * lam
    return CompatiblePair(lam, mu, k)


# ---------------------------------------------------------------------------
# group Fourier transform
# ---------------------------------------------------------------------------

def _pair_subgrids(nodes_per_axis, n):
    """Pair grid j combines real axes (j, n+j) into complex nodes; returns
    (list of flattened complex node arrays, weight tensor reshaped to pair axes)."""
    zs = []
    for j in range(n):
        a = nodes_per_axis[j]
        b = nodes_per_axis[n + j]
        zs.append((a[:, None] + 1j * b[None, :]).ravel())
    return zs


def _contract_tables(weight_pairs, tables, basis):
    """Contract conj(tables) against the weight tensor; gather basis entries.

    weight_pairs: complex array of shape (Q^2,) * n, axis j indexing the
    (y_j, y_{n+j}) subgrid.  tables[j]: (L+1, L+1, Q^2) one-dimensional
    special Hermite tables on subgrid j.
    """
    n = basis.n
    L = basis.L
    P = (L + 1) ** 2
    mats = [np.conj(t).reshape(P, -1) for t in tables]
    # einsum 'Aa,Bb,...,ab...->AB...'
    lowers = [chr(ord("a") + j) for j in range(n)]
    uppers = [chr(ord("A") + j) for j in range(n)]
    subs = ",".join(u + l for u, l in zip(uppers, lowers))
    subs += "," + "".join(lowers) + "->" + "".join(uppers)
    out = np.einsum(subs, *mats, weight_pairs, optimize=True)
    idx = basis.indices
    gather = tuple(idx[:, None, j] * (L + 1) + idx[None, :, j] for j in range(n))
    return out[gather]


def _atom_horizontal_operator(S, atom, mu, basis, order):
    """Exact integral int P(x) e^{-a|x-x0|^2} conj(Phi_{beta,alpha}(sqrt(h) R^t x)) dx."""
    from .transform import _poly_eval

    h = float(np.linalg.norm(mu))
    R = rotation_frame(S, mu)
    n = S.n
    alpha_hat = atom.a + 0.25 * h
    y0 = R.T @ atom.x0
    cen = atom.a * y0 / alpha_hat
    Cconst = atom.a * float(y0 @ y0) - alpha_hat * float(cen @ cen)

    tq, wq = np.polynomial.hermite.hermgauss(order)
    axes = [cen[d] + tq / np.sqrt(alpha_hat) for d in range(2 * n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    Y = np.stack([m.ravel() for m in mesh], axis=-1)
    X = Y @ R.T
    wmesh = np.meshgrid(*([wq] * (2 * n)), indexing="ij")
    W = np.ones_like(wmesh[0])
    for wm in wmesh:
        W = W * wm
    gauss_back = np.exp(0.25 * h * np.sum(Y * Y, axis=-1)).reshape(W.shape)
    fpoly = _poly_eval(atom.poly, X).reshape(W.shape)
    weight = (W * gauss_back * fpoly) * (np.exp(-Cconst) / alpha_hat ** n)

    # reorder real axes (0..2n-1) into complex pair axes ((0,n),(1,n+1),..)
    perm = []
    for j in range(n):
        perm.extend([j, n + j])
    weight = np.transpose(weight, perm).reshape(*([order * order] * n))
    zs = _pair_subgrids(axes, n)
    tables = [special_hermite_table(basis.L, np.sqrt(h) * z) for z in zs]
    return _contract_tables(weight, tables, basis)


def gft(S, f, mu, basis, q=None):
    """Group Fourier transform F(f)(mu) on the truncated Fock basis.

    Entry (beta, alpha) = int f(x,u) e^{-i mu.u} (2pi)^{n/2}
    conj(Phi_{beta,alpha}(sqrt(|mu|) R_mu^t x)) dx du; the central factor is
    closed form, the horizontal integral is Gauss-Hermite exact for the
    ansatz class.
    """
    mu = np.asarray(mu, dtype=float)
    if np.linalg.norm(mu) == 0.0:
        raise ValueError("group Fourier transform requires mu != 0")
    q = q or Quadrature()
    order = max(q.volume_order, basis.L + 4)
    out = np.zeros((basis.size, basis.size), dtype=complex)
    for atom in f.terms:
        central = atom.central_fourier(mu)
        horiz = _atom_horizontal_operator(S, atom, mu, basis, order)
        out += atom.c * central * (2.0 * np.pi) ** (S.n / 2.0) * horiz
    return FockOperator(basis, out)


def gft_quotient(S, g, lam, pair, basis, q=None,
                 x_rate=1.0, x_center=None, u_rate=1.0, u_center=None,
                 chunk=None):
    """Fourier transform on the quotient G_lam at a compatible frequency.

    g: vectorized callable g(X, U) on the quotient (X: (N, 2n), U: (N, m)).
    Integrates x over R^{2n} (Gauss-Hermite grid in the mu-frame, rate/center
    hints describe the integrand envelope), the u component along lam over
    one period pi |lam|^{-2} (trapezoid), and the transverse u over R^{m-1}
    (Gauss-Hermite).
    """
    lam = np.asarray(lam, dtype=float)
    r = float(np.linalg.norm(lam))
    if r == 0.0:
        raise ValueError("quotient transform requires lam != 0")
    if compatible(lam, pair.mu) != pair.k or not np.allclose(lam, pair.lam):
        raise ValueError("pair does not extend the requested lambda")
    q = q or Quadrature()
    mu = pair.mu
    h = float(np.linalg.norm(mu))
    n = S.n
    m = S.m
    R = rotation_frame(S, mu)
    lam_hat = lam / r

    # x grid in the mu-frame
    alpha_hat = 0.25 * h + x_rate
    x_center = np.zeros(2 * n) if x_center is None else np.asarray(x_center, dtype=float)
    cen = (x_rate / alpha_hat) * (R.T @ x_center)
    tq, wq = np.polynomial.hermite.hermgauss(q.volume_order)
    axes = [cen[d] + tq / np.sqrt(alpha_hat) for d in range(2 * n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    Y = np.stack([mm.ravel() for mm in mesh], axis=-1)
    X = Y @ R.T
    wmesh = np.meshgrid(*([wq] * (2 * n)), indexing="ij")
    Wx = np.ones_like(wmesh[0])
    for wm in wmesh:
        Wx = Wx * wm
    x_weight = (Wx.ravel() * np.exp(alpha_hat * np.sum((Y - cen) * (Y - cen), axis=-1))
                / alpha_hat ** n)

    # u grid: one period along lam_hat, Gauss-Hermite transverse
    period = np.pi / r ** 2
    Np = q.period_nodes
    par_vals = period * np.arange(Np) / Np
    u_center = np.zeros(m) if u_center is None else np.asarray(u_center, dtype=float)
    if m > 1:
        perp = transverse_basis(lam)
        tqu, wqu = np.polynomial.hermite.hermgauss(q.volume_order)
        u_axes = [tqu / np.sqrt(u_rate) for _ in range(m - 1)]
        umesh = np.meshgrid(*u_axes, indexing="ij")
        Tperp = np.stack([mm.ravel() for mm in umesh], axis=-1)  # (Nt, m-1)
        wumesh = np.meshgrid(*([wqu] * (m - 1)), indexing="ij")
        Wu = np.ones_like(wumesh[0]).ravel()
        for j, wm in enumerate(wumesh):
            if j == 0:
                Wu = wm.ravel().copy()
            else:
                Wu = Wu * wm.ravel()
        perp_pts = Tperp @ perp + (u_center - float(np.dot(u_center, lam_hat)) * lam_hat)
        perp_w = Wu * np.exp(u_rate * np.sum(Tperp * Tperp, axis=-1)) / u_rate ** ((m - 1) / 2.0)
    else:
        perp_pts = np.zeros((1, m))
        perp_w = np.ones(1)
    U = (par_vals[:, None, None] * lam_hat[None, None, :] + perp_pts[None, :, :]).reshape(-1, m)
    u_weight = (np.full(Np, period / Np)[:, None] * perp_w[None, :]).reshape(-1)
    u_phase = np.exp(-1j * (U @ mu)) * u_weight

    # accumulate the u-contracted x profile
    if chunk is None:
        chunk = max(1, int(2e6) // X.shape[0])
    vx = np.zeros(X.shape[0], dtype=complex)
    for start in range(0, U.shape[0], chunk):
        ublock = U[start:start + chunk]
        pblock = u_phase[start:start + chunk]
        Xrep = np.repeat(X, ublock.shape[0], axis=0)
        Urep = np.tile(ublock, (X.shape[0], 1))
        vals = np.asarray(g(Xrep, Urep)).reshape(X.shape[0], ublock.shape[0])
        vx += vals @ pblock

    weight = (x_weight * vx).reshape(*([q.volume_order] * (2 * n)))
    perm = []
    for j in range(n):
        perm.extend([j, n + j])
    weight = np.transpose(weight, perm).reshape(*([q.volume_order ** 2] * n))
    zs = _pair_subgrids(axes, n)
    tables = [special_hermite_table(basis.L, np.sqrt(h) * z) for z in zs]
    entries = (2.0 * np.pi) ** (n / 2.0) * _contract_tables(weight, tables, basis)
    return FockOperator(basis, entries)


def _gauss_poly_fourier_1d(k, a, omega):
    """int s^k e^{-a s^2} e^{-i omega s} ds via G_{k+1} = i dG_k/domega."""
    base = np.sqrt(np.pi / a) * np.exp(-omega ** 2 / (4.0 * a))
    # polynomial factors p_k(omega): p_0 = 1, p_{k+1} = i (p_k' - omega p_k / (2a))
    coeffs = np.zeros(k + 1, dtype=complex)
    coeffs[0] = 1.0
    deg = 0
    for _ in range(k):
        new = np.zeros(deg + 2, dtype=complex)
        for p in range(deg + 1):
            if p + 1 <= deg:
                new[p] += 1j * (p + 1) * coeffs[p + 1]
            new[p + 1] += -1j * coeffs[p] / (2.0 * a)
        coeffs = new
        deg += 1
    val = sum(coeffs[p] * omega ** p for p in range(deg + 1))
    return base * val


def gft_scalar(S, f, eta):
    """Scalar-representation Fourier transform: int f_0(x) e^{-i eta.x} dx.

    f_0(x) = int f(x, u) du.  Closed form for the ansatz class.
    """
    eta = np.asarray(eta, dtype=float)
    total = 0.0 + 0.0j
    for atom in f.terms:
        central0 = atom.central_fourier(np.zeros(S.m))
        # shift to the Gaussian center: x = x0 + s
        horiz = 0.0 + 0.0j
        for mi, coeff in atom.poly.items():
            # expand prod (x0_d + s_d)^{k_d}
            from math import comb
            term = coeff * np.exp(-1j * float(np.dot(eta, atom.x0)))
            factors = []
            for d, kk in enumerate(mi):
                vals = sum(comb(kk, j) * atom.x0[d] ** (kk - j)
                           * _gauss_poly_fourier_1d(j, atom.a, eta[d])
                           for j in range(kk + 1))
                factors.append(vals)
            prod = term
            for v in factors:
                prod = prod * v
            horiz += prod
        total += atom.c * central0 * horiz
    return complex(total)


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------

def bessel_multiplier(nu, lam, eta):
    """Scalar symbol 2 pi |lam|^{-1} J_0(<eta, nu>/|lam|) of the holonomy transform."""
    lam = np.asarray(lam, dtype=float)
    r = float(np.linalg.norm(lam))
    if r == 0.0:
        raise ValueError("bessel multiplier requires lam != 0")
    nu = np.asarray(nu, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return 2.0 * np.pi / r * float(j0(float(np.dot(eta, nu)) / r))


def multiplier_J_quadrature(S, nu, lam, pair, basis, q=None):
    """Loop multiplier J_{nu,lam}(mu) = (1/2pi) int_0^{2pi} e^{iks} pi_mu(c(s), 0) ds.

    c(s) = e^{s J_lam/|lam|} J_lam^{-1} nu.  Periodic trapezoid rule; the
    integrand is a trigonometric polynomial of degree <= 2L + |k|, so the
    rule is exact once the node count exceeds that.
    """
    q = q or Quadrature()
    lam = np.asarray(lam, dtype=float)
    nu = np.asarray(nu, dtype=float)
    r = float(np.linalg.norm(lam))
    if r == 0.0:
        raise ValueError("multiplier requires lam != 0")
    if abs(np.linalg.norm(nu) - 1.0) > 1e-10:
        raise ValueError("multiplier requires |nu| = 1")
    k = pair.k
    Ns = max(q.loop_nodes, 2 * basis.L + abs(k) + 9)
    s = 2.0 * np.pi * np.arange(Ns) / Ns
    pts = np.array([gamma_centered(S, nu, lam, float(si) / r).x for si in s])
    tables = rep_tables(S, pair.mu, pts, basis)  # (size, size, Ns)
    weights = np.exp(1j * k * s) / Ns
    return FockOperator(basis, tables @ weights)


def multiplier_J_spectral(S, nu, lam, pair, basis):
    """Closed-form multiplier via the Laguerre spectral decomposition.

    Valid for aligned pairs (mu parallel or antiparallel to lam), where the
    frame change R_lam^t R_mu is complex-(anti)linear; other compatible
    pairs have no aligned frame and raise UnsupportedPairError (the
    quadrature route covers them).
    """
    lam = np.asarray(lam, dtype=float)
    nu = np.asarray(nu, dtype=float)
    r = float(np.linalg.norm(lam))
    h = float(np.linalg.norm(pair.mu))
    if r == 0.0 or h == 0.0:
        raise ValueError("multiplier requires nonzero momenta")
    align = pair.alignment()
    k = pair.k
    A = basis.indices
    degs = basis.degrees
    nu_frame = complex_coords(rotation_frame(S, lam).T @ nu)

    if align > 1.0 - 1e-9:
        w = np.sqrt(h) * nu_frame / r
        shift = k
        prefac = 1j ** k
    elif align < -1.0 + 1e-9:
        Rmu = rotation_frame(S, pair.mu)
        Rlam = rotation_frame(S, lam)
        V = antilinear_complex_matrix(Rmu.T @ Rlam)
        w = 1j * np.sqrt(h) * (V @ np.conj(nu_frame)) / r
        shift = -k
        prefac = 1.0
    else:
        raise UnsupportedPairError(
            "spectral closed form requires mu parallel or antiparallel to lam; "
            "use multiplier_J_quadrature for general compatible pairs")

    tables = [special_hermite_table(basis.L, w[j]) for j in range(S.n)]
    M = np.full((basis.size, basis.size), prefac * (2.0 * np.pi) ** (S.n / 2.0), dtype=complex)
    for j in range(S.n):
        M *= tables[j][A[:, None, j], A[None, :, j]].T
    M *= (degs[:, None] == degs[None, :] + shift)

    if align > 1.0 - 1e-9:
        # rotate between the lam and mu frames (identity for equal frames)
        U = intertwiner_U(S, pair.mu, lam, basis)
        M = U.entries @ M @ U.entries.conj().T
    return FockOperator(basis, M)


def normal_op(S, nu, lam, pair, basis, q=None, method="quadrature"):
    """Normal operator J* J; positive semidefinite, block-diagonal by degree."""
    if method == "quadrature":
        J = multiplier_J_quadrature(S, nu, lam, pair, basis, q)
    elif method == "spectral":
        J = multiplier_J_spectral(S, nu, lam, pair, basis)
    else:
        raise ValueError(f"unknown method {method!r}")
    return FockOperator(basis, J.entries.conj().T @ J.entries)


# ---------------------------------------------------------------------------
# averaged normal operator
# ---------------------------------------------------------------------------

def haar_unitary_commuting(S, lam, rng):
    """Haar-distributed orthogonal map of v commuting with J_lam.

    Complex Ginibre + QR with phase fixing in the R_lam frame, realified.
    """
    n = S.n
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    Q, Rm = np.linalg.qr(Z)
    ph = np.diag(Rm).copy()
    ph /= np.abs(ph)
    Q = Q * ph[None, :]
    R = rotation_frame(S, lam)
    return R @ real_matrix(Q) @ R.T


@dataclass
class MCAveragedNormal:
    """Monte-Carlo averaged normal operator with per-degree statistics.

    For aligned pairs the per-sample block-diagonal means are exactly
    Haar-invariant (conjugation by a block unitary preserves block traces),
    so their empirical spread reflects roundoff only; the entrywise spread
    is the meaningful Monte-Carlo scale.
    """

    operator: FockOperator
    degree_means: np.ndarray     # (samples, L+1) per-sample block-diagonal means
    entry_variance: np.ndarray   # entrywise sample variance of the operator
    samples: int
    seed: int

    def eigenvalue_estimates(self):
        return self.degree_means.mean(axis=0)

    def eigenvalue_stderr(self):
        return self.degree_means.std(axis=0, ddof=1) / np.sqrt(self.samples)

    def mean_stderr_fro(self):
        """Frobenius-aggregated standard error of the averaged operator."""
        return float(np.sqrt(np.sum(self.entry_variance) / self.samples))


def averaged_normal_mc(S, lam, pair, basis, samples, seed, q=None, nu0=None):
    """Monte-Carlo average of the normal operator over Haar nu-rotations.

    nu = U nu0 with U Haar in U(lam); deterministic given the seed
    (counter-based Philox stream, sequential draw order).
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    lam = np.asarray(lam, dtype=float)
    rng = np.random.Generator(np.random.Philox(seed))
    if nu0 is None:
        nu0 = rotation_frame(S, lam)[:, 0]
    q = q or Quadrature(loop_nodes=max(2 * basis.L + abs(pair.k) + 9, 33))
    acc = np.zeros((basis.size, basis.size), dtype=complex)
    acc2 = np.zeros((basis.size, basis.size))
    degree_means = np.zeros((samples, basis.L + 1))
    diag_idx = [basis.degree_slice(l) for l in range(basis.L + 1)]
    for i in range(samples):
        U = haar_unitary_commuting(S, lam, rng)
        nu = U @ nu0
        Nop = normal_op(S, nu, lam, pair, basis, q)
        acc += Nop.entries
        acc2 += np.abs(Nop.entries) ** 2
        d = np.real(np.diag(Nop.entries))
        for l, sl in enumerate(diag_idx):
            degree_means[i, l] = float(np.mean(d[sl]))
    acc /= samples
    if samples > 1:
        var = (acc2 / samples - np.abs(acc) ** 2) * samples / (samples - 1)
        var = np.maximum(var, 0.0)
    else:
        var = np.zeros_like(acc2)
    return MCAveragedNormal(FockOperator(basis, acc), degree_means, var, samples, seed)


def averaged_eigenvalues(n, L, k, wsq):
    """Per-degree eigenvalues of the averaged normal operator.

    eps_l = (2pi)^n d_l^{-1} sum_{|gamma|=l, |tau|=l+k} |Phi_{tau,gamma}(w)|^2
    with d_l = (l+n-1)!/(l!(n-1)!); reduces (w = |w| e_1) to a Laguerre sum.
    Negative shifts k contribute only terms with gamma_1 >= -k.
    """
    if wsq < 0:
        raise ValueError("wsq must be nonnegative")
    wnorm = np.sqrt(wsq)
    out = np.zeros(L + 1)
    for l in range(L + 1):
        total = 0.0
        for p in range(l + 1):
            if p + k < 0:
                continue
            if n == 1:
                if p != l:
                    continue
                count = 1.0
            else:
                rteam = l - p
                count = np.exp(gammaln(rteam + n - 1) - gammaln(rteam + 1) - gammaln(n - 1))
            phi = special_hermite_1d(p + k, p, wnorm + 0.0j)
            # remaining n-1 coordinates contribute |Phi_{cc}(0)|^2 = (2pi)^{-1} each
            total += count * float(np.abs(phi) ** 2) * (2.0 * np.pi) ** (-(n - 1))
        d_l = np.exp(gammaln(l + n) - gammaln(l + 1) - gammaln(n))
        out[l] = (2.0 * np.pi) ** n / d_l * total
    return out


@dataclass
class MultiplierReport:
    """Spectral summary of an operator-valued multiplier or normal operator."""

    operator: FockOperator
    k: int
    block_map_verified: bool
    eigenvalues: np.ndarray
    condition_numbers: np.ndarray
    min_eigenvalue: float
    min_degree: int


def averaged_normal_exact(S, lam, pair, basis, wsq=None):
    """Exact averaged normal operator: diagonal with Laguerre-sum eigenvalues.

    wsq defaults to the geometric value |mu|/|lam|^2 of the pair; an explicit
    wsq supports formal (k, |w|^2) configurations.
    """
    if wsq is None:
        wsq = pair.wsq
    shift = abs(pair.k)
    eigs = averaged_eigenvalues(S.n, basis.L, shift, wsq)
    diag = eigs[basis.degrees]
    op = FockOperator(basis, np.diag(diag.astype(complex)))
    lmin = int(np.argmin(eigs))
    cond = np.where(eigs > 0, 1.0, np.inf)
    return MultiplierReport(op, pair.k, True, eigs, cond, float(eigs[lmin]), lmin)


def eigenvalue_lower_bound(n, l, k, wnorm):
    """Single-term positive lower bound for the averaged-normal eigenvalue, n > 1.

    d_l^{-1} ((l+n-2)!/(l!(n-2)!k!)) (|w|^2/2)^k e^{-|w|^2/2}.
    """
    if n <= 1:
        raise ValueError("the lower bound requires n > 1")
    if k < 0 or l < 0:
        raise ValueError("indices must be nonnegative")
    wsq = wnorm ** 2
    log_dl = gammaln(l + n) - gammaln(l + 1) - gammaln(n)
    log_count = gammaln(l + n - 1) - gammaln(l + 1) - gammaln(n - 1)
    logval = log_count - gammaln(k + 1) - log_dl - 0.5 * wsq
    if k > 0:
        if wsq == 0.0:
            return 0.0
        logval += k * np.log(0.5 * wsq)
    return float(np.exp(logval))


def invertibility_certificate(S, lam, pair, basis, tol=1e-12, wsq=None):
    """True iff every degree-block eigenvalue up to L exceeds tol.

    Returns (flag, witness) with witness = {minimum eigenvalue, its degree,
    eigenvalue table}.
    """
    report = averaged_normal_exact(S, lam, pair, basis, wsq=wsq)
    ok = bool(np.all(report.eigenvalues > tol))
    witness = {
        "min_eigenvalue": report.min_eigenvalue,
        "degree": report.min_degree,
        "eigenvalues": report.eigenvalues,
    }
    return ok, witness


# ---------------------------------------------------------------------------
# lemma checks and calibration
# ---------------------------------------------------------------------------

def dilation_lemma_check(S, f, mu, eps, basis, q=None):
    """Relative residual of F(delta_eps^* f)(mu) = eps^{-Q} F(f)(mu/eps^2), Q = 2n+2m."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    mu = np.asarray(mu, dtype=float)
    Qhom = 2 * S.n + 2 * S.m
    lhs = gft(S, f.dilate_pullback(eps), mu, basis, q).entries
    rhs = gft(S, f, mu / eps ** 2, basis, q).entries * eps ** (-Qhom)
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300)
    return float(np.linalg.norm(lhs - rhs) / scale)


def plancherel_calibration(S, funcs, basis, q=None, mu_points=64, mu_max=8.0):
    """Fit c0 in ||f||_2^2 = c0 int ||F(f)(mu)||_HS^2 |mu|^n dmu (m = 1 groups).

    Returns per-function c0 estimates; their spread reports the truncation
    quality.  The |mu|^n exponent is the homogeneous-dimension choice; the
    constant is not determined by theory here, so it is calibrated.
    """
    if S.m != 1:
        raise ValueError("calibration is implemented for one-dimensional centers")
    q = q or Quadrature()
    gl_x, gl_w = np.polynomial.legendre.leggauss(mu_points)
    mus = 0.5 * mu_max * (gl_x + 1.0)  # (0, mu_max]; symmetric half doubled below
    ws = 0.5 * mu_max * gl_w
    out = []
    for f in funcs:
        hs_int = 0.0
        for muv, wv in zip(mus, ws):
            for sign in (1.0, -1.0):
                op = gft(S, f, np.array([sign * muv]), basis, q)
                hs_int += wv * np.sum(np.abs(op.entries) ** 2) * muv ** S.n
        # ||f||_2^2 by exact Gauss-Hermite on |f|^2
        l2 = _l2_norm_sq(S, f, q)
        out.append(l2 / hs_int)
    return np.array(out)


def _l2_norm_sq(S, f, q):
    """||f||_2^2 by tensor Gauss-Hermite over each atom-pair product."""
    total = 0.0 + 0.0j
    order = max(q.volume_order, 16)
    tq, wq = np.polynomial.hermite.hermgauss(order)
    for t1 in f.terms:
        for t2 in f.terms:
            ax = t1.a + t2.a
            cx = (t1.a * t1.x0 + t2.a * t2.x0) / ax
            bx = t1.b + t2.b
            cu = (t1.b * t1.u0 + t2.b * t2.u0) / bx
            axes = [cx[d] + tq / np.sqrt(ax) for d in range(f.n2)] + \
                   [cu[d] + tq / np.sqrt(bx) for d in range(f.m)]
            mesh = np.meshgrid(*axes, indexing="ij")
            P = np.stack([mm.ravel() for mm in mesh], axis=-1)
            X, U = P[:, :f.n2], P[:, f.n2:]
            wmesh = np.meshgrid(*([wq] * (f.n2 + f.m)), indexing="ij")
            W = np.ones(P.shape[0])
            for wm in wmesh:
                W = W * wm.ravel()
            core = np.exp(ax * np.sum((X - cx) ** 2, axis=-1) + bx * np.sum((U - cu) ** 2, axis=-1))
            vals = (t1.c * t1.horizontal(X) * t1.central(U)) * np.conj(t2.c * t2.horizontal(X) * t2.central(U))
            total += np.sum(W * core * vals) / (ax ** (f.n2 / 2.0) * bx ** (f.m / 2.0))
    return float(np.real(total))
