"""Truncated Bargmann-Fock basis, special functions and representation matrices.

Matrix conventions: a FockOperator stores entry(row beta, col alpha) =
<A omega_alpha, omega_beta> on the graded-lex basis {omega_alpha : |alpha| <= L}.
Entry functions E^h_{alpha beta}(z, t) = (2pi)^{n/2} Phi_{alpha,beta}(sqrt(h) z)
e^{iht} are the matrix coefficients; the Gaussian factor of the special
Hermite functions decays (e^{-|z|^2/4}), pinned by the Schrodinger-side
quadrature oracle in the tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product as iter_product

import numpy as np
from scipy.special import gammaln

from .algebra import alpha_homomorphism, rotation_frame, standard_complex_structure

__all__ = [
    "FockBasis",
    "FockOperator",
    "FrameInconsistencyError",
    "hermite",
    "hermite_table",
    "laguerre",
    "special_hermite",
    "special_hermite_1d",
    "special_hermite_table",
    "entry_function",
    "spherical_function",
    "SampledFunction",
    "sample_axis",
    "sample_hermite",
    "schrodinger_apply",
    "rep_matrix",
    "rep_tables",
    "scalar_rep",
    "complex_coords",
    "real_coords",
    "complex_matrix",
    "real_matrix",
    "antilinear_complex_matrix",
    "substitution_operator",
    "intertwiner_tau",
    "intertwiner_U",
    "save_operator",
    "load_operator",
    "operator_to_csv",
]


class FrameInconsistencyError(ValueError):
    """Raised when a real map fails the complex-linearity check."""


# ---------------------------------------------------------------------------
# basis and operators
# ---------------------------------------------------------------------------

class FockBasis:
    """Graded-lex enumeration of multi-indices {alpha in N^n : |alpha| <= L}."""

    def __init__(self, n, L):
        if n < 1 or L < 0:
            raise ValueError("need n >= 1 and L >= 0")
        self.n = int(n)
        self.L = int(L)
        idx = []
        for deg in range(self.L + 1):
            block = [a for a in iter_product(range(deg + 1), repeat=self.n) if sum(a) == deg]
            block.sort()
            idx.extend(block)
        self.indices = np.array(idx, dtype=int).reshape(len(idx), self.n)
        self.degrees = self.indices.sum(axis=1)
        self.index_of = {tuple(a): i for i, a in enumerate(idx)}
        self._slices = []
        start = 0
        for deg in range(self.L + 1):
            count = int(np.sum(self.degrees == deg))
            self._slices.append(slice(start, start + count))
            start += count

    @property
    def size(self):
        return self.indices.shape[0]

    def degree_slice(self, l):
        return self._slices[l]

    def degree_dim(self, l):
        s = self._slices[l]
        return s.stop - s.start

    def interior_mask(self, margin=4):
        """Boolean mask of basis elements with degree <= L - margin."""
        return self.degrees <= self.L - margin

    def __eq__(self, other):
        return isinstance(other, FockBasis) and self.n == other.n and self.L == other.L

    def __repr__(self):
        return f"FockBasis(n={self.n}, L={self.L}, size={self.size})"


@dataclass
class FockOperator:
    """Dense operator on a truncated Fock basis."""

    basis: FockBasis
    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        d = self.basis.size
        if self.entries.shape != (d, d):
            raise ValueError(f"entries shape {self.entries.shape} does not match basis size {d}")

    @classmethod
    def identity(cls, basis):
        return cls(basis, np.eye(basis.size, dtype=complex))

    @classmethod
    def zero(cls, basis):
        return cls(basis, np.zeros((basis.size, basis.size), dtype=complex))

    def block(self, l_out, l_in):
        """Submatrix: rows of degree l_out, columns of degree l_in."""
        return self.entries[self.basis.degree_slice(l_out), self.basis.degree_slice(l_in)]

    def adjoint(self):
        return FockOperator(self.basis, self.entries.conj().T)

    def compose(self, other):
        return FockOperator(self.basis, self.entries @ other.entries)

    def interior(self, margin=4):
        mask = self.basis.interior_mask(margin)
        return self.entries[np.ix_(mask, mask)]

    def off_block_mass(self, shift):
        """Max |entry| over positions with row degree != col degree + shift."""
        degs = self.basis.degrees
        off = degs[:, None] != degs[None, :] + shift
        if not off.any():
            return 0.0
        return float(np.max(np.abs(self.entries[off])))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_operator(op, path):
    """Write a text matrix file: JSON header line, then row-major re/im pairs."""
    header = {
        "format": "fock-operator",
        "version": 1,
        "n": op.basis.n,
        "L": op.basis.L,
        "enumeration": "graded-lex",
        "size": op.basis.size,
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for row in op.entries:
            fh.write(" ".join(f"{v.real:.17g} {v.imag:.17g}" for v in row) + "\n")


def load_operator(path):
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "fock-operator":
            raise ValueError("not a fock-operator file")
        if header.get("enumeration") != "graded-lex":
            raise ValueError(f"unsupported enumeration {header.get('enumeration')!r}")
        basis = FockBasis(header["n"], header["L"])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (basis.size, 2 * basis.size):
        raise ValueError("matrix payload does not match the header dimensions")
    return FockOperator(basis, data[:, 0::2] + 1j * data[:, 1::2])


def operator_to_csv(op, path):
    """CSV export for inspection: one entry per line with index labels."""
    idx = op.basis.indices
    with open(path, "w") as fh:
        fh.write("row,col,row_alpha,col_alpha,re,im\n")
        for r in range(op.basis.size):
            for c in range(op.basis.size):
                v = op.entries[r, c]
                ra = " ".join(map(str, idx[r]))
                ca = " ".join(map(str, idx[c]))
                fh.write(f"{r},{c},{ra},{ca},{v.real:.17g},{v.imag:.17g}\n")


# ---------------------------------------------------------------------------
# scalar special functions
# ---------------------------------------------------------------------------

def hermite(k, x):
    """Normalized Hermite function phi_k; phi_0(x) = pi^{-1/4} e^{-x^2/2}.

    Stable ascending recurrence; orthonormal in L^2(R).
    """
    if k < 0:
        raise ValueError("hermite index must be nonnegative")
    return hermite_table(k, x)[k]


def hermite_table(kmax, x):
    """All phi_0..phi_kmax at x (array-valued); shape (kmax+1,) + x.shape."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((kmax + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if kmax >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(1, kmax):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * x * out[k] - np.sqrt(k / (k + 1.0)) * out[k - 1]
    return out


def laguerre(a, b, x):
    """Generalized Laguerre polynomial L_a^{(b)}(x) by ascending recurrence.

    Requires a >= 0 and a + b >= 0 (b may be a negative integer).
    """
    if a < 0 or a + b < 0:
        raise ValueError("laguerre indices must satisfy a >= 0 and a + b >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if a == 0:
        return prev
    cur = 1.0 + b - x
    for j in range(1, a):
        prev, cur = cur, ((2 * j + b + 1 - x) * cur - (j + b) * prev) / (j + 1)
    return cur


def _laguerre_stack(amax, b, x):
    """L_0^{(b)}..L_amax^{(b)} at x; shape (amax+1,) + x.shape."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((amax + 1,) + x.shape)
    out[0] = 1.0
    if amax >= 1:
        out[1] = 1.0 + b - x
    for j in range(1, amax):
        out[j + 1] = ((2 * j + b + 1 - x) * out[j] - (j + b) * out[j - 1]) / (j + 1)
    return out


def special_hermite_1d(a, b, z):
    """One-dimensional special Hermite function Phi_{a,b}(z), z complex.

    Phi_{a,b}(z) = (2pi)^{-1/2} sqrt(min!/max!) (+-z or zbar/sqrt2)^{|a-b|}
    L_min^{(|a-b|)}(|z|^2/2) e^{-|z|^2/4}.
    """
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    d = a - b
    lo = min(a, b)
    lagval = laguerre(lo, abs(d), 0.5 * r2)
    logmag = 0.5 * (gammaln(lo + 1) - gammaln(max(a, b) + 1))
    if d >= 0:
        base = z / np.sqrt(2.0)
    else:
        base = -np.conj(z) / np.sqrt(2.0)
    # combine power, factorial ratio and Gaussian in one exponent
    with np.errstate(divide="ignore", invalid="ignore"):
        absbase = np.abs(base)
        mag = np.exp(abs(d) * np.where(absbase > 0, np.log(np.where(absbase > 0, absbase, 1.0)), 0.0)
                     + logmag - 0.25 * r2)
        phase = np.where(absbase > 0, (base / np.where(absbase > 0, absbase, 1.0)) ** abs(d), 1.0)
    power = np.where((absbase > 0) | (abs(d) == 0), mag * phase, 0.0)
    return (2.0 * np.pi) ** -0.5 * power * lagval


def special_hermite_table(L, z):
    """Table Phi_{a,b}(z) for all 0 <= a, b <= L; shape (L+1, L+1) + z.shape."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    gauss = (2.0 * np.pi) ** -0.5 * np.exp(-0.25 * r2)
    out = np.zeros((L + 1, L + 1) + z.shape, dtype=complex)
    zs = z / np.sqrt(2.0)
    zbs = -np.conj(z) / np.sqrt(2.0)
    for d in range(L + 1):
        lag = _laguerre_stack(L - d, d, 0.5 * r2)
        powz = zs ** d
        powzb = zbs ** d
        for lo in range(L - d + 1):
            scale = np.exp(0.5 * (gammaln(lo + 1) - gammaln(lo + d + 1)))
            val = scale * lag[lo] * gauss
            out[lo + d, lo] = powz * val
            if d > 0:
                out[lo, lo + d] = powzb * val
    return out


def special_hermite(alpha, beta, z):
    """Multi-dimensional Phi_{alpha,beta}(z) = prod_j Phi_{alpha_j,beta_j}(z_j)."""
    alpha = tuple(alpha)
    beta = tuple(beta)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if len(alpha) != len(beta) or len(alpha) != z.shape[-1]:
        raise ValueError("multi-index/argument dimensions disagree")
    val = 1.0
    for j, (a, b) in enumerate(zip(alpha, beta)):
        val = val * special_hermite_1d(a, b, z[..., j])
    return val


def entry_function(h, alpha, beta, z, t=0.0):
    """Matrix coefficient E^h_{alpha beta}(z, t) = (2pi)^{n/2} Phi_{alpha,beta}(sqrt(h) z) e^{iht}."""
    if h <= 0:
        raise ValueError("entry functions require h > 0")
    n = len(tuple(alpha))
    return (2.0 * np.pi) ** (n / 2.0) * special_hermite(alpha, beta, np.sqrt(h) * np.asarray(z, dtype=complex)) * np.exp(1j * h * t)


def spherical_function(l, n, z, t=0.0):
    """U(n)-spherical function L_l^{n-1}(|z|^2/2) e^{-|z|^2/4} e^{it}."""
    if l < 0:
        raise ValueError("degree must be nonnegative")
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    r2 = np.sum(np.abs(z) ** 2, axis=-1)
    return laguerre(l, n - 1, 0.5 * r2) * np.exp(-0.25 * r2) * np.exp(1j * t)


# ---------------------------------------------------------------------------
# Schrodinger-representation quadrature oracle
# ---------------------------------------------------------------------------

@dataclass
class SampledFunction:
    """Function sampled on a uniform tensor grid (one axis per dimension)."""

    axes: list
    values: np.ndarray

    def __post_init__(self):
        self.axes = [np.asarray(a, dtype=float) for a in self.axes]
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != tuple(len(a) for a in self.axes):
            raise ValueError("value array does not match the grid axes")

    @property
    def cell(self):
        return float(np.prod([a[1] - a[0] for a in self.axes]))

    def inner(self, other):
        """L^2 inner product <self, other> by the uniform-grid rule."""
        return complex(np.sum(self.values * np.conj(other.values)) * self.cell)

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.cell))


def sample_axis(radius=12.0, num=2048):
    """Uniform periodic-wrap axis on [-radius, radius)."""
    return -radius + 2.0 * radius * np.arange(num) / num


def sample_hermite(axes, alpha):
    """Product Hermite function Phi_alpha sampled on the grid."""
    vals = np.array(1.0, dtype=complex)
    out = None
    for j, a in enumerate(alpha):
        h = hermite(a, axes[j]).astype(complex)
        out = h if out is None else np.multiply.outer(out, h)
    if out is None:
        raise ValueError("empty multi-index")
    return SampledFunction(list(axes), out * vals)


def _fft_shift(values, axis, axis_points, delta):
    """Band-limited (trigonometric) interpolation of f(. + delta) along one axis."""
    num = len(axis_points)
    span = axis_points[1] - axis_points[0]
    freqs = np.fft.fftfreq(num, d=span)
    mult = np.exp(2j * np.pi * freqs * delta)
    shape = [1] * values.ndim
    shape[axis] = num
    return np.fft.ifft(np.fft.fft(values, axis=axis) * mult.reshape(shape), axis=axis)


def schrodinger_apply(h, x, y, t, f):
    """Apply [rho_h(x, y, t) phi](xi) = e^{ih(t + x.y/2)} e^{i sgn(h)sqrt(|h|) y.xi} phi(xi + sqrt(|h|) x).

    The translation uses trigonometric interpolation on the uniform sample
    grid (exact for band-limited data; the test functions decay below 1e-14
    at the boundary).  Oracle only, n = len(x) dimensions.
    """
    if h == 0:
        raise ValueError("schrodinger representation requires h != 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    n = len(x)
    if len(f.axes) != n or len(y) != n:
        raise ValueError("point dimension does not match the sampled grid")
    root = np.sqrt(abs(h))
    signed_root = np.sign(h) * root
    vals = f.values
    for j in range(n):
        vals = _fft_shift(vals, j, f.axes[j], root * x[j])
    phase = np.exp(1j * h * (t + 0.5 * float(np.dot(x, y))))
    for j in range(n):
        shape = [1] * n
        shape[j] = len(f.axes[j])
        vals = vals * np.exp(1j * signed_root * y[j] * f.axes[j]).reshape(shape)
    return SampledFunction(f.axes, phase * vals)


# ---------------------------------------------------------------------------
# complex/real identifications
# ---------------------------------------------------------------------------

def complex_coords(x):
    """Identify R^{2n} with C^n: (x_1..x_n, y_1..y_n) -> x + iy."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def real_coords(z):
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def complex_matrix(A, tol=1e-10):
    """Complex n x n matrix of a real 2n x 2n map commuting with J.

    Raises FrameInconsistencyError if A fails the complex-linearity check
    AJ = JA (relative tolerance tol).
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0] // 2
    J = standard_complex_structure(n)
    resid = np.max(np.abs(A @ J - J @ A))
    if resid > tol * (1.0 + np.max(np.abs(A))):
        raise FrameInconsistencyError(f"map is not complex-linear (residual {resid:.3e})")
    return A[:n, :n] + 1j * A[n:, :n]


def real_matrix(U):
    """Real 2n x 2n form of a complex n x n matrix."""
    U = np.asarray(U, dtype=complex)
    return np.block([[U.real, -U.imag], [U.imag, U.real]])


def antilinear_complex_matrix(A, tol=1e-10):
    """Complex V with A = (z -> V zbar), for real A anticommuting with J."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0] // 2
    C0 = np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
    return complex_matrix(A @ C0, tol)


# ---------------------------------------------------------------------------
# representation matrices
# ---------------------------------------------------------------------------

def rep_tables(S, mu, zs, basis):
    """Entry tables for pi_mu at horizontal points, batched.

    zs: real array (..., 2n) of horizontal coordinates (central part zero).
    Returns complex array of shape (size, size) + batch, with
    out[r, c, ...] = <pi_mu(z, 0) omega_{alpha_c}, omega_{beta_r}>.
    """
    mu = np.asarray(mu, dtype=float)
    h = float(np.linalg.norm(mu))
    if h == 0.0:
        raise ValueError("rep_matrix requires mu != 0")
    R = rotation_frame(S, mu)
    zs = np.asarray(zs, dtype=float)
    zc = complex_coords(zs @ R)  # (R^t z) complexified, batched
    A = basis.indices
    batch = zc.shape[:-1]
    out = np.full((basis.size, basis.size) + batch, (2.0 * np.pi) ** (basis.n / 2.0), dtype=complex)
    for j in range(basis.n):
        T = special_hermite_table(basis.L, np.sqrt(h) * zc[..., j])
        out *= T[A[:, None, j], A[None, :, j]].transpose((1, 0) + tuple(range(2, 2 + len(batch))))
    return out


def rep_matrix(S, mu, p, basis):
    """Matrix of pi_mu(p) = pi_{|mu|}(alpha_mu(p)) on the truncated basis."""
    mu = np.asarray(mu, dtype=float)
    h = float(np.linalg.norm(mu))
    if h == 0.0:
        raise ValueError("rep_matrix requires mu != 0")
    entries = rep_tables(S, mu, p.x, basis)
    t = float(np.dot(mu, p.u)) / h
    return FockOperator(basis, entries * np.exp(1j * h * t))


def scalar_rep(S, eta, p):
    """One-dimensional representation pi_{(eta,0)}(x, u) = e^{i<eta, x>}."""
    eta = np.asarray(eta, dtype=float)
    return complex(np.exp(1j * float(np.dot(eta, p.x))))


# ---------------------------------------------------------------------------
# intertwiners
# ---------------------------------------------------------------------------

def substitution_operator(V, basis):
    """Matrix of the composition operator F -> F(V zeta) on normalized monomials.

    Exactly block-diagonal across degrees (homogeneous substitution).
    """
    V = np.asarray(V, dtype=complex)
    n = basis.n
    if V.shape != (n, n):
        raise ValueError(f"expected {n} x {n} matrix")
    size = basis.size
    out = np.zeros((size, size), dtype=complex)
    log_fact = gammaln(np.arange(basis.L + 2))

    for c in range(size):
        alpha = basis.indices[c]
        # expand prod_j (sum_i V[j,i] zeta_i)^{alpha_j} over multi-indices
        poly = {tuple([0] * n): 1.0 + 0.0j}
        for j in range(n):
            for _ in range(alpha[j]):
                new = {}
                for mi, coeff in poly.items():
                    for i in range(n):
                        if V[j, i] == 0:
                            continue
                        key = list(mi)
                        key[i] += 1
                        key = tuple(key)
                        new[key] = new.get(key, 0.0) + coeff * V[j, i]
                poly = new
        la = float(np.sum(log_fact[alpha + 1] - log_fact[1]))
        for mi, coeff in poly.items():
            r = basis.index_of.get(mi)
            if r is None:
                continue
            lb = float(np.sum(log_fact[np.array(mi) + 1] - log_fact[1]))
            out[r, c] = coeff * np.exp(0.5 * (lb - la))
    return FockOperator(basis, out)


def intertwiner_tau(U, basis, tol=1e-12):
    """tau(U): F -> F(U* zeta) for U unitary on C^n."""
    U = np.asarray(U, dtype=complex)
    if np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0]))) > tol:
        raise ValueError("intertwiner requires a unitary matrix")
    return substitution_operator(U.conj().T, basis)


def intertwiner_U(S, mu, lam, basis, tol=1e-10):
    """Basis-rotation intertwiner F -> F(V zeta), V = complex form of R_lam^t R_mu.

    Defined only when R_lam^t R_mu is complex-linear (mu, lambda aligned);
    otherwise raises FrameInconsistencyError.
    """
    mu = np.asarray(mu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if np.linalg.norm(mu) == 0.0 or np.linalg.norm(lam) == 0.0:
        raise ValueError("intertwiner requires nonzero momenta")
    A = rotation_frame(S, lam).T @ rotation_frame(S, mu)
    V = complex_matrix(A, tol)
    return substitution_operator(V, basis)
