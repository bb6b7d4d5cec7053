"""Closed-form sub-Riemannian geodesic flow on H-type groups.

Geodesics from the origin with momentum (nu, lambda) are generalized
helices; for lambda != 0 the guiding-center parameterization centers the
helix on the lambda-axis.  Momentum maps for the left/right actions give
the conserved quantities used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import GroupPoint, group_mul

__all__ = [
    "GeodesicSpec",
    "MomentumPair",
    "flow_origin",
    "sample_flow",
    "gamma_centered",
    "translate_curve",
    "helical_shift",
    "momentum_left",
    "momentum_right",
    "guiding_center",
]

UNIT_NU_TOL = 1e-12
# below this |lambda|*|s| the trigonometric forms lose digits to cancellation
SERIES_THRESHOLD = 1e-4


@dataclass
class GeodesicSpec:
    """Geodesic family member: left translate of the centered helix.

    base: left-translation (x, u); nu: unit horizontal velocity;
    lam: central charge (may be zero).
    """

    base: GroupPoint
    nu: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.lam = np.asarray(self.lam, dtype=float)
        if abs(np.linalg.norm(self.nu) - 1.0) > UNIT_NU_TOL:
            raise ValueError("geodesic horizontal velocity must be a unit vector")

    @property
    def charge_norm(self):
        return float(np.linalg.norm(self.lam))


@dataclass
class MomentumPair:
    """Momentum (nu, zeta) in the left trivialization of T*G."""

    nu: np.ndarray
    zeta: np.ndarray

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.zeta = np.asarray(self.zeta, dtype=float)


def _phi1(theta):
    """sin(theta)/theta, series branch near zero."""
    if abs(theta) < SERIES_THRESHOLD:
        t2 = theta * theta
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0
    return np.sin(theta) / theta


def _phi2(theta):
    """(1 - cos(theta))/theta^2, series branch near zero."""
    if abs(theta) < SERIES_THRESHOLD:
        t2 = theta * theta
        return 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    return (1.0 - np.cos(theta)) / (theta * theta)


def _psi(theta):
    """(theta - sin(theta))/theta^3, series branch near zero."""
    if abs(theta) < SERIES_THRESHOLD:
        t2 = theta * theta
        return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    return (theta - np.sin(theta)) / (theta ** 3)


def flow_origin(S, nu, lam, s):
    """Geodesic from the origin with initial momentum (nu, lambda) at time s.

    x(s) = ((e^{s J_lam} - 1)/J_lam) nu, u(s) = (|lam|s - sin|lam|s)/(2|lam|^2)
    * lam_hat * |nu|^2, with the straight-line branch at lam = 0 and a
    series branch for |lam|*|s| below the stability threshold.
    """
    nu = np.asarray(nu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    r = np.linalg.norm(lam)
    if r == 0.0:
        return GroupPoint(s * nu, np.zeros(S.m))
    theta = r * s
    Jl = S.j_map(lam)
    nsq = float(np.dot(nu, nu))
    x = s * _phi1(theta) * nu + s * s * _phi2(theta) * (Jl @ nu)
    u = 0.5 * s ** 3 * _psi(theta) * nsq * lam
    return GroupPoint(x, u)


def sample_flow(S, spec, s_values):
    """Left-translated trajectory samples; rows (s, x_1..x_2n, u_1..u_m)."""
    rows = []
    for s in np.asarray(s_values, dtype=float):
        p = translate_curve(S, spec.base, flow_origin(S, spec.nu, spec.lam, float(s)))
        rows.append(np.concatenate([[s], p.x, p.u]))
    return np.array(rows)


def gamma_centered(S, nu, lam, s):
    """Guiding-center helix gamma(s) = ((e^{s J_lam}/J_lam) nu, s lam |nu|^2 / (2|lam|^2))."""
    nu = np.asarray(nu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    r = np.linalg.norm(lam)
    if r == 0.0:
        raise ValueError("guiding-center parameterization requires lambda != 0")
    Jl = S.j_map(lam)
    # e^{s J_lam} J_lam^{-1} = sin(r s)/r I - cos(r s)/r^2 J_lam
    x = (np.sin(r * s) / r) * nu - (np.cos(r * s) / r ** 2) * (Jl @ nu)
    nsq = float(np.dot(nu, nu))
    u = s * nsq / (2.0 * r * r) * lam
    return GroupPoint(x, u)


def translate_curve(S, base, point):
    """Left action of the base point on a curve sample."""
    return group_mul(S, base, point)


def helical_shift(S, nu, lam, s, k):
    """Both sides of the helical periodicity at shift k.

    Returns (gamma(s + 2 k pi/|lam|), (0, k pi |lam|^{-2} lam_hat) * gamma(s));
    the two coincide for unit nu.
    """
    lam = np.asarray(lam, dtype=float)
    r = np.linalg.norm(lam)
    if r == 0.0:
        raise ValueError("helical shift requires lambda != 0")
    lhs = gamma_centered(S, nu, lam, s + 2.0 * k * np.pi / r)
    shift = GroupPoint(np.zeros(2 * S.n), (k * np.pi / r ** 3) * lam)
    rhs = group_mul(S, shift, gamma_centered(S, nu, lam, s))
    return lhs, rhs


def momentum_left(S, p, pm):
    """Left-translation momentum map J(x, u, nu, mu) = (nu - J_mu x, mu).

    Constant along every geodesic; equals (0, lam) on the centered helix.
    """
    Jm = S.j_map(pm.zeta)
    return MomentumPair(pm.nu - Jm @ p.x, pm.zeta)


def momentum_right(S, s, nu, mu):
    """Right-translation momentum along the flow: (e^{s J_mu} nu, mu)."""
    nu = np.asarray(nu, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = np.linalg.norm(mu)
    if r == 0.0:
        return MomentumPair(nu.copy(), mu.copy())
    Jm = S.j_map(mu)
    rotated = np.cos(r * s) * nu + (np.sin(r * s) / r) * (Jm @ nu)
    return MomentumPair(rotated, mu.copy())


def guiding_center(S, p, nu, mu):
    """Constant center C = x - J_mu^{-1} nu of the helix through (x, .)."""
    nu = np.asarray(nu, dtype=float)
    mu = np.asarray(mu, dtype=float)
    r = np.linalg.norm(mu)
    if r == 0.0:
        raise ValueError("guiding center requires mu != 0")
    Jm = S.j_map(mu)
    # J_mu^{-1} = -J_mu / |mu|^2
    return p.x + (Jm @ nu) / (r * r)
