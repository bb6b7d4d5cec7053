"""Configuration-driven experiment runner.

One structured JSON config per run; flags only override scalar fields.
Exit codes: 0 all configured assertions pass, 1 tolerance failure (report
still written), 2 config or usage error.  Reports are deterministic apart
from the timestamp field; CSV artifacts and figures are written alongside.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys

import numpy as np

from .algebra import GroupPoint, HTypeStructure, rotation_frame
from .fock import FockBasis, save_operator, operator_to_csv
from .frequency import (
    CompatiblePair,
    averaged_normal_exact,
    averaged_normal_mc,
    compatible,
    gft,
    invertibility_certificate,
    multiplier_J_quadrature,
    multiplier_J_spectral,
    normal_op,
)
from .geodesics import GeodesicSpec, sample_flow
from .reconstruct import (
    charge_frequency_map,
    injectivity_experiment,
    nu_samples,
    scalar_slice_verify,
    slice_verify,
    support_experiment,
)
from .reporting import emit_json, render_figures, write_csv
from .transform import Quadrature, TestFunction, xray

__all__ = ["main", "run", "ConfigError"]

SUBCOMMANDS = ("selftest", "geodesic", "xray", "spectrum", "verify-slice",
               "reconstruct", "support-map")


class ConfigError(ValueError):
    """Configuration failure with a field-path diagnostic."""


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------

_STRUCTURE_KEYS = {"family", "n", "m", "generators"}
_QUAD_KEYS = {"line_nodes", "loop_nodes", "volume_order", "period_nodes",
              "tail_tol", "max_periods"}
_FUNC_KEYS = {"type", "coeff", "a", "b", "x0", "u0", "om0", "poly", "terms"}

_EXPERIMENT_KEYS = {
    "selftest": {"tolerances"},
    "geodesic": {"nu", "lambda", "base_x", "base_u", "s_min", "s_max", "samples"},
    "xray": {"f", "lambdas", "nu_count", "base_points"},
    "spectrum": {"lambda", "mu", "k", "wsq", "nu", "averaged", "mc_samples",
                 "invertibility_tol"},
    "verify-slice": {"f", "lambda", "k", "mu", "nu_angle", "margin",
                     "operator_tol", "scalar_tol", "eta_scales", "skip_scalar"},
    "reconstruct": {"f", "lambdas", "k_values", "nu_count", "margin",
                    "recovery_tol", "null_tol", "solver_tol"},
    "support-map": {"mode", "R", "eps", "odd_only", "lambda0", "Z",
                    "grid_max", "grid_points", "odd_radius_tol"},
}

_TOP_KEYS = {"structure", "basis", "quadrature", "experiment", "output", "seed",
             "tolerances"}


def _check_keys(block, allowed, path):
    for key in block:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}")


def validate_config(cfg, subcommand):
    if not isinstance(cfg, dict):
        raise ConfigError("top-level config must be an object")
    _check_keys(cfg, _TOP_KEYS, "config")
    if "structure" not in cfg:
        raise ConfigError("missing required block config.structure")
    _check_keys(cfg["structure"], _STRUCTURE_KEYS, "config.structure")
    if "quadrature" in cfg:
        _check_keys(cfg["quadrature"], _QUAD_KEYS, "config.quadrature")
    if "basis" in cfg:
        _check_keys(cfg["basis"], {"L"}, "config.basis")
    exp = cfg.get("experiment", {})
    _check_keys(exp, _EXPERIMENT_KEYS[subcommand], "config.experiment")
    for key, val in (cfg.get("tolerances") or {}).items():
        if not (isinstance(val, (int, float)) and val > 0):
            raise ConfigError(f"config.tolerances.{key} must be positive")
    if "f" in exp:
        _check_keys(exp["f"], _FUNC_KEYS, "config.experiment.f")


def build_structure(cfg):
    try:
        return HTypeStructure.from_config(cfg["structure"])
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"config.structure: {exc}") from exc


def build_quadrature(cfg):
    block = dict(cfg.get("quadrature", {}))
    try:
        return Quadrature(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config.quadrature: {exc}") from exc


def build_test_function(S, block):
    """TestFunction from a config block; default unit Gaussian."""
    block = dict(block or {})
    kind = block.pop("type", "gaussian")
    if kind == "gaussian":
        kwargs = {}
        for key in ("a", "b", "coeff"):
            if key in block:
                kwargs[key] = float(block.pop(key))
        for key in ("x0", "u0", "om0"):
            if key in block:
                kwargs[key] = np.asarray(block.pop(key), dtype=float)
        if "poly" in block:
            kwargs["poly"] = {_parse_multi(k, 2 * S.n): complex(v)
                              for k, v in block.pop("poly").items()}
        if block:
            raise ConfigError(f"unused test-function fields {sorted(block)}")
        return TestFunction.gaussian(S, **kwargs)
    if kind == "sum":
        total = None
        for term in block.get("terms", []):
            tf = build_test_function(S, term)
            total = tf if total is None else total + tf
        if total is None:
            raise ConfigError("empty test-function sum")
        return total
    raise ConfigError(f"unknown test-function type {kind!r}")


def _parse_multi(key, dim):
    parts = tuple(int(p) for p in key.split())
    if len(parts) != dim:
        raise ConfigError(f"polynomial multi-index {key!r} needs {dim} entries")
    return parts


# ---------------------------------------------------------------------------
# checks plumbing
# ---------------------------------------------------------------------------

class Checks:
    """Collect named tolerance assertions for the report."""

    def __init__(self):
        self.items = []

    def add(self, name, value, tolerance, key):
        self.items.append({
            "name": name,
            "value": float(value),
            "tolerance": float(tolerance),
            "tolerance_key": key,
            "pass": bool(value <= tolerance),
        })

    def add_flag(self, name, flag, expected, key):
        self.items.append({
            "name": name,
            "value": bool(flag),
            "tolerance": bool(expected),
            "tolerance_key": key,
            "pass": bool(flag) == bool(expected),
        })

    @property
    def ok(self):
        return all(c["pass"] for c in self.items)


def _tol(cfg, key, default):
    return float((cfg.get("tolerances") or {}).get(key, default))


# ---------------------------------------------------------------------------
# subcommand runners
# ---------------------------------------------------------------------------

def _run_selftest(S, cfg, q, seed, outdir, emit_matrices):
    from .algebra import group_inv, group_mul
    from .fock import entry_function, sample_axis, sample_hermite, schrodinger_apply
    from .geodesics import flow_origin, helical_shift, momentum_left, momentum_right

    checks = Checks()
    rng = np.random.default_rng(seed)
    # Clifford identity
    worst = 0.0
    for _ in range(200):
        mu = rng.standard_normal(S.m)
        if np.linalg.norm(mu) < 1e-9:
            continue
        J = S.j_map(mu)
        worst = max(worst, float(np.max(np.abs(J @ J + float(mu @ mu) * np.eye(2 * S.n))))
                    / float(mu @ mu))
    checks.add("clifford_identity", worst, _tol(cfg, "clifford", 1e-12), "tolerances.clifford")

    # group law
    worst = 0.0
    for _ in range(100):
        p = GroupPoint(rng.standard_normal(2 * S.n), rng.standard_normal(S.m))
        r_ = GroupPoint(rng.standard_normal(2 * S.n), rng.standard_normal(S.m))
        w = GroupPoint(rng.standard_normal(2 * S.n), rng.standard_normal(S.m))
        lhs = group_mul(S, group_mul(S, p, r_), w)
        rhs = group_mul(S, p, group_mul(S, r_, w))
        worst = max(worst, float(np.max(np.abs(lhs.x - rhs.x))), float(np.max(np.abs(lhs.u - rhs.u))))
        inv = group_mul(S, p, group_inv(S, p))
        worst = max(worst, float(np.max(np.abs(inv.x))), float(np.max(np.abs(inv.u))))
    checks.add("group_law", worst, _tol(cfg, "group_law", 1e-13), "tolerances.group_law")

    # geodesic suite (helical identity + momentum drift)
    lam = np.zeros(S.m)
    lam[-1] = 1.0
    nu = rotation_frame(S, lam)[:, 0]
    worst = 0.0
    for kshift in (1, -2):
        a, b = helical_shift(S, nu, lam, 0.8, kshift)
        worst = max(worst, float(np.max(np.abs(a.x - b.x))), float(np.max(np.abs(a.u - b.u))))
    checks.add("helical_identity", worst, _tol(cfg, "helical", 1e-12), "tolerances.helical")
    worst = 0.0
    for s in np.linspace(0.0, 20.0, 21):
        mp = momentum_left(S, flow_origin(S, nu, lam, float(s)),
                           momentum_right(S, float(s), nu, lam))
        worst = max(worst, float(np.max(np.abs(mp.nu - nu))))
    checks.add("momentum_drift", worst, _tol(cfg, "momentum", 1e-11), "tolerances.momentum")

    # entry-function oracle, n = 1 projection of the structure
    axes = [sample_axis()]
    worst = 0.0
    for h in (0.5, 2.0):
        for (a_, b_) in ((0, 0), (2, 1), (3, 4)):
            fa = sample_hermite(axes, (a_,))
            fb = sample_hermite(axes, (b_,))
            z = np.array([0.7 - 0.4j])
            val = schrodinger_apply(h, [z[0].real], [z[0].imag], 0.2, fa).inner(fb)
            ref = entry_function(h, (a_,), (b_,), z, 0.2)
            worst = max(worst, abs(val - ref))
    checks.add("entry_oracle", worst, _tol(cfg, "entry_oracle", 1e-8), "tolerances.entry_oracle")

    # multiplier two-route agreement on the ambient structure
    basis = FockBasis(S.n, 6)
    pair = CompatiblePair.from_k(lam, 1)
    Jq = multiplier_J_quadrature(S, nu, lam, pair, basis, q)
    Js = multiplier_J_spectral(S, nu, lam, pair, basis)
    mask = basis.interior_mask(2)
    resid = float(np.max(np.abs((Jq.entries - Js.entries)[np.ix_(mask, mask)])))
    checks.add("multiplier_cross_validation", resid,
               _tol(cfg, "multiplier", 1e-8), "tolerances.multiplier")

    results = {"checks": checks.items}
    return results, checks


def _run_geodesic(S, cfg, q, seed, outdir, emit_matrices):
    exp = cfg.get("experiment", {})
    nu = np.asarray(exp.get("nu", rotation_frame(S, _default_lam(S))[:, 0]), dtype=float)
    lam = np.asarray(exp.get("lambda", _default_lam(S)), dtype=float)
    base = GroupPoint(np.asarray(exp.get("base_x", np.zeros(2 * S.n)), dtype=float),
                      np.asarray(exp.get("base_u", np.zeros(S.m)), dtype=float))
    s_vals = np.linspace(float(exp.get("s_min", 0.0)), float(exp.get("s_max", 4.0 * np.pi)),
                         int(exp.get("samples", 512)))
    spec = GeodesicSpec(base, nu / np.linalg.norm(nu), lam)
    rows = sample_flow(S, spec, s_vals)
    header = ["s"] + [f"x{i+1}" for i in range(2 * S.n)] + [f"u{j+1}" for j in range(S.m)]
    write_csv(os.path.join(outdir, "geodesic.csv"), header, rows.tolist())
    results = {"trajectory": rows, "n2": 2 * S.n, "csv": "geodesic.csv"}
    return results, Checks()


def _default_lam(S):
    lam = np.zeros(S.m)
    lam[-1] = 1.0
    return lam


def _run_xray(S, cfg, q, seed, outdir, emit_matrices):
    exp = cfg.get("experiment", {})
    f = build_test_function(S, exp.get("f"))
    lambdas = [np.asarray(l, dtype=float) for l in exp.get("lambdas", [_default_lam(S).tolist()])]
    nu_count = int(exp.get("nu_count", 4))
    bases = exp.get("base_points", [[0.0] * (2 * S.n + S.m)])
    rows = []
    values = []
    for lam in lambdas:
        nus = nu_samples(S, lam if np.linalg.norm(lam) else _default_lam(S), nu_count)
        for i_nu, nu in enumerate(nus):
            for bp in bases:
                bp = np.asarray(bp, dtype=float)
                base = GroupPoint(bp[:2 * S.n], bp[2 * S.n:])
                res = xray(S, f, GeodesicSpec(base, nu, lam), q)
                rows.append([i_nu, *lam.tolist(), *bp.tolist(),
                             res.value.real, res.value.imag, res.tail_bound])
                values.append(res.value)
    header = (["nu_index"] + [f"lambda{j+1}" for j in range(S.m)]
              + [f"base_x{i+1}" for i in range(2 * S.n)]
              + [f"base_u{j+1}" for j in range(S.m)]
              + ["value_re", "value_im", "tail_bound"])
    write_csv(os.path.join(outdir, "xray.csv"), header, rows)
    results = {"values": np.asarray(values), "rows": len(rows), "csv": "xray.csv"}
    return results, Checks()


def _spectrum_pair(S, exp):
    lam = np.asarray(exp.get("lambda", _default_lam(S).tolist()), dtype=float)
    if "mu" in exp:
        mu = np.asarray(exp["mu"], dtype=float)
        k = compatible(lam, mu)
        if k is None:
            raise ConfigError("config.experiment.mu is not compatible with lambda")
        return lam, CompatiblePair(lam, mu, k), None
    if "k" in exp:
        k = int(exp["k"])
        wsq = exp.get("wsq")
        if k == 0 and S.m == 1:
            # formal configuration: k = 0 has no nonzero frequency on a
            # one-dimensional center; keep the stated |w|^2 and a unit-norm
            # placeholder pair for reporting
            if wsq is None:
                raise ConfigError("k = 0 with m = 1 requires an explicit wsq")
            return lam, None, float(wsq)
        pair = CompatiblePair.from_k(lam, k)
        return lam, pair, (float(wsq) if wsq is not None else None)
    raise ConfigError("spectrum requires config.experiment.mu or .k")


def _run_spectrum(S, cfg, q, seed, outdir, emit_matrices):
    exp = cfg.get("experiment", {})
    L = int(cfg.get("basis", {}).get("L", 10))
    basis = FockBasis(S.n, L)
    lam, pair, wsq = _spectrum_pair(S, exp)
    checks = Checks()
    tol_inv = float(exp.get("invertibility_tol", 1e-12))

    if pair is None:
        from .frequency import averaged_eigenvalues
        eigs = averaged_eigenvalues(S.n, L, int(exp["k"]), float(wsq))
        lmin = int(np.argmin(eigs))
        results = {
            "eigenvalues": eigs,
            "min_eigenvalue": float(eigs[lmin]),
            "min_degree": lmin,
            "invertible": bool(np.all(eigs > tol_inv)),
            "k": int(exp["k"]),
            "wsq": float(wsq),
            "formal_pair": True,
        }
        return results, checks

    report = averaged_normal_exact(S, lam, pair, basis, wsq=wsq)
    ok, witness = invertibility_certificate(S, lam, pair, basis, tol=tol_inv, wsq=wsq)
    results = {
        "eigenvalues": report.eigenvalues,
        "min_eigenvalue": witness["min_eigenvalue"],
        "min_degree": witness["degree"],
        "invertible": ok,
        "k": pair.k,
        "mu": pair.mu.tolist(),
        "formal_pair": False,
    }
    if exp.get("mc_samples"):
        mc = averaged_normal_mc(S, lam, pair, basis, int(exp["mc_samples"]), seed)
        results["mc_eigenvalues"] = mc.eigenvalue_estimates()
        results["mc_stderr"] = mc.eigenvalue_stderr()
    if exp.get("nu") is not None:
        nu = np.asarray(exp["nu"], dtype=float)
        nu = nu / np.linalg.norm(nu)
        J = multiplier_J_quadrature(S, nu, lam, pair, basis, q)
        Nq = normal_op(S, nu, lam, pair, basis, q)
        results["multiplier_off_block"] = J.off_block_mass(pair.k)
        if emit_matrices:
            save_operator(J, os.path.join(outdir, "multiplier.fop"))
            operator_to_csv(J, os.path.join(outdir, "multiplier.csv"))
            save_operator(Nq, os.path.join(outdir, "normal.fop"))
    return results, checks


def _run_verify_slice(S, cfg, q, seed, outdir, emit_matrices):
    exp = cfg.get("experiment", {})
    L = int(cfg.get("basis", {}).get("L", 12))
    basis = FockBasis(S.n, L)
    f = build_test_function(S, exp.get("f"))
    lam = np.asarray(exp.get("lambda", _default_lam(S).tolist()), dtype=float)
    if "mu" in exp:
        pair = CompatiblePair.build(lam, np.asarray(exp["mu"], dtype=float))
    else:
        pair = CompatiblePair.from_k(lam, int(exp.get("k", 1)))
    margin = int(exp.get("margin", 4))
    angle = float(exp.get("nu_angle", 0.4))
    frame = rotation_frame(S, lam)
    nu = np.cos(angle) * frame[:, 0] + np.sin(angle) * frame[:, S.n]

    checks = Checks()
    rep = slice_verify(S, f, nu, lam, pair, basis, q, margin=margin)
    op_tol = float(exp.get("operator_tol", 1e-3))
    checks.add("operator_slice_residual", rep.residual, op_tol, "experiment.operator_tol")
    results = {
        "operator_residual": rep.residual,
        "lhs_norm": rep.lhs_norm,
        "rhs_norm": rep.rhs_norm,
        "k": pair.k,
        "margin": margin,
    }
    if not exp.get("skip_scalar", False):
        scales = exp.get("eta_scales", [0.0, 0.5, 1.5, 2.404825557695773, 3.5])
        etas = [c * nu for c in scales]
        sc_tol = float(exp.get("scalar_tol", 1e-6))
        sc = scalar_slice_verify(S, f, nu, lam, etas, q)
        checks.add("scalar_slice_residual", sc, sc_tol, "experiment.scalar_tol")
        results["scalar_residual"] = sc
    results["checks"] = checks.items
    if emit_matrices:
        save_operator(rep.data_operator, os.path.join(outdir, "slice_lhs.fop"))
        save_operator(rep.predicted_operator, os.path.join(outdir, "slice_rhs.fop"))
    return results, checks


def _run_reconstruct(S, cfg, q, seed, outdir, emit_matrices):
    exp = cfg.get("experiment", {})
    L = int(cfg.get("basis", {}).get("L", 10))
    basis = FockBasis(S.n, L)
    f = build_test_function(S, exp.get("f"))
    lambdas = [np.asarray(l, dtype=float) for l in exp.get("lambdas", [[1.0]])]
    k_values = [int(k) for k in exp.get("k_values", [1])]
    pairs = [[CompatiblePair.from_k(lam, k) for k in k_values] for lam in lambdas]
    nu_count = int(exp.get("nu_count", 8))
    margin = int(exp.get("margin", 4))
    rec_tol = float(exp.get("recovery_tol", 1e-2))
    null_tol = float(exp.get("null_tol", 1e-8))
    solver_tol = float(exp.get("solver_tol", 1e-8))
    report = injectivity_experiment(S, f, lambdas, pairs, nu_count, basis, q,
                                    tol=solver_tol, margin=margin)
    checks = Checks()
    for i, cell in enumerate(report["cells"]):
        checks.add(f"recovery_error_cell{i}", cell["recovery_error"], rec_tol,
                   "experiment.recovery_tol")
    checks.add("null_test", report["null"], null_tol, "experiment.null_tol")
    results = {"cells": report["cells"], "null": report["null"], "checks": checks.items}
    rows = [[i, cell["k"], cell["recovery_error"]] for i, cell in enumerate(report["cells"])]
    write_csv(os.path.join(outdir, "recovery.csv"), ["cell", "k", "recovery_error"], rows)
    return results, checks


def _run_support_map(S, cfg, q, seed, outdir, emit_matrices):
    exp = cfg.get("experiment", {})
    mode = exp.get("mode", "shell" if S.m == 1 else "cap")
    gmax = float(exp.get("grid_max", 16.0))
    gpts = int(exp.get("grid_points", 1601))
    checks = Checks()
    if mode == "shell":
        if S.m != 1:
            raise ConfigError("shell mode requires a one-dimensional center")
        mus = np.linspace(-gmax, gmax, gpts).reshape(-1, 1)
        spec = {"R": float(exp.get("R", 1.0)), "eps": float(exp.get("eps", 0.5)),
                "odd_only": bool(exp.get("odd_only", True))}
        rep = support_experiment(S, spec, mus)
        tol = float(exp.get("odd_radius_tol", 2.0 * gmax / (gpts - 1)))
        checks.add("unreachable_radius_vs_construction",
                   abs(rep["grid_radius"] - rep["analytic_radius"]), tol,
                   "experiment.odd_radius_tol")
        results = {
            "points": rep["map"].points,
            "reachable": rep["map"].reachable.astype(int),
            "grid_radius": rep["grid_radius"],
            "analytic_radius": rep["analytic_radius"],
            "constant_c": rep["constant_c"],
            "checks": checks.items,
        }
    elif mode == "cap":
        lam0 = np.asarray(exp.get("lambda0", _default_lam(S).tolist()), dtype=float)
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((gpts, S.m))
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True) * \
            rng.uniform(0.1, gmax, (gpts, 1))
        rep = support_experiment(S, {"lambda0": lam0, "eps": float(exp.get("eps", 0.5))}, pts)
        results = {
            "points": rep["map"].points,
            "reachable": rep["map"].reachable.astype(int),
            "grid_radius": rep["grid_radius"],
            "constant_c": rep["constant_c"],
            "checks": checks.items,
        }
    elif mode == "charge-frequency":
        Z = exp.get("Z")
        if isinstance(Z, list):
            Z = [np.asarray(l, dtype=float) for l in Z]
        mus = (np.linspace(-gmax, gmax, gpts).reshape(-1, 1) if S.m == 1 else None)
        if mus is None:
            rng = np.random.default_rng(seed)
            mus = rng.standard_normal((gpts, S.m))
            mus = mus / np.linalg.norm(mus, axis=1, keepdims=True) * \
                rng.uniform(0.1, gmax, (gpts, 1))
        cov = charge_frequency_map(S, Z, mus, odd_only=bool(exp.get("odd_only", False)))
        results = {
            "points": cov.points,
            "reachable": cov.reachable.astype(int),
            "grid_radius": cov.bounding_radius,
            "checks": checks.items,
        }
    else:
        raise ConfigError(f"unknown support-map mode {mode!r}")
    rows = [[pt.tolist(), int(fl)] for pt, fl in zip(results["points"], results["reachable"])]
    write_csv(os.path.join(outdir, "coverage.csv"),
              ["mu", "reachable"],
              [[" ".join(f"{x:.17g}" for x in np.atleast_1d(p)), f] for p, f in rows])
    return results, checks


_RUNNERS = {
    "selftest": _run_selftest,
    "geodesic": _run_geodesic,
    "xray": _run_xray,
    "spectrum": _run_spectrum,
    "verify-slice": _run_verify_slice,
    "reconstruct": _run_reconstruct,
    "support-map": _run_support_map,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _parser():
    p = argparse.ArgumentParser(prog="htype-xray",
                                description="sub-Riemannian X-ray transform experiments")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=False, help="path to the JSON run config")
    p.add_argument("--out", default=".", help="output directory for reports/artifacts")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--threads", type=int, default=1,
                   help="worker hint; results are thread-count independent")
    p.add_argument("--emit-matrices", action="store_true",
                   help="serialize operator matrices next to the report")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    return p


def _bundled_config(subcommand):
    from importlib import resources
    name = {"selftest": "selftest_h1.json"}.get(subcommand)
    if name is None:
        return None
    ref = resources.files("htype_xray").joinpath("configs", name)
    return json.loads(ref.read_text())


def run(argv):
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        if args.config is None:
            cfg = _bundled_config(args.subcommand)
            if cfg is None:
                print("error: --config is required for this subcommand", file=sys.stderr)
                return 2
        else:
            try:
                with open(args.config) as fh:
                    cfg = json.load(fh)
            except OSError as exc:
                print(f"error: cannot read config: {exc}", file=sys.stderr)
                return 2
            except json.JSONDecodeError as exc:
                print(f"error: config parse failure at line {exc.lineno}, column {exc.colno}: "
                      f"{exc.msg}", file=sys.stderr)
                return 2
        validate_config(cfg, args.subcommand)
        S = build_structure(cfg)
        q = build_quadrature(cfg)
        seed = int(args.seed if args.seed is not None else cfg.get("seed", 0))
        os.makedirs(args.out, exist_ok=True)
        results, checks = _RUNNERS[args.subcommand](S, cfg, q, seed, args.out,
                                                    args.emit_matrices)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    report = {
        "subcommand": args.subcommand,
        "config": cfg,
        "seed": seed,
        "results": _strip_arrays(results),
        "checks": checks.items,
        "pass": checks.ok,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    emit_json(report, os.path.join(args.out, "report.json"))
    if not args.no_plots:
        try:
            render_figures(args.subcommand, results, args.out)
        except KeyError:
            pass  # subcommand without a standard figure
    if not checks.ok:
        return 1
    return 0


def _strip_arrays(obj):
    """Reduce bulky arrays for the JSON report (full data lives in CSV)."""
    out = {}
    for k, v in obj.items():
        if isinstance(v, np.ndarray) and v.size > 256:
            out[k] = {"size": int(v.size), "summary": "see CSV artifacts"}
        elif isinstance(v, np.ndarray):
            out[k] = v
        else:
            out[k] = v
    return out


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
