"""Deterministic report emission: JSON, CSV, and figure rendering.

Reports are byte-identical across runs of the same config apart from the
single timestamp field: floats print with 17 significant digits, field
order is construction order, and figures/CSV use fixed formats.
"""

from __future__ import annotations

import csv
import os

import numpy as np

__all__ = [
    "format_float",
    "emit_json",
    "write_csv",
    "render_figures",
]


def format_float(v):
    if v != v:  # NaN
        return "NaN"
    if v in (float("inf"), float("-inf")):
        return '"Infinity"' if v > 0 else '"-Infinity"'
    return f"{v:.17g}"


def _emit(obj, out, indent):
    pad = "  " * indent
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(format_float(float(obj)))
    elif isinstance(obj, complex):
        _emit({"re": obj.real, "im": obj.imag}, out, indent)
    elif isinstance(obj, str):
        out.append('"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"')
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out, indent)
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad + "  ")
            _emit(v, out, indent + 1)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "]")
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(pad + f'  "{k}": ')
            _emit(v, out, indent + 1)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def emit_json(obj, path):
    """Write a JSON report with fixed float formatting and field order."""
    out = []
    _emit(obj, out, 0)
    with open(path, "w") as fh:
        fh.write("".join(out) + "\n")


def write_csv(path, header, rows):
    """Delimited output with 17-significant-digit floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v
                             for v in row])


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------

def _matplotlib():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def render_figures(subcommand, results, outdir):
    """Render the standard figure set for one subcommand's results.

    Returns the list of files written.  Figures sit alongside the CSV
    artifacts; rendering failures are reported by exception (no silent
    skips).
    """
    plt = _matplotlib()
    written = []

    def save(fig, name):
        path = os.path.join(outdir, name)
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    if subcommand == "geodesic":
        rows = np.asarray(results["trajectory"])
        n2 = results["n2"]
        fig, axes = plt.subplots(1, 2, figsize=(9, 4))
        axes[0].plot(rows[:, 1], rows[:, 2], lw=1.0)
        axes[0].set_xlabel("x1")
        axes[0].set_ylabel("x2")
        axes[0].set_title("horizontal projection")
        axes[0].set_aspect("equal", adjustable="datalim")
        for j in range(rows.shape[1] - 1 - n2):
            axes[1].plot(rows[:, 0], rows[:, 1 + n2 + j], lw=1.0, label=f"u{j+1}")
        axes[1].set_xlabel("s")
        axes[1].set_ylabel("central coordinates")
        axes[1].legend(loc="best", fontsize=8)
        fig.suptitle("geodesic trajectory")
        save(fig, "geodesic.png")

    elif subcommand == "xray":
        vals = np.asarray(results["values"])
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(np.abs(vals), lw=0.8)
        ax.set_xlabel("sample index")
        ax.set_ylabel("|I f|")
        ax.set_title("geodesic-ray integrals over the sample batch")
        save(fig, "xray_values.png")

    elif subcommand == "spectrum":
        eigs = np.asarray(results["eigenvalues"])
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogy(np.arange(len(eigs)), np.maximum(eigs, 1e-300), "o-", ms=4)
        ax.set_xlabel("degree")
        ax.set_ylabel("eigenvalue")
        ax.set_title("averaged normal operator spectrum")
        save(fig, "spectrum.png")

    elif subcommand == "verify-slice":
        labels = [c["name"] for c in results["checks"]]
        vals = [max(c["value"], 1e-300) for c in results["checks"]]
        tols = [c["tolerance"] for c in results["checks"]]
        fig, ax = plt.subplots(figsize=(6, 4))
        xs = np.arange(len(labels))
        ax.bar(xs, vals, width=0.5, label="residual")
        ax.plot(xs, tols, "r_", ms=20, label="tolerance")
        ax.set_yscale("log")
        ax.set_xticks(xs)
        ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
        ax.legend()
        ax.set_title("slice-identity residuals")
        save(fig, "slice_residuals.png")

    elif subcommand == "reconstruct":
        errs = [c["recovery_error"] for c in results["cells"]]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.semilogy(np.arange(len(errs)), np.maximum(errs, 1e-300), "s-", ms=4)
        ax.set_xlabel("(lambda, mu) cell")
        ax.set_ylabel("relative recovery error")
        ax.set_title("Fourier-data recovery errors")
        save(fig, "recovery_errors.png")

    elif subcommand == "support-map":
        pts = np.asarray(results["points"])
        flags = np.asarray(results["reachable"], dtype=bool)
        fig, ax = plt.subplots(figsize=(7, 4))
        if pts.shape[1] == 1:
            ax.scatter(pts[flags, 0], np.zeros(flags.sum()), s=8, label="reachable")
            ax.scatter(pts[~flags, 0], np.zeros((~flags).sum()), s=8, marker="x",
                       label="unreachable")
            ax.set_xlabel("mu")
            ax.set_yticks([])
        else:
            r = np.linalg.norm(pts, axis=1)
            ax.scatter(r[flags], np.ones(flags.sum()), s=6, label="reachable")
            ax.scatter(r[~flags], np.zeros((~flags).sum()), s=6, marker="x",
                       label="unreachable")
            ax.set_xlabel("|mu|")
            ax.set_yticks([0, 1])
            ax.set_yticklabels(["out", "in"])
        ax.legend(loc="best", fontsize=8)
        ax.set_title("frequency coverage")
        save(fig, "coverage.png")

    return written
