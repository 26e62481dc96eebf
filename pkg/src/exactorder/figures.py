"""Figure rendering for the report paths.

Every CLI report writes its delimited data first and then, unless figures
are disabled, one PNG per artifact through the functions here.  All
rendering happens on the Agg backend so headless runs behave exactly like
interactive ones; PNG bytes are not promised to be identical across
matplotlib versions (the CSV/JSON artifacts carry the reproducibility
contract, the figures are for eyes).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

_BAND_COLORS = {"zero": "#888888", "medium": "#1f77b4", "tail": "#d62728"}


def _save(fig, out_path: str) -> str:
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return str(out_path)


def coefficient_figure(s, values, out_path: str, bands=None, envelope=None,
                       title: str = "coefficients", power_line=None) -> str:
    """|v(s)| against s on log-log axes, colored by regime band.

    ``envelope`` is an optional (s, bound) pair drawn as a dashed line;
    ``power_line`` an optional (C, p) drawing C (1+s)^p for comparison.
    """
    s = np.asarray(s, dtype=float)
    v = np.abs(np.asarray(values))
    fig, ax = plt.subplots(figsize=(7.2, 4.4))
    pos = s > 0
    if bands is None:
        ax.plot(s[pos], np.maximum(v[pos], 1e-300), ".", ms=2.0, color="#1f77b4")
    else:
        bands = np.asarray(bands)
        for name, color in _BAND_COLORS.items():
            sel = pos & (bands == name)
            if sel.any():
                ax.plot(s[sel], np.maximum(v[sel], 1e-300), ".", ms=2.0,
                        color=color, label=name)
        ax.legend(loc="upper right", fontsize=8)
    if envelope is not None:
        es, eb = envelope
        ax.plot(es, eb, "--", color="black", lw=1.0, label="envelope")
    if power_line is not None:
        C, p = power_line
        ax.plot(s[pos], C * (1.0 + s[pos]) ** p, ":", color="black", lw=1.0)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("s")
    ax.set_ylabel("|v(s)|")
    ax.set_title(title)
    nz = v[pos & (v > 0)]
    if len(nz):
        ax.set_ylim(max(nz.min() * 0.3, 1e-18), max(nz.max() * 3.0, 1e-12))
    fig.tight_layout()
    return _save(fig, out_path)


def bump_figure(xs, values, xi, transform, bound, out_path: str) -> str:
    """The bump profile next to its transform and the certified decay bound."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.plot(xs, values, color="#1f77b4")
    ax1.set_xlabel("x")
    ax1.set_ylabel("phi(x)")
    ax1.set_title("profile")
    ax2.plot(xi, np.maximum(np.abs(transform), 1e-300), color="#1f77b4", lw=0.9,
             label="|phi_hat|")
    ax2.plot(xi, np.maximum(bound, 1e-300), "--", color="black", lw=1.0, label="bound")
    ax2.set_xscale("log")
    ax2.set_yscale("log")
    ax2.set_xlabel("xi")
    ax2.set_title("transform vs certified bound")
    ax2.legend(fontsize=8)
    ax2.set_ylim(1e-40, 3.0)
    fig.tight_layout()
    return _save(fig, out_path)


def stability_figure(M_values, dev_sup, sup_b, sup_c, required_slope,
                     out_path: str) -> str:
    """Envelope-deviation trend across scales with the required slope."""
    M = np.asarray(M_values, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(M, dev_sup, "o-", label="sup deviation (a)")
    ax.plot(M, sup_b, "s-", label="sup band ratio (b)")
    ax.plot(M, sup_c, "^-", label="sup tail ratio (c)")
    ref = dev_sup[0] * (M / M[0]) ** required_slope
    ax.plot(M, ref, "--", color="black", lw=1.0,
            label=f"required slope {required_slope:.3f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("M_j")
    ax.set_title("stability sups across scales")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_path)


def window_figure(xi, values, fit, out_path: str) -> str:
    """Windowed transform magnitude with the fitted power law."""
    xi = np.asarray(xi, dtype=float)
    v = np.abs(np.asarray(values))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(xi, np.maximum(v, 1e-300), ".", ms=3.0, color="#1f77b4")
    if fit is not None:
        ax.plot(xi, fit.C2 * xi ** fit.slope, "--", color="black", lw=1.0,
                label=f"fit slope {fit.slope:.4f} (target {fit.target_exponent:.4f})")
        ax.legend(fontsize=8)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("xi")
    ax.set_ylabel("|windowed transform|")
    ax.set_title("real-frequency decay")
    fig.tight_layout()
    return _save(fig, out_path)


def normality_figure(results, out_path: str) -> str:
    """Partial and certified normality sums against N, one curve pair per m."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for ns in results:
        n = np.arange(ns.N_max + 1)
        (line,) = ax.plot(n[1:], ns.partial[1:], lw=1.1, label=f"m={ns.m}")
        ax.plot(n[1:], ns.certified[1:], "--", lw=0.8, color=line.get_color())
    ax.set_xscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("partial sum (solid) / certified (dashed)")
    ax.set_title("normality sums")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_path)


def lift_figure(scan: dict, out_path: str) -> str:
    """Lift discrepancy against resolution with the quadratic reference."""
    N = np.asarray(scan["N"], dtype=float)
    d = np.asarray(scan["discrepancy"], dtype=float)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(N, d, "o-", label="max discrepancy")
    ax.plot(N, d[0] * (N / N[0]) ** -2.0, "--", color="black", lw=1.0, label="N^-2")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_title("periodization lift check")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_path)
