"""Line-to-torus lifting and windowing back to the line.

Two bridges connect the compactly supported construction to the circle
where the coefficient machinery lives:

* lifting — for f supported (mod 1) in an interval, the Fourier
  coefficients of the periodization f^P equal the line transform of f at
  integer frequencies.  ``lift_check`` evaluates both sides by independent
  quadratures (different grids, different summation paths) and reports the
  largest disagreement, which shrinks at the trapezoid rate O(N^-2).

* windowing — multiplying the periodized measure by a smooth window w
  supported in [0,1] gives a compactly supported measure on the line whose
  transform at real xi is the lattice sum  sum_s w_hat(xi - s) mu_hat(s).
  ``window_transform`` evaluates it with a certified truncation: the
  window's sinc-product decay bounds everything outside |xi - s| <= R.
  The polynomial decay of mu_hat survives the windowing, which
  ``verify_real_decay`` quantifies by fitting C2 (1+|xi|)^p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._util import GridFunction  # noqa: F401  (re-exported: the lifted objects live on grids)
from .bump import BumpSpec, bump_transform, decay_bound, decay_bound_tail_integral
from .errors import ConfigError, PrecisionError, ResolutionError
from .spectral import SpectralVector

__all__ = [
    "GridFunction", "box_profile", "lift_check", "lift_scan", "window_hat",
    "window_transform", "window_split", "windowed_mass", "WindowDecayFit",
    "verify_real_decay",
]


# ------------------------------------------------------------------------
# lifting
# ------------------------------------------------------------------------


def box_profile(center: float = 23 / 64, halfwidth: float = 1 / 32) -> Callable:
    """Indicator of [center - halfwidth, center + halfwidth] with midpoint
    values at the jumps, normalized to mass 1.

    The midpoint convention makes the trapezoid rule see the jump exactly
    when a grid node lands on it; with dyadic center and halfwidth every
    power-of-two grid does, so the quadrature error is pure O(N^-2) — the
    cleanest probe for the lifting identity.
    """
    if halfwidth <= 0:
        raise ConfigError("halfwidth must be positive")
    inner = 1.0 / (2.0 * halfwidth)

    def f(x):
        t = np.abs(np.asarray(x, dtype=float) - center)
        return np.where(t < halfwidth, inner, np.where(t == halfwidth, inner / 2.0, 0.0))

    return f


def lift_check(f: Callable, s_set: Sequence[int], N: int = 1 << 20,
               support: tuple[float, float] = (0.0, 1.0),
               return_details: bool = False):
    """Max over s_set of |line transform - torus coefficient| of f.

    The line route integrates e(-2 pi i s x) f(x) by trapezoid over
    ``support`` with N/4 intervals; the torus route periodizes f onto N
    points of [0, 1) (summing the integer translates that reach the
    support, so intervals like [0.9, 1.1) wrap correctly) and takes the
    mean of e(-2 pi i s x) f^P(x) — the rectangle rule, which is the
    trapezoid rule on a periodic function.  The two routes share no grid:
    their spacings differ and the support grid is not a subgrid of the
    torus grid unless the support width is exactly 1/4.
    """
    if N < (1 << 10):
        raise ResolutionError("lift_check needs N >= 2^10 quadrature points",
                              required=1 << 10)
    a, b = float(support[0]), float(support[1])
    if not b > a:
        raise ConfigError("empty support interval")

    n_line = N // 4
    xs = np.linspace(a, b, n_line + 1)
    fl = np.asarray(f(xs), dtype=float)
    hl = (b - a) / n_line

    xt = np.arange(N) / N
    ft = np.zeros(N)
    for n in range(math.floor(a), math.ceil(b) + 1):
        ft += np.asarray(f(xt + n), dtype=float)

    out = []
    for s in s_set:
        line = np.trapezoid(fl * np.exp(-2j * np.pi * s * xs), dx=hl)
        torus = np.mean(ft * np.exp(-2j * np.pi * s * xt))
        out.append(abs(line - torus))
    ds = np.array(out)
    if return_details:
        return float(ds.max()), {int(s): float(d) for s, d in zip(s_set, ds)}
    return float(ds.max())


def lift_scan(f: Callable, s_set: Sequence[int], N_values: Sequence[int],
              support: tuple[float, float] = (0.0, 1.0)) -> dict:
    """lift_check across resolutions, with the ratio between consecutive N
    (trapezoid order predicts ~4x per halving)."""
    discs = [lift_check(f, s_set, N=n, support=support) for n in N_values]
    ratios = [d2 / d1 for d1, d2 in zip(discs, discs[1:])]
    return {"N": [int(n) for n in N_values], "discrepancy": discs, "ratios": ratios}


# ------------------------------------------------------------------------
# windowing
# ------------------------------------------------------------------------


def window_hat(w: BumpSpec, u) -> np.ndarray:
    """Transform of the window translated to live on [0, 1].

    The base bump sits on [-1/2, 1/2]; shifting its center to 1/2
    multiplies the transform by e(-u/2)."""
    u = np.asarray(u, dtype=float)
    return np.exp(-1j * np.pi * u) * bump_transform(w, u)


def _mu_lookup(mu, ss: np.ndarray):
    """Values of mu at signed integers ss plus a mask of unknown entries.

    Callables are trusted on all of Z.  SpectralVectors answer from the
    dense window, then the evaluator; coefficients beyond both are flagged
    so the caller can charge their envelope to the error budget.
    """
    if not isinstance(mu, SpectralVector):
        return np.asarray(mu(ss), dtype=complex), np.zeros(len(ss), dtype=bool)
    vals = np.zeros(len(ss), dtype=complex)
    a = np.abs(ss)
    known = a <= mu.dense_limit
    vals[known] = mu.dense[a[known]]
    rest = ~known
    if rest.any():
        if mu.evaluator is not None:
            vals[rest] = np.asarray(mu.evaluator(a[rest]), dtype=complex)
            known = known | rest
        # else: left at 0 and reported unknown
    vals = np.where(ss < 0, np.conj(vals), vals)
    return vals, ~known


def window_transform(mu, w: BumpSpec, xi_samples, R: int = 256,
                     mu_sup: float | None = None, cert_tol: float = 1e-6):
    """sum_s w_hat(xi - s) mu(s) over |s - floor(xi)| <= R, certified.

    Returns (values, certificates): per xi, the truncated lattice sum and a
    bound on everything left out — the window decay integrated over
    |u| > R - 1 times sup|mu|, plus the envelope of any in-window
    coefficients the vector could not produce.  Raises PrecisionError when
    a certificate exceeds cert_tol (decay too shallow or window too small
    for the requested tolerance).
    """
    xi_samples = np.atleast_1d(np.asarray(xi_samples, dtype=float))
    if R < 8:
        raise ConfigError("window radius R must be at least 8")
    if mu_sup is None:
        if isinstance(mu, SpectralVector):
            stored_max = float(np.abs(mu.stored()[1]).max())
            mu_sup = max(stored_max, mu.tail_amp)
        else:
            mu_sup = 1.0
    # everything at |u| > R-1: endpoint value + integral comparison, both signs
    out_of_window = 2.0 * mu_sup * (decay_bound(w, R - 1)
                                    + decay_bound_tail_integral(w, R - 1))

    values = np.zeros(len(xi_samples), dtype=complex)
    certs = np.zeros(len(xi_samples))
    for i, xi in enumerate(xi_samples):
        s0 = math.floor(xi)
        ss = np.arange(s0 - R, s0 + R + 1, dtype=np.int64)
        mv, unknown = _mu_lookup(mu, ss)
        wv = window_hat(w, xi - ss)
        values[i] = np.sum(wv * mv)
        cert = out_of_window
        if unknown.any() and isinstance(mu, SpectralVector):
            cert += float(np.sum(np.abs(wv[unknown]) * mu.envelope(ss[unknown])))
        if isinstance(mu, SpectralVector):
            cert += mu.trunc_err * float(np.abs(wv).sum())
        certs[i] = cert
    if certs.max() > cert_tol:
        raise PrecisionError(
            f"window certification failed: worst bound {certs.max():.3g} > {cert_tol:g}")
    return values, certs


def window_split(mu, w: BumpSpec, xi: float, S_max: int = 130_000):
    """(S1, S2): the lattice sum split at |s - xi| <= |xi|/2, full window.

    S1 carries the polynomial decay of mu at |s| comparable to xi; S2 is
    controlled purely by the window's superpolynomial decay at offsets
    >= |xi|/2 and is the piece that must fall faster than any power.
    """
    ss = np.arange(-S_max, S_max + 1, dtype=np.int64)
    mv, unknown = _mu_lookup(mu, ss)
    if unknown.any():
        raise ConfigError("window_split needs coefficients on the full range")
    vals = window_hat(w, xi - ss) * mv
    near = np.abs(ss - xi) <= abs(xi) / 2.0
    return complex(vals[near].sum()), complex(vals[~near].sum())


def windowed_mass(mu, w: BumpSpec, R: int = 256) -> complex:
    """The windowed measure's total mass, i.e. the transform at xi = 0.

    Nonvanishing is a hypothesis the windowing lemma needs but nothing in
    the construction guarantees; callers check the returned value.
    """
    vals, _ = window_transform(mu, w, np.array([0.0]), R=R)
    return complex(vals[0])


@dataclass
class WindowDecayFit:
    """Power-law fit of windowed-transform decay against the target rate."""

    slope: float
    stderr: float
    C2: float
    n_used: int
    n_zero: int
    target_exponent: float
    flag: bool          # True when the fit is shallower than target by > 0.05
    residual_rms: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def verify_real_decay(xi_samples, values, delta: float, epsilon: float) -> WindowDecayFit:
    """Fit |values| ~ C2 xi^slope and compare against -(delta - epsilon).

    The windowing argument promises the line transform keeps the lattice
    decay rate; a fitted exponent shallower than -delta+epsilon by more
    than 0.05 raises the flag (and flags nondecaying input outright).
    """
    xi = np.asarray(xi_samples, dtype=float)
    v = np.abs(np.asarray(values))
    if xi.min() <= 0:
        raise ConfigError("xi samples must be positive for a log-log fit")
    if xi.max() / xi.min() < 1e3:
        raise ConfigError("decay fit needs xi spanning at least three decades")
    keep = v > 0
    n_zero = int((~keep).sum())
    if keep.sum() < 8:
        raise ConfigError("too few nonzero windowed values to fit")
    lx, lv = np.log(xi[keep]), np.log(v[keep])
    (slope, intercept), cov = np.polyfit(lx, lv, 1, cov=True)
    resid = lv - (slope * lx + intercept)
    target = -(delta - epsilon)
    return WindowDecayFit(
        slope=float(slope),
        stderr=float(math.sqrt(max(cov[0, 0], 0.0))),
        C2=float(math.exp(intercept)),
        n_used=int(keep.sum()),
        n_zero=n_zero,
        target_exponent=target,
        flag=bool(slope > target + 0.05),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
    )
