"""Decay-rate fits, the normality summation test, and dimension reports.

Three consumers of the coefficient data:

* ``fit_decay`` regresses log|v| on log|s| and converts the exponent to a
  Frostman-dimension estimate (each unit of polynomial decay is worth two
  of dimension on the square).

* ``normality_sum`` runs the classical summability test for normality to
  base a: the measure's points are a.e. normal when
  sum_N N^-3 sum_{j,k<=N} |v(m(a^j - a^k))| converges for every m != 0.
  Every term is either evaluated exactly (stored window, or the certified
  lattice evaluator from ``pair_evaluator``) or replaced by its certified
  envelope, so the reported tail bound genuinely dominates what was not
  computed.  Frequencies a^j grow past every fixed-width integer; they are
  kept as Python ints throughout and only bounded, never wrapped.

* ``dimension_report`` juxtaposes the theoretical dimension exponent with
  whatever fits were measured.

The lattice evaluator is the one piece of real machinery here: the depth-2
coefficient at t is a sum over ~2 U rho lattice points t2 of
single(q, t2) * base_hat(t - t2), and at t ~ 1e15 the phase t2 x_q mod 1
is meaningless in double precision.  The slopes y_q = q x_q are therefore
carried as double-double pairs (split off a 40-digit value) and multiplied
by the integer k with an exact Dekker product, which keeps phases good to
~1e-18 out to |t| = 4e18.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import mpmath as mp
import numpy as np

from .bump import bump_transform, decay_bound
from .errors import ConfigError
from .layer import ScaleLayer, f_hat_single
from .params import derive_exponents, order_of
from .spectral import SpectralVector, _exp_tail_integral, layer_vector

__all__ = [
    "DecayFit", "fit_decay", "pair_evaluator", "NormalitySum", "normality_sum",
    "dimension_report", "EXACT_EVAL_LIMIT",
]

# Largest |t| the exact evaluator accepts: beyond this the integer lattice
# arithmetic would leave the int64-safe range (with the window margin).
EXACT_EVAL_LIMIT = 4 * 10**18


# ------------------------------------------------------------------------
# decay fits
# ------------------------------------------------------------------------


@dataclass
class DecayFit:
    """Least-squares power law |v(s)| ~ amplitude * |s|^exponent."""

    exponent: float
    stderr: float
    amplitude: float
    dimension: float       # max(0, -2 * exponent), the Frostman conversion
    n_used: int
    n_zero: int            # exact zeros excluded from the log fit
    s_lo: float
    s_hi: float
    residual_rms: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def fit_decay(s, values, s_range: tuple[float, float] | None = None,
              min_points: int = 100, min_decades: float = 2.0) -> DecayFit:
    """Fit the decay exponent of |values| over s in s_range.

    Exact zeros carry no log-scale information and are excluded (their
    count is reported); everything else enters an ordinary least-squares
    line in log-log coordinates.  Raises ConfigError when fewer than
    min_points nonzero coefficients remain or they span fewer than
    min_decades decades — a fit on less data says nothing about decay.
    """
    s = np.abs(np.asarray(s, dtype=float))
    v = np.abs(np.asarray(values))
    keep = s > 0
    if s_range is not None:
        keep &= (s >= s_range[0]) & (s <= s_range[1])
    n_zero = int(np.sum(keep & (v == 0)))
    keep &= v > 0
    n = int(keep.sum())
    if n < min_points:
        raise ConfigError(
            f"decay fit needs at least {min_points} nonzero coefficients, got {n}")
    lo, hi = float(s[keep].min()), float(s[keep].max())
    if hi / lo < 10.0 ** min_decades:
        raise ConfigError(
            f"decay fit needs {min_decades:g} decades of |s|, got {math.log10(hi / lo):.2f}")
    lx, lv = np.log(s[keep]), np.log(v[keep])
    (slope, intercept), cov = np.polyfit(lx, lv, 1, cov=True)
    resid = lv - (slope * lx + intercept)
    return DecayFit(
        exponent=float(slope),
        stderr=float(math.sqrt(max(cov[0, 0], 0.0))),
        amplitude=float(math.exp(intercept)),
        dimension=float(max(0.0, -2.0 * slope)),
        n_used=n,
        n_zero=n_zero,
        s_lo=lo,
        s_hi=hi,
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
    )


# ------------------------------------------------------------------------
# exact lattice evaluation at huge frequencies
# ------------------------------------------------------------------------

_SPLIT = 134217729.0  # 2^27 + 1, Dekker's splitter


def _two_prod(a: np.ndarray, b: np.ndarray):
    """Exact product: returns (p, err) with p + err == a * b exactly."""
    p = a * b
    ah = _SPLIT * a
    ah = ah - (ah - a)
    al = a - ah
    bh = _SPLIT * b
    bh = bh - (bh - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def pair_evaluator(top: ScaleLayer, base: ScaleLayer, window: int = 1_600_000,
                   prune_tol: float = 1e-9) -> Callable:
    """Certified evaluator t -> (value, error bound) for the depth-2 product.

    The coefficient at t is  sum_q sum_k single_top(q, qk) base_hat(t - qk)
    restricted to |t - qk| <= window; everything outside is charged to the
    returned bound through the base layer's validated envelope (the k = 0
    column reproduces base_hat(t) itself, and the q-sums at t2 = 0 and
    u = 0 add up to the unit masses automatically, so no term is special).
    base_hat is tabulated once on each base prime's multiples; the top
    factors use exact double-double phases and a per-prime linear
    interpolation of the bump transform, whose curvature error over the
    tiny per-prime spread of c psi2(q) t2 is far below the blanket charge.

    Points whose every top factor is dead (bump argument past the decay
    the prune bound certifies below prune_tol) return (0, bound) without
    enumeration, which is what makes |t| up to 4e18 affordable.
    """
    if top.theta.kind != "zero":
        raise ConfigError("exact evaluation requires the zero target")
    U = int(window)
    qs = top.primes.astype(np.int64)
    n_q = len(qs)
    g0_top = top.g_hat_0
    qf = qs.astype(float)
    p2_top = np.array([float(top.psi2(int(q))) for q in qs])
    c_top = top.c

    # double-double phase slopes y_q = q x_q from 40-digit arithmetic
    y_hi = np.empty(n_q)
    y_lo = np.empty(n_q)
    with mp.workdps(40):
        c_mp = mp.mpf(c_top)
        for i, q in enumerate(qs):
            y = int(q) * (top.psi1.mp_value(int(q))
                          - c_mp / 2 * top.psi2.mp_value(int(q)))
            hi = float(y)
            y_hi[i] = hi
            y_lo[i] = float(y - mp.mpf(hi))

    # base transform on each prime's multiples out to the window edge
    tabs = [(int(p), f_hat_single(base, int(p), np.arange(0, U // int(p) + 1) * int(p)))
            for p in base.primes]

    # envelope certificate for everything outside the window
    probe = layer_vector(base, dense_limit=64, sampled_s=np.array([], dtype=np.int64))
    amp1, T1 = probe.tail_amp, probe.tail_scale
    e_edge = math.exp(-math.sqrt(U / T1))
    rem_lat = amp1 * (2.0 * n_q / g0_top * _exp_tail_integral(U, T1) + 2.0 * e_edge)
    rem_poly = probe.tail_poly_bound(1e4 * T1) if probe.tail_poly_bound else 0.0
    rem_const = rem_lat + rem_poly + 1e-11  # interpolation + phase blanket
    # bound on one prime's window sum of |base_hat|, for the prune probe
    w1 = amp1 * (4.0 * T1 / qf + 3.0)
    qw = qf / g0_top

    def evaluate(t) -> tuple[complex, float]:
        t = int(t)
        if not 0 <= t <= EXACT_EVAL_LIMIT:
            raise ConfigError(f"evaluator certified only on [0, {EXACT_EVAL_LIMIT:.0e}]")
        xi_min = c_top * p2_top * max(t - U, 0)
        db = decay_bound(top.bump, xi_min)
        prune = float(np.sum(qw * db * w1))
        if prune < prune_tol:
            return 0.0 + 0.0j, prune + rem_const

        klo = -((U - t) // qs)
        khi = (t + U) // qs
        counts = (khi - klo + 1).astype(np.int64)
        total = int(counts.sum())
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        rep = np.repeat(np.arange(n_q), counts)
        ks = np.arange(total, dtype=np.int64) - starts[rep] + klo[rep]
        ksf = ks.astype(float)

        p, err = _two_prod(ksf, y_hi[rep])
        frac = (p % 1.0) + (err + ksf * y_lo[rep])
        phases = np.exp(-2j * np.pi * frac)
        b_lo = bump_transform(top.bump, c_top * p2_top * (klo * qs).astype(float))
        b_hi = bump_transform(top.bump, c_top * p2_top * (khi * qs).astype(float))
        span = np.maximum(counts - 1, 1).astype(float)
        w = (ks - klo[rep]) / span[rep]
        f2 = qw[rep] * phases * (b_lo[rep] * (1.0 - w) + b_hi[rep] * w)

        u = t - qs[rep] * ks
        au = np.abs(u)
        v1 = np.zeros(total, dtype=complex)
        for pme, tab in tabs:
            mask = au % pme == 0
            vv = tab[au[mask] // pme]
            v1[mask] += np.where(u[mask] < 0, np.conj(vv), vv)
        return complex(np.sum(f2 * v1)), rem_const

    evaluate.window = U          # introspection for reports
    evaluate.rem_const = rem_const
    return evaluate


# ------------------------------------------------------------------------
# normality summation
# ------------------------------------------------------------------------


@dataclass
class NormalitySum:
    """Partial sums of N^-3 sum_{j,k<=N} |v(m(a^j - a^k))| with certified tail."""

    a: int
    m: int
    N_max: int
    total: float               # exactly-computed part of the sum at N_max
    tail_bound: float          # certified bound on every term not computed
    certified_total: float
    tail_fraction: float
    partial: np.ndarray        # partial[N], N = 0..N_max (exact part)
    certified: np.ndarray      # partial + running tail bound; dominates partial
    n_dense: int               # terms answered from the stored window
    n_exact: int               # terms from the lattice evaluator
    n_env: int                 # terms charged to the envelope
    label: str = "normality"

    def as_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if not isinstance(v, np.ndarray)}
        return d


def _envelope_big(v: SpectralVector, t) -> float:
    """v's tail envelope at a possibly enormous Python int t."""
    if v.tail_amp == 0.0:
        return 0.0
    if t.bit_length() > 1020:
        return 0.0
    x = math.sqrt(float(t) / v.tail_scale)
    return 0.0 if x > 700.0 else v.tail_amp * math.exp(-x)


def normality_sum(v: SpectralVector, a: int, m: int, N_max: int = 10_000,
                  evaluator: Optional[Callable] = None,
                  cache: Optional[dict] = None) -> NormalitySum:
    """Run the base-a normality test against v's coefficients.

    Each difference frequency is answered by the cheapest honest route:
    the stored window (error = v's truncation certificate), the exact
    lattice evaluator when one is supplied, else the tail envelope charged
    wholesale to the certified bound.  Rows where even the smallest
    frequency m a^(N-1)(a-1) has left the evaluator's range collapse to a
    single envelope charge, so the cost is O(N_max) plus one evaluator
    call per distinct reachable frequency (`cache` is shared across m).
    """
    a, m = int(a), int(m)
    if a < 2:
        raise ConfigError("normality base a must be >= 2")
    if m == 0:
        raise ConfigError("m = 0 degenerates to the total mass; use m != 0")
    if N_max < 1:
        raise ConfigError("N_max must be positive")
    m_abs = abs(m)
    if cache is None:
        cache = {}

    diag = abs(v.at(0))
    trunc = v.trunc_err
    dense_limit = v.dense_limit
    partial = np.zeros(N_max + 1)
    certified = np.zeros(N_max + 1)
    inner_exact = 0.0
    inner_cert = 0.0
    tail_run = 0.0
    n_dense = n_exact = n_env = 0

    for N in range(1, N_max + 1):
        inner_exact += diag
        inner_cert += trunc
        t_min = m_abs * (a ** N - a ** (N - 1)) if N > 1 else 0
        if N > 1 and t_min > dense_limit and (
                evaluator is None or t_min > EXACT_EVAL_LIMIT):
            # whole new column is beyond exact reach: envelope is decreasing
            # in t, so (N-1) copies of its value at the smallest frequency
            inner_cert += 2.0 * (N - 1) * _envelope_big(v, t_min)
            n_env += N - 1
        else:
            aN = a ** N
            for j in range(1, N):
                t = m_abs * (aN - a ** j)
                if t <= dense_limit:
                    inner_exact += 2.0 * abs(v.at(int(t)))
                    inner_cert += 2.0 * trunc
                    n_dense += 1
                elif evaluator is not None and t <= EXACT_EVAL_LIMIT:
                    hit = cache.get(t)
                    if hit is None:
                        hit = evaluator(t)
                        cache[t] = hit
                    inner_exact += 2.0 * abs(hit[0])
                    inner_cert += 2.0 * hit[1]
                    n_exact += 1
                else:
                    inner_cert += 2.0 * _envelope_big(v, t)
                    n_env += 1
        w = 1.0 / float(N) ** 3
        partial[N] = partial[N - 1] + w * inner_exact
        tail_run += w * inner_cert
        certified[N] = partial[N] + tail_run

    total = float(partial[N_max])
    tail_bound = float(tail_run)
    return NormalitySum(
        a=a, m=m, N_max=N_max,
        total=total,
        tail_bound=tail_bound,
        certified_total=total + tail_bound,
        tail_fraction=tail_bound / total if total > 0 else math.inf,
        partial=partial,
        certified=certified,
        n_dense=n_dense, n_exact=n_exact, n_env=n_env,
    )


# ------------------------------------------------------------------------
# dimension report
# ------------------------------------------------------------------------


def dimension_report(gamma: float, tau1: float, tau2: float, epsilon: float,
                     fits: Sequence[DecayFit] = (), mode: str = "desk") -> dict:
    """Theory-side exponents next to measured fits, as one JSON-ready dict.

    An inadmissible exponent set propagates its AdmissibilityError verbatim:
    there is no theoretical dimension to report against.
    """
    es = derive_exponents(gamma, tau1, tau2, epsilon, strict=True)
    target = es.delta - es.epsilon
    report = {
        "gamma": es.gamma, "tau1": es.tau1, "tau2": es.tau2, "epsilon": es.epsilon,
        "beta": es.beta, "beta_eps": es.beta_eps,
        "alpha_theory": es.alpha,
        "delta": es.delta,
        "decay_target": target,
        "mode": mode,
        "fit": [f.as_dict() for f in fits],
        "margins": [
            {
                "exponent_margin": -f.exponent - target,
                "dimension_margin": f.dimension - es.alpha,
                "achieves_target": bool(-f.exponent >= target),
            }
            for f in fits
        ],
    }
    return report
