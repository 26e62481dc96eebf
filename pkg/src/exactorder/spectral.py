"""Spectral vectors, certified truncated convolution, and the product measure.

The measure at depth k is a product of layer densities, so on the Fourier
side it is an iterated convolution

    mu_hat^(k) = mu_hat^(k-1) * f_hat_{M_k},

with scales M_{j+1} = ceil(M_j^{beta_eps}).  Everything here works with a
window of exactly stored coefficients plus a certified tail descriptor; the
convolution truncates the lattice sum and accounts for every discarded term
with an explicit analytic budget (integral comparison for the exponential
envelopes, sinc-product bound beyond the envelope's sampled validity range).

The stability machinery at the bottom evaluates the one-step deviation
|F*G - G| with F and G pinned exactly at their hypothesis envelopes: the
power-band part of the envelope convolution is summed term by term in
chunks (no approximation) and the exponential part via Euler-Maclaurin,
validated against brute-force summation at the smallest scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._util import log_spaced_ints, ordered_chunk_map
from .bump import decay_bound, decay_bound_tail_integral
from .errors import AdmissibilityError, BudgetError, ConfigError, StrictModeError
from .layer import ScaleLayer, f_hat, f_hat_single
from .params import order_of

_EMPTY_I = np.zeros(0, dtype=np.int64)
_EMPTY_C = np.zeros(0, dtype=complex)


# ------------------------------------------------------------------------
# spectral vectors
# ------------------------------------------------------------------------


@dataclass
class SpectralVector:
    """Fourier coefficients stored on [0, W] (hermitian: v(-s) = conj v(s)).

    ``dense`` holds v(s) for s = 0..len(dense)-1; ``sampled_s``/``sampled_v``
    hold a log-dense selection beyond the dense window.  The tail descriptor
    asserts |v(s)| <= tail_amp * exp(-sqrt(|s|/tail_scale)) for |s| beyond
    the window.  For vectors built from finite sinc-product bumps the
    exponential form is an envelope validated by dense log-sampling over the
    range where it is consumed (plus the boundary handoff); the far
    polynomial regime is certified separately through ``tail_poly_bound``.

    ``evaluator``, when present, maps int64 arrays (or scalars) of |s| beyond
    the window to exact coefficients; layer-backed vectors carry one.
    """

    dense: np.ndarray
    tail_amp: float
    tail_scale: float
    label: str = ""
    scales: tuple = ()
    trunc_err: float = 0.0
    sampled_s: np.ndarray = field(default_factory=lambda: _EMPTY_I.copy())
    sampled_v: np.ndarray = field(default_factory=lambda: _EMPTY_C.copy())
    evaluator: Optional[Callable] = field(default=None, repr=False, compare=False)
    tail_poly_bound: Optional[Callable] = field(default=None, repr=False, compare=False)
    bound_report: Optional["BoundReport"] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.dense = np.asarray(self.dense, dtype=complex)
        self.sampled_s = np.asarray(self.sampled_s, dtype=np.int64)
        self.sampled_v = np.asarray(self.sampled_v, dtype=complex)
        if len(self.sampled_s) and self.sampled_s[0] <= self.dense_limit:
            raise ConfigError("sampled coefficients must lie beyond the dense window")

    @property
    def dense_limit(self) -> int:
        return len(self.dense) - 1

    @property
    def window(self) -> int:
        return int(self.sampled_s[-1]) if len(self.sampled_s) else self.dense_limit

    def at(self, s: int) -> complex:
        """v(s) for signed integer s; KeyError when s is not stored."""
        a = abs(int(s))
        if a <= self.dense_limit:
            v = self.dense[a]
        else:
            i = int(np.searchsorted(self.sampled_s, a))
            if i < len(self.sampled_s) and self.sampled_s[i] == a:
                v = self.sampled_v[i]
            elif self.evaluator is not None:
                v = complex(self.evaluator(a))
            else:
                raise KeyError(f"coefficient s={s} not stored (window {self.window})")
        return complex(np.conj(v)) if s < 0 else complex(v)

    def stored(self) -> tuple[np.ndarray, np.ndarray]:
        """All stored nonnegative s and their values, ascending."""
        s = np.concatenate([np.arange(len(self.dense), dtype=np.int64), self.sampled_s])
        v = np.concatenate([self.dense, self.sampled_v])
        return s, v

    def envelope(self, s) -> np.ndarray:
        a = np.abs(np.asarray(s, dtype=float))
        return self.tail_amp * np.exp(-np.sqrt(a / self.tail_scale))

    def boundary_consistent(self, slack: float = 0.5) -> bool:
        """|v(W)| <= envelope(W) * (1 + slack): the descriptor handoff check."""
        w = self.window
        return abs(self.at(w)) <= float(self.envelope(w)) * (1.0 + slack)


def point_mass() -> SpectralVector:
    """The convolution unit: v(0) = 1 and nothing else stored or asserted."""
    return SpectralVector(dense=np.array([1.0 + 0j]), tail_amp=0.0, tail_scale=1.0,
                          label="point")


# ------------------------------------------------------------------------
# scale schedule
# ------------------------------------------------------------------------


@dataclass
class ScaleSchedule:
    """M_1 and the exponent beta_eps fix M_{j+1} = ceil(M_j^{beta_eps})."""

    M1: int
    beta_eps: float
    depth: int
    delta: float
    mode: str = "desk"

    def __post_init__(self):
        if self.M1 < 2 or self.depth < 1:
            raise ConfigError("schedule needs M1 >= 2 and depth >= 1")
        if self.beta_eps <= 1:
            raise ConfigError("beta_eps must exceed 1 for an increasing schedule")
        ms = [self.M1]
        for _ in range(self.depth - 1):
            ms.append(math.ceil(ms[-1] ** self.beta_eps))
        self.scales = tuple(ms)
        if any(b <= a for a, b in zip(ms, ms[1:])):
            raise ConfigError("schedule is not strictly increasing")
        self.mass_sum = float(sum(float(m) ** (-self.delta) for m in ms))
        if self.mode == "paper-strict" and not (self.mass_sum < 0.01):
            raise StrictModeError(
                f"sum of M_j^-delta = {self.mass_sum:.5f} >= 1/100; "
                f"paper-strict needs a far larger M1")

    def M(self, j: int) -> int:
        """M_j with the M_0 = 0 convention."""
        return 0 if j == 0 else self.scales[j - 1]

    @property
    def mass_interval(self) -> tuple[float, float]:
        """(1 - sum M_j^-delta, 1 + sum M_j^-delta), the mass bracket."""
        return (1.0 - self.mass_sum, 1.0 + self.mass_sum)


# ------------------------------------------------------------------------
# lazy coefficient providers (the F role of a convolution step)
# ------------------------------------------------------------------------


@dataclass
class CoeffProvider:
    """Sparse-support coefficient source: nonzero only at 0 and at multiples
    of ``primes``.  ``value`` evaluates positive t (int64 array) -> complex;
    negative t follow by conjugation.  ``medium_max`` bounds the modulus of
    each prime's additive contribution to value(t) at every multiple, so
    |value(t)| <= (number of support primes dividing t) * medium_max — the
    form the truncation budget integrates prime by prime.  ``single``, when
    set, maps (q, multiples-of-q array) to the q-term of the coefficient —
    exact wherever q is t's only support divisor, and cheaper than ``value``
    because it skips the divisibility scan."""

    primes: np.ndarray
    f0: complex
    value: Callable[[np.ndarray], np.ndarray]
    medium_max: float  # bounds EACH prime's additive share of value(t), every t
    label: str = ""
    single: Optional[Callable] = None

    @property
    def rho(self) -> float:
        """sum 1/q over the support primes (multiple-counting density)."""
        return float(np.sum(1.0 / self.primes.astype(float))) if len(self.primes) else 0.0


def layer_provider(layer: ScaleLayer) -> CoeffProvider:
    """f_hat of a layer as a lazy provider.

    f_hat(t) = sum over layer primes q | t of (q/g_hat_0) e(t x_q)
    phi_hat(c psi2(q) t), so each prime contributes at most 2M/g_hat_0 in
    modulus at each of its multiples — the exact per-prime bound the
    truncation budget needs.
    """
    return CoeffProvider(
        primes=layer.primes.astype(np.int64),
        f0=1.0 + 0j,
        value=lambda ts: np.atleast_1d(f_hat(layer, ts)),
        medium_max=2.0 * layer.M / layer.g_hat_0,
        label=f"f_hat[M={layer.M}]",
        single=lambda q, ts: f_hat_single(layer, q, ts),
    )


def identity_provider() -> CoeffProvider:
    """F = indicator of {0}: convolving with it returns G unchanged."""
    return CoeffProvider(primes=_EMPTY_I.copy(), f0=1.0 + 0j,
                         value=lambda ts: np.zeros(len(ts), complex),
                         medium_max=0.0, label="identity")


def stencil_provider(u: int, a: complex) -> CoeffProvider:
    """F(0)=1, F(+-u)=a, zero elsewhere (a three-term test stencil)."""
    if u < 1:
        raise ConfigError("stencil offset must be a positive integer")

    def val(ts: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(ts) == u, complex(a), 0.0 + 0j)

    return CoeffProvider(primes=np.array([u], dtype=np.int64), f0=1.0 + 0j,
                         value=val, medium_max=abs(a), label=f"stencil(u={u})")


# ------------------------------------------------------------------------
# layer vectors with a validated tail descriptor
# ------------------------------------------------------------------------


def _exp_tail_integral(R: float, T: float) -> float:
    """integral_R^inf exp(-sqrt(v/T)) dv = 2T (sqrt(R/T)+1) exp(-sqrt(R/T))."""
    x = math.sqrt(max(R, 0.0) / T)
    return 2.0 * T * (x + 1.0) * math.exp(-x) if x < 700 else 0.0


def layer_vector(layer: ScaleLayer, dense_limit: int, sampled_s: np.ndarray | None = None,
                 amp_span: float = 1e4, threads: int = 1) -> SpectralVector:
    """Materialize f_hat on [0, dense_limit] with a validated tail descriptor.

    The descriptor scale is M^tau2; its amplitude is twice the largest ratio
    |f_hat(s)|/exp(-sqrt(s/M^tau2)) over a dense log sample of
    [medium cutoff, amp_span * M^tau2] including per-prime multiples (where
    the ratio peaks).  Beyond amp_span * M^tau2 the sinc-product bound takes
    over: tail_poly_bound(S) certifies the total coefficient mass past S in
    that regime analytically.
    """
    tau2 = order_of(layer.psi2)
    T = float(layer.M) ** tau2
    dense = f_hat(layer, np.arange(dense_limit + 1, dtype=np.int64), threads=threads)

    hi = amp_span * T
    probes = set(log_spaced_ints(layer.medium_cutoff, hi, 400).tolist())
    stride = max(1, len(layer.primes) // 40)
    for q in layer.primes[::stride]:
        for targ in np.geomspace(max(layer.medium_cutoff, float(q)), hi, 60):
            probes.add(int(q) * int(math.ceil(targ / q)))
    probe = np.array(sorted(p for p in probes if p > 0), dtype=np.int64)
    ratios = np.abs(f_hat(layer, probe, threads=threads)) / np.exp(-np.sqrt(probe / T))
    amp = 2.0 * max(float(ratios.max()), 1e-12)

    sam_s = np.asarray(sampled_s, dtype=np.int64) if sampled_s is not None else _EMPTY_I.copy()
    sam_s = np.unique(sam_s[sam_s > dense_limit])
    sam_v = f_hat(layer, sam_s, threads=threads) if len(sam_s) else _EMPTY_C.copy()

    c, g0 = layer.c, layer.g_hat_0
    qp = [(float(q), float(layer.psi2(int(q)))) for q in layer.primes]

    def poly_tail(S: float) -> float:
        """Certified bound on sum over |u| >= S of |f_hat(u)| (both signs):
        per prime, the first multiple at the sinc-product bound plus the
        integral comparison for the rest."""
        tot = 0.0
        for qf, p in qp:
            xi0 = c * p * max(S - qf, 1.0)
            tot += (qf / g0) * float(decay_bound(layer.bump, xi0))
            tot += (1.0 / g0) * (1.0 / (c * p)) * decay_bound_tail_integral(layer.bump, xi0)
        return 2.0 * tot

    return SpectralVector(
        dense=dense, tail_amp=amp, tail_scale=T,
        label=f"f_hat[M={layer.M}]", scales=(layer.M,), trunc_err=0.0,
        sampled_s=sam_s, sampled_v=sam_v,
        evaluator=lambda s: f_hat(layer, s),
        tail_poly_bound=poly_tail,
    )


# ------------------------------------------------------------------------
# certified truncated convolution
# ------------------------------------------------------------------------


def _solve_cut(target: float, T: float) -> float:
    """Smallest R with 2T(sqrt(R/T)+1)exp(-sqrt(R/T)) <= target."""
    if target <= 0:
        raise ValueError("target must be positive")
    x = 1.0
    for _ in range(80):
        x = max(math.log(max(2.0 * T * (x + 1.0) / target, 1.0 + 1e-12)), 1e-9)
    return T * x * x


def convolve(F: CoeffProvider, G: SpectralVector, W_out: int, tol: float = 1e-6,
             sampled_s: np.ndarray | None = None, threads: int = 1,
             max_cut: int = 30_000_000, tail: tuple[float, float] | None = None,
             label: str = "") -> SpectralVector:
    """(F*G)(s) on s in [0, W_out] (dense) plus optional sampled points.

    The lattice sum keeps t = 0 and multiples of F's primes within
    |s - t| <= U, with the cut chosen so the analytically bounded discarded
    mass stays below tol per coefficient:

        discarded <= 2 rho_F m_F [ amp_G I(cut) + PolyTail(S_exp) ],

    where I is the exponential-envelope tail integral, m_F the provider's
    per-prime amplitude bound (each lattice point is charged once per
    divisor, so the bound needs no divisor-count case split), and PolyTail
    the sinc-product bound taking over where the exponential descriptor's
    sampled validation ends.  G's own stored error propagates through the
    kept |F| mass.  Raises BudgetError naming the required cut when it
    exceeds max_cut.

    The output tail descriptor is ``tail`` when given (the measure pipeline
    passes the inductive one); otherwise the conservative shift-compounded
    version of G's descriptor.
    """
    if W_out < 0 or tol <= 0:
        raise ConfigError("convolve needs W_out >= 0 and tol > 0")
    D = W_out
    rho = F.rho
    ampG, TG = G.tail_amp, G.tail_scale

    # --- choose the cut from the error budget -------------------------------
    if len(F.primes):
        denom = 2.0 * rho * max(F.medium_max, 1e-300) * max(ampG, 1e-300)
        R = _solve_cut(0.45 * tol / denom, TG)
        T_cut = int(math.ceil(R)) + D
        if T_cut > max_cut:
            raise BudgetError(
                f"tol={tol:g} needs t-window {T_cut} (> max_cut={max_cut}); "
                f"coarsen tol or lower the depth", required=T_cut)
        rem = denom * _exp_tail_integral(float(T_cut - D), TG)
        S_exp = 1e4 * TG  # sqrt ratio 100: envelope integral beyond is ~e^-100
        supF = F.medium_max * len(F.primes)  # >= |F(t)| whatever t's divisor count
        if G.tail_poly_bound is not None:
            rem += 2.0 * supF * G.tail_poly_bound(S_exp)
        elif ampG > 0:
            rem += 2.0 * supF * ampG * _exp_tail_integral(S_exp, TG)
    else:
        T_cut, rem = 0, 0.0

    U = T_cut + D  # G must be stored on [-U, U] for the dense pass

    if G.dense_limit < U:
        if G.evaluator is None:
            raise BudgetError(
                f"G stores {G.dense_limit} dense coefficients but the cut needs {U}",
                required=U)
        if U > 8_000_000:
            raise BudgetError(f"extending G to {U} exceeds the memory budget", required=U)
        ext_s = np.arange(G.dense_limit + 1, U + 1, dtype=np.int64)
        G = SpectralVector(dense=np.concatenate([G.dense, np.asarray(G.evaluator(ext_s))]),
                           tail_amp=G.tail_amp, tail_scale=G.tail_scale, label=G.label,
                           scales=G.scales, trunc_err=G.trunc_err, evaluator=G.evaluator,
                           tail_poly_bound=G.tail_poly_bound)

    sam_s = np.asarray(sampled_s, dtype=np.int64) if sampled_s is not None else _EMPTY_I.copy()
    sam_s = np.unique(sam_s[sam_s > D])
    s_hi = int(sam_s[-1]) if len(sam_s) else D

    # --- enumerate F's support once: multiples of its primes up to s_hi + U --
    t_all, v_all = _EMPTY_I.copy(), _EMPTY_C.copy()
    if len(F.primes):
        tmax = s_hi + U
        parts = [(int(q), np.arange(int(q), tmax + 1, int(q), dtype=np.int64))
                 for q in F.primes]
        parts = [(q, ts) for q, ts in parts if len(ts)]
        if parts and F.single is not None and (len(F.primes) < 2
                                               or int(F.primes[0]) ** 2 > tmax):
            # per-prime supports are disjoint here: evaluate each term directly
            t_cat = np.concatenate([ts for _, ts in parts])
            v_cat = np.concatenate([np.asarray(F.single(q, ts), dtype=complex)
                                    for q, ts in parts])
            order = np.argsort(t_cat, kind="stable")
            t_all, v_all = t_cat[order], v_cat[order]
        elif parts:
            # overlapping supports (or no fast path): deduplicate, then the
            # full evaluator charges each lattice point exactly once
            t_all = np.unique(np.concatenate([ts for _, ts in parts]))
            v_all = np.asarray(F.value(t_all), dtype=complex)
    mass_F = abs(F.f0) + 2.0 * float(np.abs(v_all).sum())  # for error propagation

    # --- dense pass: out[s] = sum_t F(t) G(s-t), s = 0..D, ascending t ------
    Gd = G.dense
    off = G.dense_limit  # >= U after extension
    G_ext = np.concatenate([np.conj(Gd[1:][::-1]), Gd])  # index u+off holds G(u)
    out = F.f0 * G_ext[off : off + D + 1].copy()
    i_cut = int(np.searchsorted(t_all, T_cut, side="right"))
    for i in range(i_cut):
        t = int(t_all[i])
        v = v_all[i]
        out += v * G_ext[off - t : off - t + D + 1]
        out += np.conj(v) * G_ext[off + t : off + t + D + 1]

    # --- sampled pass: the same sum with the window centered at each s ------
    if len(sam_s):
        if G.evaluator is None:
            raise BudgetError("sampled outputs beyond the dense window need a lazily "
                              "evaluable G", required=int(sam_s[-1]))
        t0_vals = np.atleast_1d(np.asarray(G.evaluator(sam_s), dtype=complex))

        def eval_points(chunk) -> list[complex]:
            vals = []
            for s in chunk:
                s = int(s)
                a = int(np.searchsorted(t_all, s - U, side="left"))
                b = int(np.searchsorted(t_all, s + U, side="right"))
                ts = t_all[a:b]
                acc = 0.0 + 0j
                if len(ts):
                    acc = complex(np.sum(v_all[a:b] * G_ext[s - ts + off]))
                # negative t = -|t| reach |s - t| = s + |t| <= U while |t| <= U - s
                b2 = int(np.searchsorted(t_all, U - s, side="right"))
                if b2 > 0:
                    tn = t_all[:b2]
                    acc += complex(np.sum(np.conj(v_all[:b2]) * G_ext[s + tn + off]))
                vals.append(acc)
            return vals

        idx = np.arange(len(sam_s))
        if threads > 1 and len(sam_s) > 8:
            inner = np.array(ordered_chunk_map(lambda ch: eval_points(sam_s[ch]), idx,
                                               threads), dtype=complex)
        else:
            inner = np.array(eval_points(sam_s), dtype=complex)
        sam_v = F.f0 * t0_vals + inner
    else:
        sam_v = _EMPTY_C.copy()

    if tail is None:
        shift = math.exp(math.sqrt(T_cut / TG)) if (ampG > 0 and TG > 0) else 1.0
        tail = (ampG * mass_F * shift, TG)
    return SpectralVector(
        dense=out, tail_amp=tail[0], tail_scale=tail[1],
        label=label or f"({F.label})*({G.label})", scales=tuple(G.scales),
        trunc_err=rem + G.trunc_err * mass_F,
        sampled_s=sam_s, sampled_v=sam_v,
    )


# ------------------------------------------------------------------------
# product measure and inductive bound checks
# ------------------------------------------------------------------------


def default_sample_grid(layer: ScaleLayer, lo: int, hi: int, n_log: int = 600,
                        n_per_prime: int = 12) -> np.ndarray:
    """Log-spaced integers in (lo, hi] mixed with multiples of layer primes
    (the adversarial points where divisor terms actually contribute)."""
    pts = set(log_spaced_ints(lo + 1, hi, n_log).tolist())
    qs = layer.primes
    for q in qs[:: max(1, len(qs) // 50)]:
        for targ in np.geomspace(max(lo + 1, int(q)), hi, n_per_prime):
            v = int(q) * int(math.ceil(targ / int(q)))
            if lo < v <= hi:
                pts.add(v)
    return np.array(sorted(pts), dtype=np.int64)


def product_measure(schedule: ScaleSchedule, layers: list[ScaleLayer], W: int = 10_000,
                    tol: float = 1e-6, W_sparse: int = 10_000_000,
                    mode: str = "desk", threads: int = 1) -> list[SpectralVector]:
    """mu_hat^(1..k) by iterated certified convolution.

    Returns one SpectralVector per depth, each with its BoundReport attached.
    Depths whose cut outruns the numeric budget raise BudgetError from
    convolve (the cut grows like the previous scale to the tau2 power).
    """
    if len(layers) != schedule.depth:
        raise ConfigError("one layer per schedule entry required")
    for layer, Mj in zip(layers, schedule.scales):
        if layer.M != Mj:
            raise ConfigError(f"layer at M={layer.M} does not match schedule {Mj}")
    tau2 = order_of(layers[0].psi2)
    out: list[SpectralVector] = []

    base_sample = default_sample_grid(layers[0], W, min(W_sparse, 100 * W))
    vec = layer_vector(layers[0], W, sampled_s=base_sample, threads=threads)
    vec.label = "mu_hat^(1)"
    vec.bound_report = check_inductive_bounds(vec, schedule, epsilon=layers[0].epsilon,
                                              tau2=tau2, mode=mode)
    out.append(vec)

    G = vec
    for j in range(1, schedule.depth):
        layer = layers[j]
        cap = min(W_sparse, int(min(float(layer.M) ** (tau2 * (1 + layer.epsilon)), 1e18)))
        sample = default_sample_grid(layer, W, max(cap, 2 * W))
        nxt = convolve(layer_provider(layer), G, W_out=W, tol=tol, sampled_s=sample,
                       threads=threads, tail=(1.0, 4.0 * float(layer.M) ** tau2),
                       label=f"mu_hat^({j + 1})")
        nxt.scales = tuple(schedule.scales[: j + 1])
        nxt.bound_report = check_inductive_bounds(nxt, schedule, epsilon=layer.epsilon,
                                                  tau2=tau2, mode=mode)
        out.append(nxt)
        G = nxt
    return out


@dataclass
class BoundReport:
    """Windowed check of the inductive coefficient bounds for mu_hat^(k)."""

    depth: int
    mode: str
    mass: float
    mass_interval: tuple[float, float]
    mass_ok: bool
    band_max_ratio: float      # max |v(s)| |s|^(delta-eps) / 2 over the power band
    band_argmax_s: int
    band_ok: bool
    tail_max_ratio: float      # vs exp(-(1/2) sqrt(s/M_k^tau2)) beyond the band
    tail_argmax_s: int
    tail_n: int
    window: int
    window_note: str
    trunc_err: float

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["mass_interval"] = list(self.mass_interval)
        return d


def check_inductive_bounds(vec: SpectralVector, schedule: ScaleSchedule,
                           epsilon: float, tau2: float, mode: str = "desk") -> BoundReport:
    """Mass bracket and per-band maxima of a computed mu_hat^(k).

    The power band nominally extends to M_k^(tau2(1+eps)); when the stored
    window ends earlier the check restricts itself and says so in
    window_note rather than extrapolating.
    """
    k = max(len(vec.scales), 1)
    Mk = vec.scales[-1] if vec.scales else schedule.scales[0]
    delta = schedule.delta
    s, v = vec.stored()
    a = np.abs(v)
    mass = float(vec.dense[0].real)
    lo, hi = schedule.mass_interval
    Z = float(Mk) ** (tau2 * (1 + epsilon))
    window = vec.window
    note = ""
    if window < Z:
        note = (f"power band extends to {Z:.3g} but the window ends at {window}; "
                f"checked on the available range")
    band = (s >= 1) & (s <= Z)
    if band.any():
        ratios = a[band] * (s[band].astype(float) ** (delta - epsilon)) / 2.0
        ib = int(np.argmax(ratios))
        band_max, band_arg = float(ratios[ib]), int(s[band][ib])
    else:
        band_max, band_arg = 0.0, 0
    tail = s > Z
    if tail.any():
        tr = a[tail] / np.exp(-0.5 * np.sqrt(s[tail] / float(Mk) ** tau2))
        it = int(np.argmax(tr))
        tail_max, tail_arg, tail_n = float(tr[it]), int(s[tail][it]), int(tail.sum())
    else:
        tail_max, tail_arg, tail_n = 0.0, 0, 0
    return BoundReport(
        depth=k, mode=mode, mass=mass, mass_interval=(lo, hi),
        mass_ok=bool(lo < mass < hi),
        band_max_ratio=band_max, band_argmax_s=band_arg,
        band_ok=bool(band_max <= 1.0 + vec.trunc_err),
        tail_max_ratio=tail_max, tail_argmax_s=tail_arg, tail_n=tail_n,
        window=window, window_note=note, trunc_err=vec.trunc_err,
    )


def dense_convolve(a: np.ndarray, b: np.ndarray, W: int) -> np.ndarray:
    """Oracle route: full dense convolution of two hermitian windows.

    ``a``/``b`` hold v(0..Wa) resp. v(0..Wb); both are expanded to signed
    windows, convolved densely (direct for small windows, zero-padded FFT
    beyond — a different computation path from the sparse lattice walk in
    ``convolve``), and the result returned on [0, W].
    """
    fa = np.concatenate([np.conj(np.asarray(a)[1:][::-1]), np.asarray(a)])
    fb = np.concatenate([np.conj(np.asarray(b)[1:][::-1]), np.asarray(b)])
    n = len(fa) + len(fb) - 1
    if n <= (1 << 12):
        full = np.convolve(fa, fb)
    else:
        nfft = 1 << (n - 1).bit_length()
        full = np.fft.ifft(np.fft.fft(fa, nfft) * np.fft.fft(fb, nfft))[:n]
    mid = (len(fa) - 1) // 2 + (len(fb) - 1) // 2
    if W > mid:
        raise ValueError("requested window exceeds the dense result")
    return full[mid : mid + W + 1]


# ------------------------------------------------------------------------
# stability of one convolution step (envelope arithmetic)
# ------------------------------------------------------------------------


def sum_exp_tail(z: float, a: float) -> float:
    """sum_{v >= z} exp(-a sqrt(v)) by Euler-Maclaurin (integral + f/2 - f'/12).

    Agrees with exact chunked summation to < 1e-9 relative at the scales
    used here (asserted at the smallest scale in check_stability's tests).
    """
    f = math.exp(-a * math.sqrt(z))
    integ = (2.0 / a**2) * (1.0 + a * math.sqrt(z)) * f
    fp = -a / (2.0 * math.sqrt(z)) * f
    return integ + f / 2.0 - fp / 12.0


def sum_exp_tail_exact(z: float, a: float, tol: float = 1e-18) -> float:
    """Brute-force counterpart of sum_exp_tail (chunked; small scales only)."""
    vmax = int((abs(math.log(tol)) / a) ** 2) + 2
    tot = 0.0
    for lo in range(max(int(z), 1), vmax, 1 << 22):
        v = np.arange(lo, min(lo + (1 << 22), vmax), dtype=float)
        tot += float(np.exp(-a * np.sqrt(v)).sum())
    return tot


def sum_power_band(z1: int, z2: int, p: float) -> float:
    """sum_{v = z1..z2} 2 v^-p, exact term-by-term in chunks."""
    if z1 > z2:
        return 0.0
    tot = 0.0
    for lo in range(z1, z2 + 1, 1 << 22):
        v = np.arange(lo, min(lo + (1 << 22), z2 + 1), dtype=float)
        tot += float((2.0 * v**-p).sum())
    return tot


@dataclass(frozen=True)
class StabilityParams:
    """One convolution step F*G at scale position j: G lives at M_j, F at
    M_{j+1} = ceil(M_j^beta_eps)."""

    M_j: int
    beta_eps: float
    epsilon: float = 0.05
    tau2: float = 2.0

    def __post_init__(self):
        if self.M_j < 2:
            raise ConfigError("M_j must be >= 2")
        if self.delta <= 0:
            raise AdmissibilityError(
                f"derived delta = {self.delta:.4f} <= 0: hypotheses are empty",
                violated="delta")

    @property
    def delta(self) -> float:
        b, e, t = self.beta_eps, self.epsilon, self.tau2
        return (b * (1 - e) - t * (1 + e) ** 2) / (t * (b - 1) * (1 + e))

    @property
    def M_next(self) -> int:
        return math.ceil(self.M_j**self.beta_eps)

    @property
    def Z_G(self) -> int:
        """End of G's power band, M_j^(tau2(1+eps))."""
        return int(float(self.M_j) ** (self.tau2 * (1 + self.epsilon)))

    @property
    def Z_B(self) -> int:
        """End of the next power band, M_{j+1}^(tau2(1+eps))."""
        return int(float(self.M_next) ** (self.tau2 * (1 + self.epsilon)))

    @property
    def T_med(self) -> int:
        """End of F's medium band, M_{j+1}^(tau2(1+eps/2))."""
        return int(float(self.M_next) ** (self.tau2 * (1 + self.epsilon / 2)))

    @property
    def T_F(self) -> float:
        """F's tail scale M_{j+1}^tau2."""
        return float(self.M_next) ** self.tau2

    @property
    def a_G(self) -> float:
        """G's tail rate: exp(-a_G sqrt s) with a_G = 1/(2 M_j^(tau2/2))."""
        return 1.0 / (2.0 * float(self.M_j) ** (self.tau2 / 2))

    @property
    def F_med(self) -> float:
        """F's medium amplitude M_{j+1}^(eps-1)."""
        return float(self.M_next) ** (-1 + self.epsilon)


class _GEnvelope:
    """Window sums of G's hypothesis envelope: exact power band + EM tail."""

    def __init__(self, p: StabilityParams):
        self.p = p
        self._tails: dict[int, float] = {}

    def env(self, s: int) -> float:
        s = abs(s)
        if s == 0:
            return 2.0
        if s <= self.p.Z_G:
            return 2.0 * s ** (-self.p.delta + self.p.epsilon)
        return math.exp(-self.p.a_G * math.sqrt(s))

    def tail_from(self, z: int) -> float:
        """sum_{v >= z} env(v) for z >= 1."""
        z = int(z)
        if z not in self._tails:
            if z <= self.p.Z_G:
                self._tails[z] = (sum_power_band(z, self.p.Z_G, self.p.delta - self.p.epsilon)
                                  + sum_exp_tail(self.p.Z_G + 1, self.p.a_G))
            else:
                self._tails[z] = sum_exp_tail(z, self.p.a_G)
        return self._tails[z]

    def window(self, z1: int, z2: int) -> float:
        """sum_{v = z1..z2} env(|v|), endpoints of any sign."""
        if z1 > z2:
            return 0.0
        tot = 2.0 if (z1 <= 0 <= z2) else 0.0
        if z2 >= 1:
            tot += self.tail_from(max(z1, 1)) - self.tail_from(z2 + 1)
        if z1 <= -1:
            tot += self.tail_from(max(-z2, 1)) - self.tail_from(-z1 + 1)
        return tot

    def mass(self) -> float:
        """sum over all integer v of env(v): center + both signs of the tail."""
        return 2.0 + 2.0 * self.tail_from(1)


@dataclass
class StabilityReport:
    """Margins of the three conclusions of the one-step stability bound."""

    M_j: int
    M_next: int
    delta: float
    mode: str
    synthetic: bool
    dev_at_0: float
    dev_sup: float            # sup_{|s| <= Z_G} of the envelope deviation sum
    dev_argmax_s: int
    bound_a: float            # M_{j+1}^-delta
    ratio_a: float
    pass_a: bool
    sup_b: float              # sup over (Z_G, Z_B] of measured * s^(delta-eps)
    argmax_b: int
    pass_b: bool              # needs <= 2 to hand the power band to the next step
    sup_c: float              # sup over (Z_B, 300 Z_B] vs exp(-(1/2)sqrt(s/T_F))
    argmax_c: int
    pass_c: bool
    hypothesis_warnings: list

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_stability(params: StabilityParams, F: SpectralVector | None = None,
                    G: SpectralVector | None = None, mode: str = "desk") -> StabilityReport:
    """Evaluate the one-step deviation with F, G at their envelope equality.

    The deviation |F*G - G|(s) <= sum_{|t| >= M_{j+1}} |F(t)| env_G(s - t) is
    summed exactly (power band) / by validated Euler-Maclaurin (exponential
    parts) — a direct evaluation of the truncated envelope convolution, not
    a sampled estimate.  When real vectors are passed, their hypothesis
    displays are verified first: violations raise in paper-strict mode and
    are recorded as warnings in desk mode.
    """
    warnings: list[str] = []
    if F is not None or G is not None:
        warnings = verify_stability_hypotheses(params, F=F, G=G)
        if mode == "paper-strict" and warnings:
            raise StrictModeError("stability hypothesis violated: " + warnings[0])

    p = params
    genv = _GEnvelope(p)

    def dev(s: int) -> float:
        d = p.F_med * (genv.window(p.M_next - s, p.T_med - s)
                       + genv.window(p.M_next + s, p.T_med + s))
        if s > p.T_med:
            d += math.exp(-math.sqrt(s / p.T_F)) * genv.mass()
        return d

    dev0 = dev(0)
    # band ends can exceed int64 at large beta_eps; sample in float64 and
    # convert pointwise (exact below 2^53, and only the envelope algebra —
    # never an index — consumes these s values)
    s_a = np.unique(np.round(np.concatenate([
        np.array([0.0, float(p.Z_G)]),
        np.geomspace(1.0, max(float(p.Z_G), 2.0), 40)])))
    dev_sup, s_sup = -1.0, 0
    for s in s_a.tolist():
        d = dev(int(s))
        if d > dev_sup:
            dev_sup, s_sup = d, int(s)
    bound_a = float(p.M_next) ** (-p.delta)

    sb = np.unique(np.round(np.geomspace(float(p.Z_G) + 1.0, float(p.Z_B), 60)))
    vb = np.array([(genv.env(int(s)) + dev(int(s))) * int(s) ** (p.delta - p.epsilon)
                   for s in sb.tolist()])
    ib = int(np.argmax(vb))

    sc = np.unique(np.round(np.geomspace(float(p.Z_B) + 1.0, 300.0 * float(p.Z_B), 50)))
    vc = np.array([(genv.env(int(s)) + dev(int(s)))
                   / math.exp(-0.5 * math.sqrt(float(s) / p.T_F)) for s in sc.tolist()])
    ic = int(np.argmax(vc))

    return StabilityReport(
        M_j=p.M_j, M_next=p.M_next, delta=p.delta, mode=mode,
        synthetic=(F is None and G is None),
        dev_at_0=dev0, dev_sup=dev_sup, dev_argmax_s=s_sup, bound_a=bound_a,
        ratio_a=dev_sup / bound_a, pass_a=bool(dev_sup <= bound_a),
        sup_b=float(vb[ib]), argmax_b=int(sb[ib]), pass_b=bool(vb[ib] <= 2.0),
        sup_c=float(vc[ic]), argmax_c=int(sc[ic]), pass_c=bool(vc[ic] <= 1.0),
        hypothesis_warnings=warnings,
    )


def verify_stability_hypotheses(params: StabilityParams, F: SpectralVector | None = None,
                                G: SpectralVector | None = None) -> list[str]:
    """Compare real coefficient vectors against the assumed envelope displays.

    Returns human-readable violation strings (empty when every stored
    coefficient sits inside its envelope).  The F medium display carries
    constant 1, which finite-scale layers genuinely exceed (by the measured
    C_med log factor); that is reported, not silently repaired.
    """
    p = params
    out: list[str] = []
    if F is not None:
        s, v = F.stored()
        a = np.abs(v)
        if abs(F.at(0) - 1.0) > 1e-12:
            out.append(f"F(0) = {F.at(0):.6g}, display requires exactly 1")
        zero = (s >= 1) & (s < p.M_next)
        if zero.any() and a[zero].max() > 0.0:
            out.append(f"F does not vanish on [1, {p.M_next}): max {a[zero].max():.3g}")
        med = (s >= p.M_next) & (s <= p.T_med)
        if med.any():
            r = a[med] / p.F_med
            if r.max() > 1.0:
                out.append(f"F medium display |F| <= M^(eps-1) = {p.F_med:.3g} violated "
                           f"by {r.max():.3g}x at s={int(s[med][int(np.argmax(r))])}")
        big = s > p.T_med
        if big.any():
            r = a[big] / np.exp(-np.sqrt(s[big] / p.T_F))
            if r.max() > 1.0:
                out.append(f"F tail display exp(-sqrt(s/M^tau2)) violated by {r.max():.3g}x "
                           f"at s={int(s[big][int(np.argmax(r))])}")
    if G is not None:
        s, v = G.stored()
        a = np.abs(v)
        g0 = abs(G.at(0))
        if not (0.5 <= g0 <= 2.0):
            out.append(f"G(0) = {g0:.6g} outside [1/2, 2]")
        band = (s >= 1) & (s <= p.Z_G)
        if band.any():
            r = a[band] / (2.0 * s[band].astype(float) ** (-p.delta + p.epsilon))
            if r.max() > 1.0:
                out.append(f"G power display 2|s|^(eps-delta) violated by {r.max():.3g}x "
                           f"at s={int(s[band][int(np.argmax(r))])}")
        big = s > p.Z_G
        if big.any():
            r = a[big] / np.exp(-p.a_G * np.sqrt(s[big]))
            if r.max() > 1.0:
                out.append(f"G tail display exp(-a sqrt s) violated by {r.max():.3g}x "
                           f"at s={int(s[big][int(np.argmax(r))])}")
    return out


def stability_trend(M_values: tuple[int, ...], beta_eps: float, epsilon: float = 0.05,
                    tau2: float = 2.0, mode: str = "desk") -> dict:
    """check_stability across scales plus the decay slope of the deviation.

    The hypothesis chain predicts dev_sup ~ M_{j+1}^-delta, i.e. slope
    -delta*beta_eps per log of M_j; the measured slope and the margin
    sequences of the other two conclusions are returned for trend review.
    """
    reports = [check_stability(StabilityParams(M, beta_eps, epsilon, tau2), mode=mode)
               for M in M_values]
    slopes = [math.log(r1.dev_sup / r0.dev_sup) / math.log(r1.M_j / r0.M_j)
              for r0, r1 in zip(reports, reports[1:])]
    return {
        "reports": reports,
        "slopes_per_log_Mj": slopes,
        "required_slope": -StabilityParams(M_values[0], beta_eps, epsilon, tau2).delta
        * beta_eps,
        "sup_b_sequence": [r.sup_b for r in reports],
        "sup_c_sequence": [r.sup_c for r in reports],
    }
