"""One scale of the construction: bumps at rational annuli over primes in [M, 2M).

For every prime q in [M, 2M) the layer places q unit-mass bumps, one per
residue r, centered at

    x_{q,r} = (r - theta)/q + psi1(q) - (c/2) psi2(q),      c = M^(-epsilon/100),

each a copy of the base bump rescaled to width c psi2(q).  The layer density
g therefore has total mass g_hat(0) = sum of the primes, and its Fourier
coefficients collapse over residues to a divisor sum:

    g_hat(s) = sum_{q | s} q exp(-2 pi i s x_q) phi_hat(c psi2(q) s),
    x_q = -theta/q + psi1(q) - (c/2) psi2(q).

Three coefficient regimes follow and are checked empirically by
verify_regimes: an exact zero band 1 <= |s| < M (no prime of the layer
divides s), a medium band |s| <= M^(tau2 (1+eps/2)) where
|f_hat| <~ log(M)/M, and a tail where phi_hat's stretched-exponential decay
has kicked in for every prime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._util import GridFunction, primes_in_range
from .bump import BumpSpec, bump_grid, bump_transform, widths_schedule
from .diophantine import ThetaSpec
from .errors import ConfigError, ResolutionError
from .params import ApproxFunction, c_of_M, order_of


@dataclass
class ScaleLayer:
    """A single scale M with its approximation functions and base bump."""

    M: int
    epsilon: float
    psi1: ApproxFunction
    psi2: ApproxFunction
    theta: ThetaSpec = field(default_factory=ThetaSpec.zero)
    bump: BumpSpec = field(default_factory=lambda: widths_schedule(64, 0.27))

    def __post_init__(self):
        if self.M < 2:
            raise ConfigError("scale M must be >= 2")
        if not (0 < self.epsilon < 1):
            raise ConfigError("epsilon must lie in (0, 1)")
        self.primes = primes_in_range(self.M, 2 * self.M)
        if len(self.primes) == 0:
            raise ConfigError(f"no primes in [{self.M}, {2 * self.M})")
        self.c = c_of_M(self.M, self.epsilon)
        self.g_hat_0 = float(self.primes.sum())
        self._theta_f = self.theta.value_float()

    @property
    def medium_cutoff(self) -> float:
        """Upper edge M^(tau2 (1 + eps/2)) of the medium coefficient band."""
        return float(self.M) ** (order_of(self.psi2) * (1.0 + self.epsilon / 2.0))

    def band_of(self, s) -> np.ndarray:
        """Label coefficients: 'zero' (|s| < M), 'medium', or 'tail'."""
        a = np.abs(np.atleast_1d(np.asarray(s, dtype=np.int64)))
        out = np.where(a < self.M, "zero", np.where(a <= self.medium_cutoff, "medium", "tail"))
        out[a == 0] = "medium"  # s = 0 carries the full mass
        return out


def primes_in_scale(M: int) -> np.ndarray:
    """Primes q with M <= q < 2M (nonempty for every M >= 2)."""
    return primes_in_range(M, 2 * M)


def center(layer: ScaleLayer, q: int, r: int) -> float:
    """Center x_{q,r} of the bump for prime q, residue r (not reduced mod 1)."""
    if r < 0 or r >= q:
        raise ValueError("residue r must satisfy 0 <= r < q")
    return (r - layer._theta_f) / q + float(layer.psi1(q)) - (layer.c / 2.0) * float(layer.psi2(q))


def width(layer: ScaleLayer, q: int) -> float:
    """Width c * psi2(q) of the bumps for prime q."""
    return layer.c * float(layer.psi2(q))


def g_hat(layer: ScaleLayer, s, threads: int = 1) -> np.ndarray:
    """Unnormalized coefficients g_hat(s) for integer s (scalar or array).

    Divisibility is tested in exact int64 arithmetic; phases are evaluated
    in double precision, which keeps the phase error below ~1e-10 rad for
    |s| within the int64 range because psi2(q) shrinks faster than s grows.
    """
    s_arr = np.atleast_1d(np.asarray(s, dtype=np.int64))
    theta_f = layer._theta_f
    c = layer.c

    def eval_chunk(chunk: np.ndarray) -> np.ndarray:
        out = np.zeros(len(chunk), dtype=complex)
        for q in layer.primes:
            mask = (chunk % q) == 0
            if not mask.any():
                continue
            sq = chunk[mask].astype(float)
            p1 = float(layer.psi1(q))
            p2 = float(layer.psi2(q))
            xq = -theta_f / q + p1 - (c / 2.0) * p2
            out[mask] += q * np.exp(-2j * np.pi * sq * xq) * bump_transform(layer.bump, c * p2 * sq)
        return out

    # chunk along s: per-element work is independent, so the merge order fixes the result
    if threads > 1 and len(s_arr) > 4096:
        bounds = np.linspace(0, len(s_arr), threads + 1).astype(int)
        chunks = [s_arr[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = np.concatenate(list(pool.map(eval_chunk, chunks)))
    else:
        out = eval_chunk(s_arr)
    if np.isscalar(s) or np.asarray(s).ndim == 0:
        return complex(out[0])
    return out


def f_hat(layer: ScaleLayer, s, threads: int = 1) -> np.ndarray:
    """Normalized coefficients f_hat(s) = g_hat(s) / g_hat(0); f_hat(0) = 1."""
    return g_hat(layer, s, threads=threads) / layer.g_hat_0


def f_hat_single(layer: ScaleLayer, q: int, s) -> np.ndarray:
    """The prime-q term of f_hat alone, for s already known to be multiples
    of q.  Equals f_hat exactly wherever q is the only layer prime dividing
    s — in particular everywhere below min(primes)^2 — and skips the
    divisibility scan, which matters when the caller enumerates millions of
    multiples whose divisor it already knows."""
    sq = np.atleast_1d(np.asarray(s, dtype=np.int64)).astype(float)
    p1 = float(layer.psi1(q))
    p2 = float(layer.psi2(q))
    xq = -layer._theta_f / q + p1 - (layer.c / 2.0) * p2
    term = q * np.exp(-2j * np.pi * sq * xq) * bump_transform(layer.bump, layer.c * p2 * sq)
    return term / layer.g_hat_0


# ------------------------------------------------------------ grid route ----


def layer_grid(layer: ScaleLayer, N: int, bump_samples: int = 1 << 20) -> GridFunction:
    """The layer density realized on [0, 2) with N cells (independent route).

    Every bump is scattered onto the grid by linear interpolation of a dense
    base-bump profile; the Fourier coefficients of the result (see
    g_hat_from_grid) provide an oracle for the closed-form g_hat that shares
    no code path with the divisor sum.  Domain length 2 puts integer
    frequencies on even rfft bins, so leakage from the odd bins is visible.
    """
    if N < (1 << 12) or (N & (N - 1)) != 0:
        raise ConfigError("grid size N must be a power of two >= 2^12")
    h2 = 2.0 / N
    w_min = width(layer, int(layer.primes[-1]))
    if w_min / h2 < 8:
        required = 1 << math.ceil(math.log2(8 * 2.0 / w_min))
        raise ResolutionError(
            f"narrowest bump spans {w_min / h2:.2f} < 8 cells at N={N}; need N >= {required}",
            required=required,
        )
    base = bump_grid(layer.bump, bump_samples)
    prof_x = base.xs
    prof = base.samples
    g = np.zeros(N)
    for q in layer.primes:
        w = width(layer, int(q))
        span = int(math.ceil(0.5 * w / h2)) + 2
        xc0 = center(layer, int(q), 0)
        for r in range(int(q)):
            xc = xc0 + r / q
            i0 = int(round(xc / h2))
            ii = np.arange(i0 - span, i0 + span + 1)
            t = (ii * h2 - xc) / w
            vals = np.interp(t, prof_x, prof, left=0.0, right=0.0) / w
            np.add.at(g, ii % N, vals)
    samples = np.concatenate([g, g[:1]])  # closed periodic grid
    return GridFunction(x0=0.0, h=h2, samples=samples)


def g_hat_from_grid(grid: GridFunction, s_max: int) -> np.ndarray:
    """Coefficients ∫ g(x) e^{-2 pi i s x} dx for s = 0..s_max from a grid on [0, 2).

    The function on [0, 2) holds one period of mass, so the even rfft bins
    [2s] scaled by the cell width are the integer-frequency coefficients.
    """
    n = len(grid.samples) - 1
    if 2 * s_max >= n // 2:
        raise ValueError("s_max beyond the grid's Nyquist range")
    F = np.fft.rfft(grid.samples[:n]) * grid.h
    return F[2 * np.arange(s_max + 1)]


# ------------------------------------------------------- regime sampling ----


def medium_sample_points(layer: ScaleLayer, n_plain: int = 1200, seed: int = 7) -> np.ndarray:
    """Adversarial integer frequencies in the medium band [M, M^(tau2(1+eps/2))].

    Mixes jittered log-spaced integers, small and log-spaced multiples of
    every layer prime, and products of prime pairs (where two divisor terms
    add coherently) — the empirical sup over this set is what the medium
    constant is measured on.
    """
    M = layer.M
    end = layer.medium_cutoff
    rng = np.random.default_rng(seed)
    pts: set[int] = set()
    t = np.geomspace(M, end, n_plain) * np.exp(rng.uniform(-0.01, 0.01, n_plain))
    pts.update(int(round(v)) for v in t if M <= v <= end)
    for q in layer.primes:
        ks = list(range(1, 33)) + [int(round(v)) for v in np.geomspace(33, max(33, end / q), 40)]
        pts.update(int(q) * k for k in ks if M <= q * k <= end)
    for i, q in enumerate(layer.primes):
        for qp in layer.primes[i:]:
            for k in (1, 2, 3):
                v = int(q) * int(qp) * k
                if v <= end:
                    pts.add(v)
    return np.array(sorted(pts), dtype=np.int64)


def tail_sample_points(layer: ScaleLayer, span: float = 40.0) -> np.ndarray:
    """Integer frequencies just past the medium cutoff, out to span x cutoff."""
    start = layer.medium_cutoff
    end = start * span
    pts: set[int] = set()
    for q in layer.primes:
        for targ in np.geomspace(start, end, 25):
            pts.add(int(q) * int(np.ceil(targ / q)))
    for i, q in enumerate(layer.primes):
        for qp in layer.primes[i:]:
            base = int(q) * int(qp)
            k = int(np.ceil(start / base))
            for kk in (k, 2 * k, 4 * k):
                if base * kk <= end:
                    pts.add(base * kk)
    return np.array(sorted(v for v in pts if v >= start), dtype=np.int64)


@dataclass
class RegimeReport:
    """Empirical regime constants for one layer (see verify_regimes)."""

    M: int
    n_primes: int
    g_hat_0: float
    zero_band_max: float
    c_medium: float
    medium_argmax_s: int
    c_medium_single: float
    n_medium: int
    tail_max_ratio: float
    tail_argmax_s: int
    n_tail: int
    medium_cutoff: float

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "n_primes": self.n_primes,
            "g_hat_0": self.g_hat_0,
            "zero_band_max": self.zero_band_max,
            "c_medium": self.c_medium,
            "medium_argmax_s": self.medium_argmax_s,
            "c_medium_single": self.c_medium_single,
            "n_medium": self.n_medium,
            "tail_max_ratio": self.tail_max_ratio,
            "tail_argmax_s": self.tail_argmax_s,
            "n_tail": self.n_tail,
            "medium_cutoff": self.medium_cutoff,
        }


def verify_regimes(layer: ScaleLayer, seed: int = 7, span: float = 40.0,
                   threads: int = 1) -> RegimeReport:
    """Measure the three coefficient regimes of a layer.

    zero band   : max |f_hat(s)| over 1 <= s < M (exactly zero by construction,
                  recomputed rather than assumed);
    medium band : C_med = sup |f_hat(s)| * M / log M over the adversarial sample;
    tail band   : sup |f_hat(s)| / exp(-sqrt(s / M^tau2)).
    """
    M = layer.M
    zero_s = np.arange(1, M, dtype=np.int64)
    zero_max = float(np.abs(f_hat(layer, zero_s, threads=threads)).max()) if len(zero_s) else 0.0

    smid = medium_sample_points(layer, seed=seed)
    fmid = np.abs(f_hat(layer, smid, threads=threads))
    i = int(np.argmax(fmid))
    c_med = float(fmid[i] * M / math.log(M))
    ndiv = np.zeros(len(smid))
    for q in layer.primes:
        ndiv += (smid % q == 0)
    if (ndiv == 1).any():
        c_single = float(fmid[ndiv == 1].max() * M / math.log(M))
    else:
        c_single = float("nan")

    stail = tail_sample_points(layer, span=span)
    ftail = np.abs(f_hat(layer, stail, threads=threads))
    env = np.exp(-np.sqrt(stail / float(M) ** order_of(layer.psi2)))
    ratio = ftail / env
    j = int(np.argmax(ratio))

    return RegimeReport(
        M=M,
        n_primes=len(layer.primes),
        g_hat_0=layer.g_hat_0,
        zero_band_max=zero_max,
        c_medium=c_med,
        medium_argmax_s=int(smid[i]),
        c_medium_single=c_single,
        n_medium=len(smid),
        tail_max_ratio=float(ratio[j]),
        tail_argmax_s=int(stail[j]),
        n_tail=len(stail),
        medium_cutoff=layer.medium_cutoff,
    )
