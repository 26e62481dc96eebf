"""Continued fractions, the shift theta, and the brute-force gap-lemma oracle.

The shift theta comes in three variants: exactly zero, a quadratic surd
(p + r*sqrt(d))/s handled with exact integer arithmetic (no catastrophic
cancellation in ||q theta||), or an explicit partial-quotient sequence.

The gap machinery answers one question exhaustively: given a point x that
sits in prescribed annuli at two prime scales q1 and q2, is there any
intermediate q with |x - (p - theta)/q| < psi1(q) - c psi2(q)?  The scan is
exact (integer arithmetic on Fractions with a vectorized prefilter), never
sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath as mp
import numpy as np

from ._util import primes_in_range, sieve_upto
from .errors import ConfigError, PrecisionError
from .params import ApproxFunction, eval_psi

# ------------------------------------------------------------- ThetaSpec ----


def _sqrt_cmp(D: int, t: int) -> int:
    """Sign of sqrt(D) - t for integers D >= 0, t (exact)."""
    if t < 0:
        return 1
    if D > t * t:
        return 1
    if D < t * t:
        return -1
    return 0


def _neg_surd_ge(P: int, D: int, q: int, t: int) -> bool:
    """-(P + sqrt D)/q >= t for q > 0 (exact): sqrt D <= -P - t q."""
    rhs = -P - t * q
    return rhs >= 0 and D <= rhs * rhs


def _floor_surd(P: int, D: int, Q: int) -> int:
    """floor((P + sqrt(D)) / Q) exactly; D >= 0, Q != 0."""
    if Q == 0:
        raise ZeroDivisionError
    s = math.isqrt(D)
    if Q > 0:
        a = (P + s) // Q
        # value >= a+1  <=>  sqrt(D) >= (a+1)Q - P
        while _sqrt_cmp(D, (a + 1) * Q - P) >= 0:
            a += 1
        while _sqrt_cmp(D, a * Q - P) < 0:
            a -= 1
        return a
    # Q < 0: value = -(P + sqrt D)/(-Q)
    q = -Q
    a = -((P + s) // q) - 1
    while _neg_surd_ge(P, D, q, a + 1):
        a += 1
    while not _neg_surd_ge(P, D, q, a):
        a -= 1
    return a


@dataclass
class ThetaSpec:
    """The inhomogeneous shift theta, value normalized into [0, 1).

    kind 'zero':  theta = 0 (Diophantine exponent 1 by convention).
    kind 'surd':  theta = (p + r sqrt(d))/s with integers p, r > 0, d > 0
                  nonsquare, s != 0;  partial quotients come from the exact
                  integer recurrence and are eventually periodic.
    kind 'cf':    theta = [0; a1, a2, ...] from an explicit digit tuple.
    """

    kind: str
    p: int = 0
    r: int = 0
    d: int = 0
    s: int = 1
    digits: tuple = ()
    _pq_cache: list = field(default_factory=list, repr=False, compare=False)

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls) -> "ThetaSpec":
        return cls(kind="zero")

    @classmethod
    def quadratic_surd(cls, p: int, r: int, d: int, s: int) -> "ThetaSpec":
        if s == 0:
            raise ConfigError("surd denominator s must be nonzero")
        if r <= 0:
            raise ConfigError("surd coefficient r must be positive (fold signs into p, s)")
        if d <= 0 or math.isqrt(d) ** 2 == d:
            raise ConfigError("d must be a positive nonsquare integer")
        th = cls(kind="surd", p=p, r=r, d=d, s=s)
        # normalize value into [0, 1)
        a0 = _floor_surd(p, r * r * d, s) if s > 0 else _floor_surd(-p, r * r * d, -s)
        if s < 0:
            # rewrite with positive denominator: (p + r sqrt d)/s = (-p + r*(-sqrt d))/(-s)
            raise ConfigError("use a positive denominator s (negate p and r's sign fold)")
        if a0 != 0:
            th = cls(kind="surd", p=p - a0 * s, r=r, d=d, s=s)
        return th

    @classmethod
    def golden(cls) -> "ThetaSpec":
        """(sqrt 5 - 1)/2, partial quotients all 1."""
        return cls.quadratic_surd(-1, 1, 5, 2)

    @classmethod
    def explicit_cf(cls, digits: Sequence[int]) -> "ThetaSpec":
        digits = tuple(int(a) for a in digits)
        if not digits or any(a < 1 for a in digits):
            raise ConfigError("explicit CF digits must be positive integers")
        return cls(kind="cf", digits=digits)

    # -- values -----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def value_float(self) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "surd":
            return (self.p + self.r * math.sqrt(self.d)) / self.s
        num, den = self._cf_convergent(len(self.digits))
        return num / den

    def value_mp(self, dps: int = 50):
        with mp.workdps(dps):
            if self.kind == "zero":
                return mp.mpf(0)
            if self.kind == "surd":
                return (self.p + self.r * mp.sqrt(self.d)) / self.s
            num, den = self._cf_convergent(len(self.digits))
            return mp.mpf(num) / den

    def _cf_convergent(self, n: int) -> tuple[int, int]:
        """(p, q) of [0; digits[:n]] by the standard recurrence (exact)."""
        p0, q0, p1, q1 = 1, 0, 0, 1  # conv(-1), conv(0) for a0 = 0
        for a in self.digits[:n]:
            p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        return p1, q1


def partial_quotients(theta: ThetaSpec, n: int) -> list[int]:
    """First n partial quotients a1..an of theta in [0,1); empty for zero."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if theta.kind == "zero":
        return []
    if theta.kind == "cf":
        if n > len(theta.digits):
            raise ValueError(f"only {len(theta.digits)} explicit digits available")
        return list(theta.digits[:n])
    cache = theta._pq_cache
    if len(cache) < n:
        # exact recurrence on (P + sqrt D)/Q; state resumes from scratch each
        # time (cheap), digits appended to the cache
        D = theta.r * theta.r * theta.d
        P, Q = theta.p, theta.s
        if (D - P * P) % Q != 0:
            P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
        cache.clear()
        for _ in range(n + 1):
            a = _floor_surd(P, D, Q)
            cache.append(a)
            P = a * Q - P
            Q = (D - P * P) // Q
        assert cache[0] == 0, "theta must be normalized into [0,1)"
    return cache[1 : n + 1]


def convergents(theta: ThetaSpec, q_max: int) -> list[tuple[int, int]]:
    """Convergents (p, q) of theta with 1 <= q <= q_max, ascending q (exact)."""
    if theta.kind == "zero":
        return []
    out = []
    p0, q0, p1, q1 = 1, 0, 0, 1
    k = 0
    while True:
        k += 1
        try:
            a = partial_quotients(theta, k)[-1]
        except ValueError:
            break  # explicit digits exhausted
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q1 > q_max:
            break
        out.append((p1, q1))
    return out


def dist_to_nearest_int(theta: ThetaSpec, q: int) -> float:
    """||q theta||, accurate to 1e-12 relative for q <= 1e9.

    Surds go through exact integer floor + high-precision difference, with
    a two-precision agreement check; silent rounding is never accepted.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if theta.kind == "zero":
        return 0.0
    if theta.kind == "surd":
        D = (q * theta.r) ** 2 * theta.d
        P, S = q * theta.p, theta.s
        t = _floor_surd(P, D, S)
        # nearest integer is t or t+1; decide exactly: 2 q theta >= 2t+1?
        side = _sqrt_cmp(4 * D, (2 * t + 1) * S - 2 * P)  # sign of 2 sqrt(D) - ((2t+1)S - 2P)
        m = t + 1 if side >= 0 else t
        vals = []
        for dps in (40, 60):
            with mp.workdps(dps):
                vals.append(abs((P + mp.sqrt(D)) / S - m))
        if vals[0] == 0 or abs(vals[0] - vals[1]) / abs(vals[1]) > 1e-12:
            raise PrecisionError(f"||q theta|| not certified at q={q}")
        return float(vals[1])
    # explicit CF: use convergents p_k/q_k; |theta - p_k/q_k| <= 1/(q_k q_{k+1}),
    # so ||q theta|| evaluated at the convergent is certified once the error
    # q/(q_k q_{k+1}) drops below 1e-13 of the distance itself
    p0, q0, p1, q1 = 1, 0, 0, 1
    for a in theta.digits:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        if q0 < 1:
            continue
        err = Fraction(q, q0 * q1)
        v = q * Fraction(p0, q0)
        frac = v - (v.numerator // v.denominator)
        dist = min(frac, 1 - frac)
        if dist > 0 and err * 10**13 <= dist:
            return float(dist)
    raise PrecisionError(
        f"explicit CF digits exhausted before ||q theta|| certified for q={q}"
    )


def estimate_exponent(theta: ThetaSpec, q_max: int, return_details: bool = False):
    """Fitted Diophantine exponent from convergent denominators q <= q_max.

    gamma_hat = 1 + slope of -log ||q theta|| against log q over convergents.
    The fit on the first and second halves is compared; a growing exponent
    (Liouville-like theta) is flagged in the details as unbounded_trend.
    """
    if theta.kind == "zero":
        raise ValueError("theta must be irrational")
    if q_max < 10**3:
        raise ValueError("q_max must be >= 1e3")
    convs = [(p, q) for p, q in convergents(theta, q_max) if q >= 2]
    if len(convs) < 4:
        raise ValueError(f"too few convergents below {q_max} ({len(convs)})")
    qs = np.array([q for _, q in convs], dtype=float)
    dists = np.array([dist_to_nearest_int(theta, q) for _, q in convs])
    x, y = np.log(qs), -np.log(dists)
    slope = np.polyfit(x, y, 1)[0]
    gamma = float(slope) + 1.0
    half = len(qs) // 2
    g1 = float(np.polyfit(x[:half], y[:half], 1)[0]) + 1.0 if half >= 2 else gamma
    g2 = float(np.polyfit(x[half:], y[half:], 1)[0]) + 1.0 if len(qs) - half >= 2 else gamma
    details = {
        "gamma": gamma,
        "n_convergents": len(qs),
        "gamma_first_half": g1,
        "gamma_second_half": g2,
        "unbounded_trend": bool(g2 > g1 + 0.25),
    }
    if return_details:
        return gamma, details
    return gamma


def norm_violations(theta: ThetaSpec, exponent: float, q_max: int) -> np.ndarray:
    """All q <= q_max with ||q theta|| < q^(-exponent) (float64 full scan).

    Valid for quadratic surds at this range: ||q theta|| >= ~1/(3q) there,
    far above the ~q * 2^-53 rounding noise for q <= 1e6.
    """
    th = theta.value_float()
    q = np.arange(1, q_max + 1, dtype=np.float64)
    dist = np.abs(q * th - np.round(q * th))
    return np.flatnonzero(dist < q ** (-exponent)).astype(np.int64) + 1


# ----------------------------------------------------- annuli and the gap ----


def _theta_float(theta: ThetaSpec | float) -> float:
    if isinstance(theta, ThetaSpec):
        return theta.value_float()
    return float(theta)


def annulus_hits(x, psi1: ApproxFunction, psi2: ApproxFunction, c: float,
                 theta: ThetaSpec, q_lo: int, q_hi: int) -> list[tuple[int, int]]:
    """All coprime (r, q), q in [q_lo, q_hi), with
    psi1(q) - c psi2(q) <= |x - (r - theta)/q| <= psi1(q).  Exhaustive."""
    th = _theta_float(theta)
    xf = float(x)
    hits = []
    for q in range(q_lo, q_hi):
        base = q * xf + th
        lo_b = eval_psi(psi1, q) - c * eval_psi(psi2, q)
        hi_b = eval_psi(psi1, q)
        for r in range(math.floor(base) - 2, math.floor(base) + 4):
            if not (0 <= r <= q):
                continue
            if math.gcd(r, q) != 1:
                continue
            dist = abs(xf - (r - th) / q)
            if lo_b <= dist <= hi_b:
                hits.append((r, q))
    return hits


def _exact_bound_fraction(psi: ApproxFunction, q: int) -> Optional[Fraction]:
    """psi(q) as an exact Fraction when the family permits, else None."""
    if psi.family != "power" or psi.tau != int(psi.tau):
        return None
    pref = Fraction(psi.prefactor).limit_denominator(10**12)
    if float(pref) != psi.prefactor:
        return None
    return pref / Fraction(q) ** int(psi.tau)


def _scan_fraction(x: Fraction, psi1, psi2, c: Fraction, q1: int, q2: int,
                   collect_all: bool) -> list[tuple[int, int]]:
    """Exact exhaustive scan over q in (q1, q2) for Fraction x, theta = 0.

    Vectorized int64 arithmetic with an exact Fraction confirmation for
    every prefilter hit; falls back to pure Python ints if products could
    overflow 63 bits.
    """
    num, den = x.numerator, x.denominator
    hits: list[tuple[int, int]] = []
    span = range(q1 + 1, q2)
    if len(span) == 0:
        return hits
    use_np = (q2 * max(abs(num), den)) < (1 << 62)
    chunk = 1 << 20
    for lo in range(q1 + 1, q2, chunk):
        hi = min(lo + chunk, q2)
        if use_np:
            q = np.arange(lo, hi, dtype=np.int64)
            Q = q * num
            r = (2 * Q + den) // (2 * den)  # nearest integer to q x
            resid = np.abs(Q - r * den)  # |q x - r| * den
            # prefilter: |q x - r| < psi1(q) - c psi2(q) needs resid tiny;
            # bound * q * den in float with 1e-9 slack, exact confirm below
            bound = (eval_psi(psi1, q.astype(float)) - float(c) * eval_psi(psi2, q.astype(float)))
            cand = np.flatnonzero(resid.astype(float) < bound * q.astype(float) * den * (1 + 1e-9))
            pairs = [(int(q[i]), int(r[i])) for i in cand]
        else:
            pairs = []
            for qq in range(lo, hi):
                Q = qq * num
                rr = (2 * Q + den) // (2 * den)
                pairs.append((qq, rr))
        for qq, rr in pairs:
            for p in (rr, rr - 1, rr + 1):  # nearest and both neighbours
                dist = abs(x - Fraction(p, qq))
                b1 = _exact_bound_fraction(psi1, qq)
                b2 = _exact_bound_fraction(psi2, qq)
                if b1 is not None and b2 is not None:
                    ok = dist < b1 - c * b2
                else:
                    with mp.workdps(40):
                        ok = mp.mpf(dist.numerator) / dist.denominator < (
                            eval_psi(psi1, qq) - float(c) * eval_psi(psi2, qq)
                        )
                if ok:
                    hits.append((p, qq))
                    if not collect_all:
                        return hits
        # deduplicate while preserving ascending order
    seen = set()
    uniq = []
    for h in hits:
        if h not in seen:
            seen.add(h)
            uniq.append(h)
    return uniq


def violation_search(x, psi1: ApproxFunction, psi2: ApproxFunction, c,
                     theta: ThetaSpec, q1: int, q2: int) -> Optional[tuple[int, int]]:
    """First (p, q), q1 < q < q2, with |x - (p - theta)/q| < psi1(q) - c psi2(q).

    Returns None when no q in the open range violates — the gap-lemma
    conclusion.  Exhaustive over q; per q only the nearest integers to
    q x + theta can violate (the annulus width is < 1/2q).
    """
    if q2 <= q1 + 1:
        return None
    if isinstance(x, Fraction) and (isinstance(theta, ThetaSpec) and theta.is_zero):
        res = _scan_fraction(x, psi1, psi2, Fraction(c).limit_denominator(10**9), q1, q2, False)
        return res[0] if res else None
    # float path (irrational x or nonzero theta): float prefilter with
    # high-precision confirmation
    xf, th = float(x), _theta_float(theta)
    chunk = 1 << 20
    for lo in range(q1 + 1, q2, chunk):
        hi = min(lo + chunk, q2)
        q = np.arange(lo, hi, dtype=np.float64)
        base = q * xf + th
        r = np.round(base)
        resid = np.abs(base - r)
        bound = eval_psi(psi1, q) - float(c) * eval_psi(psi2, q)
        cand = np.flatnonzero(resid < (bound * q) * (1 + 1e-6) + 1e-12)
        for i in cand:
            qq = int(q[i])
            for p in (int(r[i]), int(r[i]) - 1, int(r[i]) + 1):
                with mp.workdps(50):
                    tmp = abs(mp.mpf(xf) - (p - (mp.mpf(th))) / qq)
                    if tmp < eval_psi(psi1, qq) - float(c) * eval_psi(psi2, qq):
                        return (p, qq)
    return None


def violation_scan_all(x, psi1, psi2, c, theta: ThetaSpec, q1: int, q2: int) -> list:
    """All violations in (q1, q2), exhaustive (used for GapReport)."""
    if q2 <= q1 + 1:
        return []
    if isinstance(x, Fraction) and theta.is_zero:
        return _scan_fraction(x, psi1, psi2, Fraction(c).limit_denominator(10**9), q1, q2, True)
    out = []
    lo = q1
    while True:
        hit = violation_search(x, psi1, psi2, c, theta, lo, q2)
        if hit is None:
            return out
        out.append(hit)
        lo = hit[1]


# --------------------------------------------------- gap-point construction ----


@dataclass
class GapPoint:
    """A rational point placed in the annuli of two prime scales q1 < q2."""

    x: Fraction
    q1: int
    r1: int
    q2: int
    r2: int


@dataclass
class GapReport:
    q1: int
    q2: int
    searched: tuple[int, int]
    violations: list
    cutoff: int
    x_repr: str = ""

    def as_dict(self) -> dict:
        return {
            "q1": self.q1,
            "q2": self.q2,
            "searched": list(self.searched),
            "violations": [list(v) for v in self.violations],
            "cutoff": self.cutoff,
            "x": self.x_repr,
        }


def _cf_prefix(r1: int, q1: int) -> tuple[int, int]:
    """Penultimate convergent (p', q') of r1/q1 (exact)."""
    a = []
    num, den = r1, q1
    while den:
        a.append(num // den)
        num, den = den, num % den
    p0, q0, p1, q1_ = 1, 0, a[0], 1
    for ak in a[1:]:
        p0, q0, p1, q1_ = p1, q1_, ak * p1 + p0, ak * q1_ + q0
    return p0, q0


def construct_gap_point(q1: int, r1: int, c: Fraction = Fraction(1, 2), tau: int = 3,
                        prime_table: np.ndarray | None = None) -> GapPoint:
    """Build x (exact rational) lying in the [ (1-c) q^-tau, q^-tau ] annulus
    of both (r1, q1) and a second prime scale q2 in (1.05 q1^(tau-1), 1.9 q1^(tau-1)).

    The construction extends the continued fraction of r1/q1 by one digit so
    that r1/q1 is the penultimate convergent of the new fraction p2/q2 (then
    |x - r1/q1| is pinned near 1/(q1 q2)), and closes with the tail value
    (3/2) q2^(tau-2) so that |x - p2/q2| = 2/(3 q2^tau + 2 q1 q2) lands at
    about two thirds of the annulus scale at q2.  Both memberships are
    verified exactly before returning.
    """
    if math.gcd(r1, q1) != 1 or not (0 < r1 < q1):
        raise ValueError("r1 must be a reduced residue of q1")
    if tau != int(tau) or tau < 3:
        raise ValueError("construction requires integer tau >= 3")
    pprev, qprev = _cf_prefix(r1, q1)
    lo, hi = 1.05 * q1 ** (tau - 1), 1.9 * q1 ** (tau - 1)
    if prime_table is None:
        prime_table = sieve_upto(int(hi) + 1)
    cand = prime_table[(prime_table > lo) & (prime_table < hi)]
    cand = cand[(cand % q1) == (qprev % q1)]
    if len(cand) == 0:
        raise ValueError(f"no admissible prime q2 for (q1={q1}, r1={r1})")
    q2 = int(cand[0])
    a_next = (q2 - qprev) // q1
    p2 = a_next * r1 + pprev
    # continued-fraction tail t = (3/2) q2^(tau-2), written over denominator 2:
    # x = (t p2 + r1)/(t q2 + q1) gives, with |p2 q1 - r1 q2| = 1,
    #   |x - p2/q2| = 2/(q2 (tail_num q2 + 2 q1))  ->  dist * q2^tau ~ 2/3
    #   |x - r1/q1| = tail_num/(q1 (tail_num q2 + 2 q1))  ->  dist * q1^tau ~ q1^(tau-1)/q2
    tail_num = 3 * q2 ** (tau - 2)
    x = Fraction(tail_num * p2 + 2 * r1, tail_num * q2 + 2 * q1)
    for (r, q) in ((r1, q1), (p2, q2)):
        dist = abs(x - Fraction(r, q))
        hi_b = Fraction(1, q**tau)
        lo_b = (1 - c) * hi_b
        if not (lo_b <= dist <= hi_b):
            raise ValueError(
                f"construction left the annulus at q={q}: dist*q^tau = {float(dist * q**tau)}"
            )
    return GapPoint(x=x, q1=q1, r1=r1, q2=q2, r2=p2)


def gap_report(point: GapPoint, psi1: ApproxFunction, psi2: ApproxFunction,
               c, theta: ThetaSpec, cutoff: int) -> GapReport:
    """Exhaustive violation scan between the point's two scales."""
    violations = violation_scan_all(point.x, psi1, psi2, c, theta, point.q1, point.q2)
    return GapReport(
        q1=point.q1,
        q2=point.q2,
        searched=(point.q1, point.q2),
        violations=violations,
        cutoff=cutoff,
        x_repr=f"{point.x.numerator}/{point.x.denominator}",
    )


def gap_cutoff_scan(psi1: ApproxFunction, psi2: ApproxFunction, c, theta: ThetaSpec,
                    q1_values: Sequence[int]) -> tuple[Optional[int], dict]:
    """Scan q1 downward; report the largest q1 whose construction admits a
    violation (None when every tested scale is clean).

    The cutoff of the gap lemma is existential in the underlying theory; it
    is determined empirically per parameter set and reported, never assumed.
    """
    table = sieve_upto(int(1.9 * max(q1_values) ** 2) + 1)
    first_bad = None
    tested = []
    for q1 in sorted(q1_values, reverse=True):
        clean = True
        for r1 in range(1, q1):
            if math.gcd(r1, q1) != 1:
                continue
            try:
                pt = construct_gap_point(q1, r1, prime_table=table)
            except ValueError:
                continue
            if violation_search(pt.x, psi1, psi2, c, theta, pt.q1, pt.q2) is not None:
                clean = False
                break
        tested.append((q1, clean))
        if not clean and first_bad is None:
            first_bad = q1
            break
    return first_bad, {"tested": tested}
