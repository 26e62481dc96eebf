"""Small shared helpers: sieves, grids, deterministic reductions, serialization."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

# ---------------------------------------------------------------- primes ----


def sieve_upto(n: int) -> np.ndarray:
    """All primes <= n, ascending, as int64."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    mask = np.ones(n + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if mask[p]:
            mask[p * p :: p] = False
    return np.flatnonzero(mask).astype(np.int64)


def primes_in_range(lo: int, hi: int) -> np.ndarray:
    """Primes in the half-open interval [lo, hi), ascending."""
    pr = sieve_upto(max(hi - 1, 1))
    return pr[(pr >= lo) & (pr < hi)]


# ------------------------------------------------------------ reductions ----


def neumaier_sum(values: Iterable[float]) -> float:
    """Compensated (Neumaier) summation in a fixed left-to-right order."""
    total = 0.0
    comp = 0.0
    for v in values:
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
    return total + comp


def ordered_chunk_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Apply ``fn`` to chunks of ``items`` and concatenate results in order.

    The chunking is fixed by len(items) and ``threads``; outputs are merged
    in ascending chunk index, so the result is independent of how many
    workers actually execute (threads only affects scheduling, never order).
    """
    n = len(items)
    if n == 0:
        return []
    threads = max(1, int(threads))
    bounds = np.linspace(0, n, threads + 1).astype(int)
    chunks = [items[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if threads == 1 or len(chunks) == 1:
        results = [fn(ch) for ch in chunks]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, chunks))
    out: list = []
    for r in results:
        out.extend(r)
    return out


# ----------------------------------------------------------------- grids ----


@dataclass
class GridFunction:
    """A real function sampled on a uniform grid.

    ``x0`` is the first sample's abscissa and ``h`` the spacing.  Used only
    as a cross-check oracle (dense transforms, quadrature); the production
    paths are closed-form.
    """

    x0: float
    h: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(len(self.samples))

    @property
    def domain(self) -> tuple[float, float]:
        return (self.x0, self.x0 + self.h * (len(self.samples) - 1))

    def mass(self) -> float:
        """Trapezoid-rule integral over the domain."""
        return float(np.trapezoid(self.samples, dx=self.h))


def log_spaced_ints(lo: float, hi: float, n: int) -> np.ndarray:
    """Distinct integers, roughly log-spaced in [lo, hi]."""
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    vals = np.unique(np.round(np.geomspace(max(lo, 1.0), hi, n)).astype(np.int64))
    return vals[(vals >= lo) & (vals <= hi)]


# ---------------------------------------------------------- serialization ----

SCHEMA_VERSION = "1"


def _coerce(obj):
    if isinstance(obj, dict):
        return {k: _coerce(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_coerce(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_coerce(v) for v in obj.tolist()]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def json_report(payload: dict) -> str:
    """Canonical JSON: schema-versioned, key-sorted, newline-terminated.

    Deterministic for identical payloads (floats via repr).
    """
    body = dict(_coerce(payload))
    body.setdefault("schema_version", SCHEMA_VERSION)
    return json.dumps(body, sort_keys=True, indent=2) + "\n"


def write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        fh.write(json_report(payload))


def coeff_csv(rows: Iterable[tuple], header: Sequence[str] = ("s", "re", "im", "abs", "band")) -> str:
    """Render coefficient rows to CSV text with the standard header."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_csv(path, rows: Iterable[tuple], header: Sequence[str] = ("s", "re", "im", "abs", "band")) -> None:
    with open(path, "w") as fh:
        fh.write(coeff_csv(rows, header))


def parse_range(text: str) -> tuple[float, float]:
    """Parse 'lo:hi' into a float pair (used by several CLI flags)."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"expected lo:hi, got {text!r}")
    lo, hi = float(parts[0]), float(parts[1])
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError(f"bad range {text!r}")
    return lo, hi
