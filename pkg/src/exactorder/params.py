"""Approximation functions and the exponent algebra.

The measure construction is parametrized by a Diophantine exponent gamma,
two approximation orders tau1 >= tau2 >= 2, and a slack epsilon > 0.  From
these it derives

    beta     = ((tau1 - 1) / gamma)^2
    beta_eps = beta - epsilon
    delta    = (beta_eps (1 - eps) - tau2 (1 + eps)^2) / (tau2 (beta_eps - 1)(1 + eps))
    alpha    = 2 (beta - tau2) / (tau2 (beta - 1))

A parameter set is admissible when beta_eps > tau2 >= 2 and delta - eps > 0.
As eps -> 0, delta -> alpha/2; the decay rate alpha is the headline exponent
and delta - eps is what the finite-scale checks are measured against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, ConfigError

FAMILY_POWER = "power"
FAMILY_POWER_LOG = "power_log"
_FAMILIES = (FAMILY_POWER, FAMILY_POWER_LOG)


@dataclass(frozen=True)
class ApproxFunction:
    """A positive decreasing approximation function with known order.

    family 'power':      psi(q) = prefactor * q^(-tau)
    family 'power_log':  psi(q) = prefactor * q^(-tau) * (log q)^log_power

    The family is closed-parametric on purpose: the order lambda(psi)
    (the limit of -log psi(q)/log q) is then exactly ``tau``.
    """

    family: str = FAMILY_POWER
    tau: float = 3.0
    log_power: float = 0.0
    prefactor: float = 1.0

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ConfigError(f"unknown approximation family {self.family!r}")
        if not (self.tau > 0):
            raise ConfigError("tau must be positive")
        if not (self.prefactor > 0):
            raise ConfigError("prefactor must be positive")
        if self.family == FAMILY_POWER and self.log_power != 0.0:
            raise ConfigError("log_power requires the power_log family")

    def __call__(self, q):
        return eval_psi(self, q)

    def mp_value(self, q: int):
        """psi(q) at the caller's mpmath working precision.

        Phase slopes q x_q are reduced mod 1 against integers up to ~1e14,
        where double precision has long since run out; this is the entry
        point for carrying psi exactly into that arithmetic."""
        import mpmath as mp
        out = mp.mpf(self.prefactor) * mp.power(q, -mp.mpf(self.tau))
        if self.family == FAMILY_POWER_LOG:
            out = out * mp.log(q) ** mp.mpf(self.log_power)
        return out


def eval_psi(f: ApproxFunction, q):
    """psi(q) for integer q >= 2 (scalar or array)."""
    qa = np.asarray(q, dtype=float)
    if np.any(qa < 2):
        raise ValueError("eval_psi requires q >= 2")
    out = f.prefactor * qa ** (-f.tau)
    if f.family == FAMILY_POWER_LOG:
        out = out * np.log(qa) ** f.log_power
    if np.isscalar(q) or qa.ndim == 0:
        return float(out)
    return out


def order_of(f: ApproxFunction) -> float:
    """The order lambda(psi) = -lim log psi(q)/log q, exact from parameters."""
    return f.tau


def fit_order(f: ApproxFunction, q_lo: float = 1e3, q_hi: float = 1e6, n: int = 200) -> float:
    """Numeric counterpart of order_of: regression of log psi on log q.

    For the power_log family a log log q regressor is included, otherwise
    the slowly varying factor biases the plain slope well past 0.05.
    """
    qs = np.geomspace(q_lo, q_hi, n)
    y = np.log(eval_psi(f, qs))
    lq = np.log(qs)
    if f.family == FAMILY_POWER_LOG:
        design = np.column_stack([lq, np.log(lq), np.ones_like(lq)])
    else:
        design = np.column_stack([lq, np.ones_like(lq)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return -float(coef[0])


@dataclass(frozen=True)
class ExponentSet:
    """Derived exponents for one parameter choice (see module docstring)."""

    gamma: float
    tau1: float
    tau2: float
    epsilon: float
    beta: float
    beta_eps: float
    delta: float
    alpha: float
    admissible: bool
    violated_condition: str | None = field(default=None)

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "beta_eps": self.beta_eps,
            "delta": self.delta,
            "alpha": self.alpha,
            "admissible": self.admissible,
            "violated_condition": self.violated_condition,
        }


def derive_exponents(gamma: float, tau1: float, tau2: float, epsilon: float = 0.05,
                     strict: bool = True) -> ExponentSet:
    """Compute beta, beta_eps, delta, alpha and check admissibility.

    With ``strict`` (default) an inadmissible set raises AdmissibilityError
    naming the violated inequality; with strict=False the flagged ExponentSet
    is returned so reports can carry the failure verbatim.
    """
    if not (gamma >= 1):
        raise ConfigError("gamma must be >= 1")
    if not (tau1 >= tau2):
        raise ConfigError("tau1 must be >= tau2")
    if not (tau2 >= 2):
        raise ConfigError("tau2 must be >= 2")
    if not (epsilon > 0):
        raise ConfigError("epsilon must be positive")

    beta = ((tau1 - 1.0) / gamma) ** 2
    beta_eps = beta - epsilon
    violated = None
    delta = math.nan
    if beta_eps <= tau2:
        violated = "beta_eps <= tau2"
    else:
        delta = (beta_eps * (1 - epsilon) - tau2 * (1 + epsilon) ** 2) / (
            tau2 * (beta_eps - 1) * (1 + epsilon)
        )
        if not (delta - epsilon > 0):
            violated = "delta - epsilon <= 0"
    if beta > 1:
        alpha = 2 * (beta - tau2) / (tau2 * (beta - 1))
    else:
        alpha = math.nan

    es = ExponentSet(
        gamma=gamma, tau1=tau1, tau2=tau2, epsilon=epsilon,
        beta=beta, beta_eps=beta_eps, delta=delta, alpha=alpha,
        admissible=violated is None, violated_condition=violated,
    )
    if strict and violated is not None:
        raise AdmissibilityError(
            f"inadmissible parameters (gamma={gamma}, tau1={tau1}, tau2={tau2}, "
            f"epsilon={epsilon}): {violated}",
            violated=violated,
        )
    return es


def tau_threshold(gamma: float) -> float:
    """Smallest tau for which the homogeneous (tau1=tau2=tau) algebra closes.

    This is the fixed point of beta(tau) = tau at epsilon = 0, i.e. the root
    of ((tau-1)/gamma)^2 = tau above 1:

        tau* = (2 + gamma^2 + sqrt((2 + gamma^2)^2 - 4)) / 2

    For gamma = 1 this is (3 + sqrt 5)/2.
    """
    g2 = gamma * gamma
    return (2 + g2 + math.sqrt((2 + g2) ** 2 - 4)) / 2


def c_of_M(M: int, epsilon: float) -> float:
    """The per-scale annulus shrink factor M^(-epsilon/100), in (0, 1)."""
    if M < 2:
        raise ValueError("M must be >= 2")
    if not (epsilon > 0):
        raise ValueError("epsilon must be positive")
    return float(M) ** (-epsilon / 100.0)
