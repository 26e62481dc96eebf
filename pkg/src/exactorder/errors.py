"""Error taxonomy shared by the library and the CLI.

Each error class carries a process exit code so the CLI can map failures
to distinct statuses without string matching:

    0  success
    1  unexpected / generic failure (also certification, precision, resolution)
    2  configuration or schema problem
    3  inadmissible parameters
    4  resource budget exceeded
    5  strict-mode check failed
"""

from __future__ import annotations


class ExactOrderError(Exception):
    """Base class for all structured errors raised by this package."""

    exit_code = 1


class ConfigError(ExactOrderError):
    """Malformed configuration, bad argument combination, or schema violation."""

    exit_code = 2


class AdmissibilityError(ExactOrderError):
    """Exponent parameters violate an admissibility inequality.

    ``violated`` names the inequality that failed, e.g. ``"beta_eps <= tau2"``.
    """

    exit_code = 3

    def __init__(self, message: str, violated: str):
        super().__init__(message)
        self.violated = violated


class BudgetError(ExactOrderError):
    """A computation would exceed the declared memory/window budget.

    ``required`` reports the resource level that would have been needed.
    """

    exit_code = 4

    def __init__(self, message: str, required=None):
        super().__init__(message)
        self.required = required


class StrictModeError(ExactOrderError):
    """A check that is advisory in desk mode failed in paper-strict mode."""

    exit_code = 5


class PrecisionError(ExactOrderError):
    """Requested accuracy could not be certified (never silently rounded)."""


class CertificationError(ExactOrderError):
    """A decay/truncation certificate could not be established.

    ``xi`` is the offending abscissa when one exists.
    """

    def __init__(self, message: str, xi: float | None = None):
        super().__init__(message)
        self.xi = xi


class ResolutionError(ExactOrderError):
    """A grid is too coarse for the requested construction.

    ``required`` is the minimum resolution that would succeed, when known.
    """

    def __init__(self, message: str, required=None):
        super().__init__(message)
        self.required = required
