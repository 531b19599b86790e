"""Phase-duration plans, security/decoding constraints and their optimization."""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from . import kernels
from .exceptions import InvalidParameterError


class Scheme(str, Enum):
    SILENT = "silent"
    DECODING = "decoding"
    ALIGNMENT = "alignment"
    ALIGNMENT_CAPPED = "alignment-capped"
    IA_D = "ia-d"

    def __str__(self):
        return self.value


class Regime(str, Enum):
    SILENT = "M<=N/2"
    DECODING = "N/2<M<=N"
    ALIGNMENT = "N<M<=2N"
    CAPPED = "2N<M"

    def __str__(self):
        return self.value


ALIGNMENT_FAMILY = (Scheme.ALIGNMENT, Scheme.ALIGNMENT_CAPPED, Scheme.IA_D)


@dataclass(frozen=True)
class AntennaConfig:
    """``M`` antennas per transmitter, ``N`` per receiver."""

    M: int
    N: int

    def __post_init__(self):
        if int(self.M) != self.M or int(self.N) != self.N or self.M < 1 or self.N < 1:
            raise InvalidParameterError(f"antenna counts must be positive integers, got M={self.M}, N={self.N}")

    @property
    def regime(self):
        return classify_regime(self)

    @property
    def effective_M(self):
        """Transmit antennas actually driven by the alignment schemes (capped at 2N)."""
        return min(self.M, 2 * self.N)


def classify_regime(config):
    m, n = config.M, config.N
    if 2 * m <= n:
        return Regime.SILENT
    if m <= n:
        return Regime.DECODING
    if m <= 2 * n:
        return Regime.ALIGNMENT
    return Regime.CAPPED


DEFAULT_SCHEME = {
    Regime.SILENT: Scheme.SILENT,
    Regime.DECODING: Scheme.DECODING,
    Regime.ALIGNMENT: Scheme.ALIGNMENT,
    Regime.CAPPED: Scheme.ALIGNMENT_CAPPED,
}


def default_scheme(config):
    return DEFAULT_SCHEME[classify_regime(config)]


@dataclass(frozen=True)
class PhasePlan:
    """Slot counts of the AN phase, each data phase, and the recurrence phase.

    The IA-D comparison scheme spends ``tau1`` slots on each of its two
    separate AN phases.
    """

    scheme: Scheme
    tau1: int
    tau2: int
    tau3: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        for name in ("tau1", "tau2", "tau3"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidParameterError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))
        if self.scheme == Scheme.DECODING and self.tau3 != 0:
            raise InvalidParameterError("the decoding scheme has no recurrence phase (tau3 must be 0)")

    @property
    def total_slots(self):
        if self.scheme == Scheme.IA_D:
            return 2 * self.tau1 + 2 * self.tau2 + self.tau3
        return self.tau1 + 2 * self.tau2 + self.tau3

    def taus(self):
        return self.tau1, self.tau2, self.tau3

    def delivered_symbols(self, config):
        if self.scheme == Scheme.SILENT:
            return 0
        if self.scheme == Scheme.DECODING:
            return 2 * config.N * self.tau2
        return 2 * config.effective_M * self.tau2

    def sdof(self, config):
        """Data symbols per slot of this plan, as an exact rational."""
        if self.total_slots == 0:
            return Fraction(0)
        return Fraction(self.delivered_symbols(config), self.total_slots)


SILENT_PLAN = PhasePlan(Scheme.SILENT, 0, 0, 0)


def _require(plan, schemes, what):
    if plan.scheme not in schemes:
        raise InvalidParameterError(f"{what} does not apply to scheme {plan.scheme}")


def check_security_decoding(config, plan):
    """``N(tau1 + tau2) <= 2 M tau1``."""
    _require(plan, (Scheme.DECODING,), "the decoding security constraint")
    return config.N * (plan.tau1 + plan.tau2) <= 2 * config.M * plan.tau1


def check_security_alignment(config, plan):
    """``N(tau1 + tau2) <= 2 N tau1``, i.e. ``tau2 <= tau1``."""
    _require(plan, ALIGNMENT_FAMILY, "the alignment security constraint")
    return config.N * (plan.tau1 + plan.tau2) <= 2 * config.N * plan.tau1


def check_decoding_alignment(config, plan):
    """``M tau2 <= N(tau2 + tau3)`` with M capped at 2N."""
    _require(plan, ALIGNMENT_FAMILY, "the alignment decoding constraint")
    return config.effective_M * plan.tau2 <= config.N * (plan.tau2 + plan.tau3)


def plan_is_valid(config, plan):
    """True when `plan` satisfies every constraint that applies to its scheme."""
    if plan.scheme == Scheme.SILENT:
        return True
    if plan.scheme == Scheme.DECODING:
        return check_security_decoding(config, plan)
    return check_security_alignment(config, plan) and check_decoding_alignment(config, plan)


def optimal_plan(config):
    """Closed-form optimal plan for the regime of `config`."""
    m, n = config.M, config.N
    regime = classify_regime(config)
    if regime == Regime.SILENT:
        return SILENT_PLAN
    if regime == Regime.DECODING:
        return PhasePlan(Scheme.DECODING, n, 2 * m - n, 0)
    if regime == Regime.ALIGNMENT:
        return PhasePlan(Scheme.ALIGNMENT, n, n, m - n)
    return PhasePlan(Scheme.ALIGNMENT_CAPPED, n, n, n)


def ia_d_plan(config):
    """IA-D plan: same per-phase durations as the alignment plan."""
    if classify_regime(config) != Regime.ALIGNMENT:
        raise InvalidParameterError("IA-D is defined for N < M <= 2N")
    p = optimal_plan(config)
    return PhasePlan(Scheme.IA_D, p.tau1, p.tau2, p.tau3)


def grid_oracle(config, scheme=None, max_tau=None):
    """Exhaustive integer search of the phase-duration program.

    Maximizes ``2N tau2 / (tau1 + 2 tau2)`` (decoding) or
    ``2M tau2 / (tau1 + 2 tau2 + tau3)`` (alignment, M capped at 2N) over
    ``[0, max_tau]^3`` subject to the scheme's constraints.  Ties go to the
    smallest total duration, then lexicographic ``(tau1, tau2, tau3)``.

    Returns
    -------
    (Fraction, PhasePlan)
    """
    n = config.N
    if scheme is None:
        scheme = default_scheme(config)
        if scheme == Scheme.SILENT:
            scheme = Scheme.DECODING
    scheme = Scheme(scheme)
    if max_tau is None:
        max_tau = 4 * n
    if max_tau < 2 * n:
        raise InvalidParameterError(f"max_tau must be at least 2N = {2 * n}, got {max_tau}")
    if scheme == Scheme.DECODING:
        kind, m = kernels.DECODING, config.M
    elif scheme in (Scheme.ALIGNMENT, Scheme.ALIGNMENT_CAPPED):
        kind, m = kernels.ALIGNMENT, config.effective_M
    else:
        raise InvalidParameterError(f"no phase-duration program for scheme {scheme}")
    num, den, t1, t2, t3 = kernels.grid_search(kind, m, n, max_tau)
    return Fraction(num, den), PhasePlan(scheme, t1, t2, t3)
