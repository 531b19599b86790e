"""Closed-form sum-SDoF bounds, evaluated in exact rational arithmetic.

Regime boundaries are compared on integers (``2M <= N`` rather than
``M <= N/2``) so no evaluation ever touches floating point.
"""

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .phaseplan import AntennaConfig, classify_regime

TABLE3_M = (64, 128, 256, 512, 1024, 2048)
TABLE3_N = (64, 128, 256, 512, 1024)


def _cfg(config):
    return (config.M, config.N)


def lower_bound(config) -> Fraction:
    """Achievable sum-SDoF of the output-feedback schemes."""
    m, n = _cfg(config)
    if 2 * m <= n:
        return Fraction(0)
    if m <= n:
        return Fraction(2 * n * (2 * m - n), 4 * m - n)
    if m <= 2 * n:
        return Fraction(2 * m * n, m + 2 * n)
    return Fraction(n)


def exact_sdof(config) -> Optional[Fraction]:
    """Sum-SDoF where lower and upper bounds meet, else None."""
    m, n = _cfg(config)
    if 2 * m <= n:
        return Fraction(0)
    if m == n:
        return Fraction(2 * n, 3)
    if 2 * n <= m:
        return Fraction(n)
    return None


def upper_bound(config) -> Fraction:
    m, n = _cfg(config)
    if 2 * m <= n:
        return Fraction(0)
    if 4 * m <= 3 * n:
        return Fraction(n * (2 * m - n), m)
    if m <= n:
        return Fraction(2 * n, 3)
    if 4 * m <= 5 * n:
        return Fraction(4 * m - 2 * n, 3)
    return Fraction(n)


def xc_bound(config) -> Fraction:
    """Sum-SDoF of the MIMO X channel with delayed CSIT and output feedback."""
    m, n = _cfg(config)
    if 2 * m <= n:
        return Fraction(0)
    if m <= n:
        return Fraction(n * (2 * m - n), m)
    return Fraction(n)


def perfect_csit_bound(config) -> Fraction:
    """Sum-SDoF of the MIMO interference channel with perfect CSIT."""
    m, n = _cfg(config)
    if 2 * m <= n:
        return Fraction(0)
    if 3 * m <= 2 * n:
        return Fraction(4 * m - 2 * n)
    if m <= n:
        return Fraction(2 * n, 3)
    if m <= 2 * n:
        return Fraction(4 * m - 2 * n, 3)
    return Fraction(2 * n)


@dataclass(frozen=True)
class SDoFReport:
    config: AntennaConfig
    lower: Fraction
    upper: Fraction
    exact: Optional[Fraction]
    regime: str


def report(config):
    return SDoFReport(config, lower_bound(config), upper_bound(config), exact_sdof(config), str(classify_regime(config)))


def fmt4(q):
    """Four-decimal rendering; integers print bare (``64``, not ``64.0000``)."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    # round half up on the exact rational
    scaled = (q * 10000 + Fraction(1, 2)).__floor__()
    return f"{scaled // 10000}.{scaled % 10000:04d}"


def table3(ms=TABLE3_M, ns=TABLE3_N):
    """Sum-SDoF grid ``{(M, N): Fraction}`` over the given antenna counts."""
    return {(m, n): lower_bound(AntennaConfig(m, n)) for m in ms for n in ns}


def table3_csv(ms=TABLE3_M, ns=TABLE3_N):
    """Render the grid as CSV with one row per M, one column per N."""
    grid = table3(ms, ns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M\\N", *ns])
    for m in ms:
        w.writerow([m, *(fmt4(grid[m, n]) for n in ns)])
    return buf.getvalue()


def bounds_csv(configs):
    """Long-form rows ``M,N,regime,lower,upper,exact`` (decimal and rational)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["M", "N", "regime", "lower", "upper", "exact", "lower_rational", "upper_rational"])
    for cfg in configs:
        r = report(cfg)
        exact = "" if r.exact is None else fmt4(r.exact)
        w.writerow([cfg.M, cfg.N, r.regime, fmt4(r.lower), fmt4(r.upper), exact, str(r.lower), str(r.upper)])
    return buf.getvalue()
