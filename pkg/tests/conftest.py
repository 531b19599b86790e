import numpy as np
import pytest

from mimo_sdof.channel import FadingParams, generate_channel
from mimo_sdof.phaseplan import AntennaConfig, Regime, classify_regime

# Acceptance outcomes collected by tests/test_acceptance.py, echoed at the end
# of the run so they survive pytest's output capture.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rayleigh():
    return FadingParams.rayleigh()


def make_channel(cfg, plan, seed):
    return generate_channel(cfg, None, FadingParams.rayleigh(), seed, slots=max(plan.total_slots, 1))


def grid_configs(max_m=6, max_n=6, regimes=None):
    out = []
    for m in range(1, max_m + 1):
        for n in range(1, max_n + 1):
            cfg = AntennaConfig(m, n)
            if regimes is None or classify_regime(cfg) in regimes:
                out.append(cfg)
    return out


DATA_REGIMES = (Regime.DECODING, Regime.ALIGNMENT, Regime.CAPPED)


def rel_err(est, ref):
    return float(np.linalg.norm(est - ref) / np.linalg.norm(ref))
