import math

import pytest

from perelman_nspace import runner
from perelman_nspace.config import load_config, shipped_config_path
from perelman_nspace.geometry import FlowSolution
from perelman_nspace.potential import Mode, PotentialSolution

LADDER = [2**k for k in range(7, 15)]
# c with f = (n/2) ln(a/tau) + c equal to 1 on the n=2 soliton a = 2 tau
SOLITON_C = 1.0 - math.log(2.0)


@pytest.fixture(scope="session")
def torus():
    return FlowSolution.flat_torus(n=1, T=2.0, points_per_dim=64, tau_min=0.1)


@pytest.fixture(scope="session")
def torus256():
    return FlowSolution.flat_torus(n=1, T=2.0, points_per_dim=256, tau_min=0.1)


@pytest.fixture(scope="session")
def sphere():
    return FlowSolution.round_sphere(n=2, T=2.0, a0=0.0, tau_min=0.1)


@pytest.fixture(scope="session")
def const0():
    return PotentialSolution.constant(0.0)


@pytest.fixture(scope="session")
def soliton():
    return PotentialSolution.constant(SOLITON_C)


@pytest.fixture(scope="session")
def spectral():
    return PotentialSolution.torus_spectral(1.0, [Mode(0.5, (1,))])


@pytest.fixture(scope="session")
def tampered():
    return PotentialSolution.torus_spectral(1.0, [Mode(0.5, (1,))], decay_scale=0.9)


@pytest.fixture(scope="session")
def shipped():
    """Configs and full reports for the three shipped experiments, computed once."""
    out = {}
    for name in ("torus_constant", "sphere_soliton", "torus_spectral"):
        cfg = load_config(shipped_config_path(f"{name}.json"))
        out[name] = (cfg, runner.run(cfg))
    return out


def rows_at(report, lam):
    return sorted((r for r in report.rows if r["lambda"] == lam), key=lambda r: r["N"])


_VERDICTS = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion."""

    def record(label, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {label}: {detail}"
        print(line)
        _VERDICTS.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
