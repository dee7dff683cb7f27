import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perelman_nspace.asymptotics import central_derivative, fit_rate, richardson
from perelman_nspace.errors import DegenerateFitError

LADDER = [2**k for k in range(7, 15)]


def test_exact_first_order_law():
    fit = fit_rate([(N, 5 + 3 / N) for N in LADDER])
    assert fit.limit == pytest.approx(5, abs=1e-6)
    assert fit.rate == pytest.approx(1.0, abs=1e-6)
    assert fit.constant == pytest.approx(3, abs=1e-6)


def test_second_order_law():
    fit = fit_rate([(N, 2 - 7 / N**2) for N in LADDER])
    assert fit.rate == pytest.approx(2.0, abs=1e-3)
    assert fit.constant == pytest.approx(-7, rel=1e-3)


def test_mixed_law_top_half():
    W = -1.3
    ladder = [(N, W + 1 / N + 5 / N**1.5) for N in LADDER]
    assert 0.95 <= fit_rate(ladder, reference=W).rate <= 1.05
    assert 0.95 <= fit_rate(ladder).rate <= 1.05


@settings(max_examples=40, deadline=None)
@given(
    limit=st.floats(-10, 10),
    const=st.floats(1.0, 50).flatmap(lambda c: st.sampled_from([c, -c])),
    rate=st.floats(0.5, 2.0),
)
def test_recovers_pure_power_laws(limit, const, rate):
    ladder = [(N, limit + const * N**-rate) for N in LADDER]
    fit = fit_rate(ladder, reference=limit)
    assert fit.rate == pytest.approx(rate, abs=1e-5)
    assert fit.constant == pytest.approx(const, rel=1e-4)


def test_degenerate_ladder():
    with pytest.raises(DegenerateFitError):
        fit_rate([(N, 1.0) for N in LADDER], reference=1.0)
    with pytest.raises(DegenerateFitError):
        fit_rate([(N, -0.5 + 1e-15 / N) for N in LADDER], reference=-0.5, floor=1e-12)


def test_bad_ladders():
    with pytest.raises(ValueError):
        fit_rate([(128, 1.0), (256, 0.5), (512, 0.25)])
    with pytest.raises(ValueError):
        fit_rate([(256, 1.0), (128, 0.5), (512, 0.25), (1024, 0.1)])


def test_richardson():
    assert richardson(5 + 3 / 100, 5 + 3 / 200, 1) == pytest.approx(5, abs=1e-14)
    q = lambda N: 2 - 7 / N**2  # noqa: E731
    extrap = richardson(q(100), q(200), 1)
    assert abs(extrap - 2) < abs(q(100) - 2)
    assert extrap != pytest.approx(2, abs=1e-12)
    with pytest.raises(ValueError):
        richardson(1.0, 1.0, 0)


def test_central_derivative():
    assert central_derivative(lambda x: x * x, 3.0) == pytest.approx(6.0, abs=1e-9)
    assert central_derivative(lambda x: 4.2, 1.0) == 0.0
    assert central_derivative(np.sin, 0.0) == pytest.approx(1.0, abs=1e-12)
    assert central_derivative(math.exp, 1.0, 1e-2) == pytest.approx(math.e, rel=1e-9)
    with pytest.raises(ValueError):
        central_derivative(math.log, 1.0, 1e-2, domain=(0.995, 2.0))
