"""Radius formula branches, frozen hand values, schedule monotonicity."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drostream.ambiguity import ConcentrationParams, radius, study_schedule


@pytest.fixture
def params():
    return ConcentrationParams(c1=2.0, c2=1.0, a=2.0, m=3)


def test_radius_large_n_branch_hand_value(params):
    # log(2 / 0.95) = 0.74444 <= n = 1, cube root applies
    assert radius(params, 0.95, 1) == pytest.approx(
        np.log(2.0 / 0.95) ** (1.0 / 3.0), abs=1e-12
    )
    assert radius(params, 0.95, 1) == pytest.approx(0.9063, abs=1e-4)


def test_radius_small_n_branch_hand_value(params):
    # log(2000) = 7.6009 > n = 5, exponent 1/a = 1/2
    assert radius(params, 0.001, 5) == pytest.approx(
        (np.log(2000.0) / 5.0) ** 0.5, abs=1e-12
    )
    assert radius(params, 0.001, 5) == pytest.approx(1.2330, abs=1e-4)


def test_radius_branch_boundary_continuous(params):
    for n in (1, 3, 10):
        beta = params.c1 * np.exp(-params.c2 * n)
        big = (np.log(params.c1 / beta) / (params.c2 * n)) ** (1.0 / 3.0)
        small = (np.log(params.c1 / beta) / (params.c2 * n)) ** (1.0 / params.a)
        assert abs(big - small) < 1e-12
        assert radius(params, beta, n) == pytest.approx(1.0, abs=1e-12)


def test_radius_rejects_beta_at_least_c1():
    # beta >= c1 makes log(c1/beta) <= 0; needs c1 < 1 to be reachable
    tight = ConcentrationParams(c1=0.5, c2=1.0, a=2.0, m=3)
    with pytest.raises(ValueError):
        radius(tight, 0.7, 3)
    with pytest.raises(ValueError):
        radius(tight, 0.5, 3)


def test_radius_monotone_in_n_and_beta(params):
    rs = [radius(params, 0.5, n) for n in range(1, 40)]
    assert all(a > b for a, b in zip(rs, rs[1:]))
    bs = [radius(params, b, 7) for b in (0.9, 0.5, 0.1, 0.01)]
    assert all(a < b for a, b in zip(bs, bs[1:]))


def test_exponent_uses_sample_dimension(params):
    # m = 1 still divides by max{2, m} = 2
    p1 = ConcentrationParams(c1=2.0, c2=1.0, a=2.0, m=1)
    assert radius(p1, 0.95, 1) == pytest.approx(np.log(2 / 0.95) ** 0.5, abs=1e-12)
    p10 = ConcentrationParams(c1=2.0, c2=1.0, a=2.0, m=10)
    assert radius(p10, 0.95, 1) == pytest.approx(
        np.log(2 / 0.95) ** 0.1, abs=1e-12
    )


def test_study_schedule_values():
    sched = study_schedule()
    assert sched.beta(1) == pytest.approx(0.95)
    assert sched.beta(4) == pytest.approx(0.95 * np.exp(-1.0), abs=1e-12)
    assert sched.beta(4) == pytest.approx(0.34949, abs=1e-4)
    assert sched.beta(9) < sched.beta(4)


def test_study_schedule_summable_prefix():
    sched = study_schedule()
    betas = [sched.beta(n) for n in range(1, 10_001)]
    assert all(a > b for a, b in zip(betas, betas[1:]))
    assert sum(betas) < 20.0  # bounded partial sum, tail decays like e^{-sqrt n}


@given(
    n=st.integers(1, 500),
    beta=st.floats(1e-6, 0.99),
    m=st.integers(1, 12),
    a=st.floats(1.1, 4.0),
)
@settings(max_examples=80, deadline=None)
def test_radius_positive_and_branch_consistent(n, beta, m, a):
    p = ConcentrationParams(c1=2.0, c2=1.0, a=a, m=m)
    r = radius(p, beta, n)
    assert r > 0
    t = np.log(p.c1 / beta) / p.c2
    expo = 1.0 / max(2.0, m) if n >= t else 1.0 / a
    assert r == pytest.approx((t / n) ** expo, rel=1e-12)
