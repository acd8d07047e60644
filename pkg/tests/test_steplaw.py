import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from tailwalk.errors import ConstructionError, DomainError
from tailwalk.steplaw import CONFIG_A, CONFIG_B, CONFIG_C, StepLaw

LAWS = [CONFIG_A, CONFIG_B, CONFIG_C, StepLaw.shifted_pareto(1.5, 2.0, 7.0)]


def test_canonical_means():
    for law in (CONFIG_A, CONFIG_B, CONFIG_C):
        assert law.mean() == pytest.approx(-1.0, abs=1e-14)
    # alpha x_m / (alpha - 1) - m
    assert LAWS[3].mean() == pytest.approx(1.5 * 2.0 / 0.5 - 7.0)


def test_sf_closed_form_values():
    assert CONFIG_A.sf(-6.0) == 1.0
    assert CONFIG_A.sf(-100.0) == 1.0
    assert CONFIG_A.sf(0.0) == pytest.approx(7.0 ** -1.2, rel=1e-15)
    t = np.array([-2.25, -1.0, 0.0, 3.5, 1e3, 1e9])
    np.testing.assert_allclose(CONFIG_B.sf(t) * (1.0 + (t + 2.25)) ** 1.8, 1.0, rtol=1e-13)


def test_sf_matches_frequency(rng):
    n = 10 ** 6
    x = CONFIG_A.sample(rng, n)
    p = CONFIG_A.sf(0.0)
    assert abs(np.mean(x > 0.0) - p) < 3 * math.sqrt(p * (1 - p) / n)


def test_pareto_family_tail():
    law = LAWS[3]
    t = np.array([2.0 - 7.0, 0.0, 10.0, 1e6])
    np.testing.assert_allclose(law.sf(t), ((t + 7.0) / 2.0) ** -1.5, rtol=1e-13)
    assert law.left == pytest.approx(-5.0)


def test_pdf_support_and_normalisation():
    assert CONFIG_A.pdf(-7.0) == 0.0
    total, err = integrate.quad(CONFIG_A.pdf, -6.0, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_pdf_finite_difference():
    h = 1e-6
    fd = -(CONFIG_A.sf(h) - CONFIG_A.sf(0.0)) / h
    assert fd == pytest.approx(CONFIG_A.pdf(0.0), rel=1e-5)


@pytest.mark.parametrize("law", LAWS)
def test_integrated_tail_derivative(law):
    for t in (law.left + 0.5, 0.0, 50.0, 1e4):
        h = 1e-5 * max(1.0, abs(t))
        fd = -(law.integrated_tail(t + h) - law.integrated_tail(t - h)) / (2 * h)
        assert fd == pytest.approx(law.sf(t), rel=1e-6)


def test_integrated_tail_values():
    assert CONFIG_A.integrated_tail(3118.0) == pytest.approx(1.0, rel=1e-13)
    assert CONFIG_B.integrated_tail(-2.25) == pytest.approx(1.25, rel=1e-15)
    # linear continuation left of the support
    assert CONFIG_B.integrated_tail(-4.25) == pytest.approx(3.25, rel=1e-15)


@pytest.mark.parametrize("law", LAWS)
def test_integrated_tail_difference_by_quadrature(law):
    t1, t2 = law.left - 1.0, 40.0
    direct, _ = integrate.quad(law.sf, t1, t2, points=[law.left], epsabs=1e-13, epsrel=1e-13)
    assert law.integrated_tail(t1) - law.integrated_tail(t2) == pytest.approx(direct, abs=1e-10)
    assert law.tail_integral_between(t1, t2) == pytest.approx(direct, abs=1e-10)


def test_tail_integral_span_small_lengths():
    # the span form keeps relative accuracy where I(t) - I(t + y) cancels
    mp.mp.dps = 30
    law = CONFIG_B
    for t, y in ((5.0, 1e-9), (1e6, 1e-3), (-3.0, 2.0)):
        a, lam, al = mp.mpf(law.left), mp.mpf(law.scale), mp.mpf(law.alpha)
        lo = max(mp.mpf(t), a)
        lin = max(mp.mpf(0), min(a - t, mp.mpf(y)))
        hi = mp.mpf(t) + mp.mpf(y)
        exact = lin + lam / (al - 1) * ((1 + (lo - a) / lam) ** (1 - al) - (1 + (hi - a) / lam) ** (1 - al))
        assert law.tail_integral_span(t, y) == pytest.approx(float(exact), rel=1e-12)


def test_quantile_examples():
    assert CONFIG_A.quantile(1.0) == CONFIG_A.left == -6.0
    assert CONFIG_A.sf(CONFIG_A.quantile(0.3)) == pytest.approx(0.3, abs=1e-12)
    assert CONFIG_A.quantile(7.0 ** -1.2) == pytest.approx(0.0, abs=1e-12)
    for bad in (0.0, -0.1, 1.5, np.nan):
        with pytest.raises(DomainError):
            CONFIG_A.quantile(bad)


@settings(max_examples=200, deadline=None)
@given(u=st.floats(min_value=1e-300, max_value=1.0), k=st.sampled_from(range(len(LAWS))))
def test_sf_quantile_roundtrip(u, k):
    law = LAWS[k]
    assert law.sf(law.quantile(u)) == pytest.approx(u, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(t=st.floats(min_value=-20, max_value=1e12), k=st.sampled_from(range(len(LAWS))))
def test_quantile_sf_roundtrip_on_support(t, k):
    law = LAWS[k]
    if t <= law.left or law.sf(t) < 1e-290:
        return
    assert law.quantile(law.sf(t)) == pytest.approx(t, rel=1e-10, abs=1e-10 * law.scale)


@settings(max_examples=100, deadline=None)
@given(s=st.floats(min_value=-50, max_value=1e9), d=st.floats(min_value=0, max_value=1e9),
       k=st.sampled_from(range(len(LAWS))))
def test_sf_monotone(s, d, k):
    law = LAWS[k]
    assert law.sf(s + d) <= law.sf(s)
    assert 0.0 <= law.sf(s + d) <= 1.0


@pytest.mark.parametrize("law", LAWS)
@pytest.mark.parametrize("u", [0.5, 2.0, 10.0])
def test_regular_variation(law, u):
    dev = [abs(law.sf(u * t) / law.sf(t) / u ** -law.alpha - 1.0) for t in (1e4, 1e6, 1e8)]
    assert dev[0] > dev[1] > dev[2]
    assert dev[2] < 1e-6


@pytest.mark.parametrize("law", LAWS)
def test_density_ratio_and_karamata(law):
    ts = np.array([1e4, 1e6, 1e8])
    dens = ts * law.pdf(ts) / law.sf(ts)
    assert abs(dens[-1] / law.alpha - 1.0) < 0.01
    kar = law.integrated_tail(ts) * (law.alpha - 1.0) / (ts * law.sf(ts))
    assert abs(kar[-1] - 1.0) < 0.01
    assert np.all(np.diff(np.abs(kar - 1.0)) < 0)


@pytest.mark.parametrize("law", LAWS)
def test_sampler_ks(law, rng):
    n = 10 ** 5
    x = law.sample(rng, n)
    assert x.min() >= law.left
    d = stats.kstest(x, law.cdf).statistic
    assert d < 1.63 / math.sqrt(n)


def test_sample_mean_config_c(rng):
    x = CONFIG_C.sample(rng, 10 ** 6)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() + 1.0) < 3 * se


def test_sample_step_scalar(rng):
    x = CONFIG_B.sample_step(rng)
    assert isinstance(x, float) and x >= CONFIG_B.left


def test_construction_errors():
    with pytest.raises(ConstructionError):
        StepLaw.shifted_lomax(1.2, 1.0, 4.0)  # mean +1
    with pytest.raises(ConstructionError):
        StepLaw.shifted_lomax(0.9, 1.0, 50.0)
    with pytest.raises(ConstructionError):
        StepLaw.shifted_lomax(1.5, -1.0, 5.0)
    with pytest.raises(ConstructionError):
        StepLaw("weibull", 1.5, 1.0, 5.0)
    with pytest.raises(ConstructionError):
        StepLaw.shifted_pareto(1.5, 2.0, 6.0)  # mean exactly 0


def test_json_roundtrip():
    for law in LAWS:
        back = StepLaw.from_json(law.to_json())
        assert back == law
    d = json.loads(CONFIG_A.to_json())
    assert d == {"family": "shifted_lomax", "alpha": 1.2, "sigma": 1.0, "m": 6.0}
    d = json.loads(LAWS[3].to_json())
    assert d == {"family": "shifted_pareto", "alpha": 1.5, "x_m": 2.0, "m": 7.0}
