import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from jncc.convcode import CC2, CC6
from jncc.exit_chart import (EndpointSamples, TransferCurve, classify_crossing, endpoint_cdf,
                             endpoint_samples, equivalence_classes, gaussian_apriori,
                             j_function, j_inverse, measure_cc_transfer, measure_nc_transfer,
                             mi_terms, pick_best, select_coefficients, soft_mi_terms)
from jncc.gf import make_field
from jncc.relay import NcCoefficients


def j_reference(sigma):
    """MI of a consistent Gaussian LLR via the two conditional densities."""
    if sigma == 0:
        return 0.0
    mu, sd = sigma**2 / 2, sigma

    def f(x):
        p1 = math.exp(-(x - mu) ** 2 / (2 * sd * sd))
        p0 = math.exp(-(x + mu) ** 2 / (2 * sd * sd))
        if p1 == 0:
            return 0.0
        return p1 / (math.sqrt(2 * math.pi) * sd) * math.log2(2 * p1 / (p1 + p0))

    val, _ = integrate.quad(f, mu - 15 * sd, mu + 15 * sd, limit=400)
    return val


@pytest.mark.parametrize("sigma", [0.2, 0.7, 1.5, 3.0, 6.0])
def test_j_matches_density_integral(sigma):
    assert j_function(sigma) == pytest.approx(j_reference(sigma), abs=1e-7)


def test_j_limits_and_roundtrip():
    assert j_function(0.0) == 0.0
    assert j_function(80.0) == 1.0
    assert j_function(20.0) > 1 - 1e-6
    for s in np.linspace(0.05, 8, 25):
        assert j_inverse(j_function(s)) == pytest.approx(s, abs=1e-5)
    assert np.all(np.diff(j_function(np.linspace(0, 10, 50))) > 0)
    with pytest.raises(ValueError):
        j_inverse(1.0)


def test_gaussian_apriori_has_requested_mi():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, 200_000)
    noise = rng.standard_normal(bits.shape)
    for mi in (0.1, 0.5, 0.9):
        llr = gaussian_apriori(bits, mi, noise)
        assert mi_terms(llr, bits).mean() == pytest.approx(mi, abs=0.01)
    assert np.all(mi_terms(gaussian_apriori(bits, 1.0, noise), bits) == 1.0)


def test_soft_terms_match_expected_time_average():
    # for a consistent LLR the truth-free term is the conditional mean of the
    # time-average term
    for llr in (-3.0, 0.0, 0.4, 7.0):
        p1 = 1 / (1 + math.exp(-llr))
        want = p1 * mi_terms(llr, 1) + (1 - p1) * mi_terms(llr, 0)
        assert soft_mi_terms(llr) == pytest.approx(want, abs=1e-12)
    assert soft_mi_terms(np.inf) == 1.0


def test_transfer_curve_validation():
    with pytest.raises(ValueError):
        TransferCurve([0, 0.5, 0.5], [0, 0.1, 0.2])
    c = TransferCurve([0, 0.5, 1.0], [0.2, 0.5, 1.0])
    assert c(0.25) == pytest.approx(0.35)
    assert c.area() == pytest.approx(0.55)
    assert c.is_monotone()
    assert len(list(c.rows())) == 3


def test_full_apriori_noiseless_relay_gives_one():
    f = make_field(3)
    c = measure_nc_transfer(f, (6, 6), amplitudes=(1, 1, 1e4), ia_grid=[0, 1], n_samples=2000,
                            rng=0)
    assert c.ie[-1] == pytest.approx(1.0, abs=1e-9)


def test_nc_curve_monotone_and_warns():
    f = make_field(3)
    c = measure_nc_transfer(f, (2, 5), n0=10 ** 0.5, n_samples=3000, rng=1)
    assert c.is_monotone(0.01)
    assert np.all((c.ie >= 0) & (c.ie <= 1))
    with pytest.warns(RuntimeWarning):
        small = measure_nc_transfer(f, (1, 1), n_samples=50, rng=1)
    assert "warning" in small.context


def test_nc_endpoints_repeatable_within_two_se():
    f = make_field(3)
    a = measure_nc_transfer(f, (1, 3), n0=10 ** 0.5, ia_grid=[0, 1], n_samples=5000, rng=1)
    b = measure_nc_transfer(f, (1, 3), n0=10 ** 0.5, ia_grid=[0, 1], n_samples=5000, rng=2)
    se = np.hypot(a.se, b.se)
    assert np.all(np.abs(a.ie - b.ie) <= 2.5 * se)


def test_cc_curves():
    grid = np.linspace(0, 1, 11)
    c2 = measure_cc_transfer(CC2, grid, n_samples=100_000, rng=1)
    c6 = measure_cc_transfer(CC6, grid, n_samples=100_000, rng=1)
    assert c2.ie[-1] == 1.0 and c6.ie[-1] == 1.0
    assert c2.is_monotone() and c6.is_monotone()
    # the stronger code is steeper: below at low input, above at high input
    assert c6(0.2) < c2(0.2) and c6(0.8) > c2(0.8)


@pytest.mark.parametrize("estimator", ["time-average", "soft"])
def test_cc_curve_reproducible(estimator):
    grid = np.linspace(0, 1, 11)
    a = measure_cc_transfer(CC2, grid, n_samples=100_000, rng=1, estimator=estimator)
    b = measure_cc_transfer(CC2, grid, n_samples=100_000, rng=2, estimator=estimator)
    se = np.hypot(a.se, b.se)
    assert np.all(np.abs(a.ie - b.ie) <= 3 * se + 1e-12)
    # five times the samples brings independent runs within 0.01
    a = measure_cc_transfer(CC2, grid, n_samples=500_000, rng=1, estimator="soft")
    b = measure_cc_transfer(CC2, grid, n_samples=500_000, rng=2, estimator="soft")
    assert np.max(np.abs(a.ie - b.ie)) < 0.01


def test_crossing_classification():
    grid = np.linspace(0, 1, 101)
    cc = TransferCurve(grid, grid)
    assert classify_crossing(TransferCurve(grid, np.minimum(1, 0.3 + grid)), cc).kind == "open"
    early = classify_crossing(TransferCurve(grid, np.full(101, 0.2)), cc)
    assert early.kind == "early" and early.value == pytest.approx(0.2)
    late = classify_crossing(TransferCurve(grid, 0.35 + 0.5 * grid), cc)
    assert late.kind == "late" and abs(late.value - 0.7) <= 0.01


def test_endpoint_cdf_properties():
    f = make_field(3)
    d = endpoint_cdf(f, (6, 6), scenario="C", snr_db=0.0, n_realizations=100, rng=3,
                     n_nodes=200)
    for key in ("t0", "t1"):
        assert np.all(np.diff(d[key]) >= 0)
        assert np.all((d[key] >= 0) & (d[key] <= 1))
    assert np.all(np.diff(d["cdf"]) > 0) and d["cdf"][-1] == 1.0
    with pytest.raises(ValueError):
        endpoint_cdf(f, (6, 6), n_realizations=50)


def test_relay_gain_moves_t1_not_t0():
    f = make_field(3)
    lo = endpoint_samples(f, (6, 6), 0.0, -5.0, n_realizations=200, n_nodes=300, rng=4)
    hi = endpoint_samples(f, (6, 6), 10.0, -5.0, n_realizations=200, n_nodes=300, rng=4)
    assert hi.t1.mean() - lo.t1.mean() > 0.05
    assert abs(hi.t0.mean() - lo.t0.mean()) < 0.5 * (hi.t1.mean() - lo.t1.mean())
    huge = endpoint_samples(f, (6, 6), 60.0, -5.0, n_realizations=200, n_nodes=300, rng=4)
    assert np.mean(huge.t1 > 0.999) > 0.95


def test_equivalence_classes_q3():
    classes = equivalence_classes(make_field(3))
    assert sum(len(c) for c in classes) == 28
    as_sets = [set(c) for c in classes]
    for pair in ([(3, 3), (6, 6)], [(2, 2), (5, 5)], [(1, 2), (1, 5)]):
        assert set(pair) in as_sets
    assert {(1, 1)} in as_sets


def test_pick_best_dominance_and_ties():
    rng = np.random.default_rng(5)
    base = rng.uniform(0, 1, 300)
    a = EndpointSamples(NcCoefficients(1, 1), base, base + 0.1, np.ones((300, 3)))
    b = EndpointSamples(NcCoefficients(1, 2), base + 0.05, base, np.ones((300, 3)))
    best, dominant, tied = pick_best({(1, 1): a, (1, 2): b}, 0)
    assert best == (1, 2) and dominant and tied == [(1, 2)]
    c = EndpointSamples(NcCoefficients(1, 3), base + 0.05 + rng.normal(0, 1e-3, 300), base,
                        np.ones((300, 3)))
    _, _, tied = pick_best({(1, 2): b, (1, 3): c}, 0)
    assert set(tied) == {(1, 2), (1, 3)}


def test_select_q1_is_trivial():
    res = select_coefficients(make_field(1), CC2, n_realizations=100, n_nodes=100)
    assert res.h_star_0 == res.h_star_1 == NcCoefficients(1, 1)
    assert res.snr_th is None
    doc = json.loads(res.to_json())
    assert doc["h_star_0"] == [1, 1] and doc["snr_th"] is None


def test_kept_samples_give_curve_means():
    f = make_field(3)
    c = measure_nc_transfer(f, (6, 6), ia_grid=[0.0, 0.5, 1.0], n_samples=2000, rng=3,
                            keep_samples=True)
    assert c.samples.shape == (3, 2000)
    np.testing.assert_allclose(c.samples.mean(axis=1), c.ie)
    assert measure_nc_transfer(f, (6, 6), n_samples=2000, rng=3).samples is None
