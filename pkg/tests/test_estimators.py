import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from oasampling.anova import Integrand, get_integrand
from oasampling.errors import DegenerateVariance, DimensionMismatch, OASamplingError, TooFewValues
from oasampling.estimators import (
    EstimateRecord,
    batch_estimates,
    estimate,
    read_estimates_csv,
    replicate_variance,
    standardize,
    standardized_values,
    write_estimates_csv,
)
from oasampling.gf_oa import construct_bose_oa
from oasampling.randomize import SeedSpec
from oasampling.sampler import Design, UnitSample, batch_points, sample_srs

finite = st.floats(-1e6, 1e6, allow_nan=False)


def first_coord(x):
    return x[..., 0]


@pytest.mark.parametrize("design", list(Design))
def test_constant_integrand_is_exact(design):
    pts = batch_points(design, construct_bose_oa(5, 4), 3, [0, 1])
    assert np.all(batch_estimates(get_integrand("constant", 4), pts) == 1.0)


def test_hand_mean():
    S = UnitSample(np.array([[0.25, 0.1], [0.75, 0.9]]), Design.SRS, 0, SeedSpec(0))
    rec = estimate(Integrand("x1", 2, first_coord), S)
    assert rec.value == 0.5
    assert rec.integrand_id == "x1" and rec.design is Design.SRS


def test_dimension_mismatch():
    S = sample_srs(4, 2, SeedSpec(0))
    with pytest.raises(DimensionMismatch):
        estimate(get_integrand("product", 3), S)
    with pytest.raises(DimensionMismatch):
        batch_estimates(get_integrand("product", 3), np.zeros((1, 4, 2)))


def test_oas_unbiased():
    R = 2000
    pts = batch_points(Design.OAS, construct_bose_oa(7, 3), 0, np.arange(R))
    vals = batch_estimates(get_integrand("product", 3), pts)
    assert abs(vals.mean() - 0.125) <= 3 * vals.std(ddof=1) / math.sqrt(R)


def test_estimate_row_permutation_invariant():
    S = sample_srs(25, 3, SeedSpec(4))
    f = get_integrand("gaussian", 3)
    perm = np.random.default_rng(0).permutation(25)
    T = UnitSample(S.points[perm], S.design, S.q, S.seed)
    assert estimate(f, S).value == pytest.approx(estimate(f, T).value, rel=1e-15)


def test_variance_examples():
    assert replicate_variance([1, 1, 1]) == 0.0
    assert replicate_variance([0, 2]) == 2.0
    z = np.random.default_rng(11).standard_normal(10**6)
    assert abs(replicate_variance(z) - 1) < 0.01
    with pytest.raises(TooFewValues):
        replicate_variance([1.0])


def test_symmetric_pair():
    w, sd = standardized_values([3.0 - 0.5, 3.0 + 0.5], 3.0)
    assert sd == pytest.approx(0.5 * math.sqrt(2), rel=1e-15)
    assert w == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)], rel=1e-15)


def test_constant_values_degenerate():
    with pytest.raises(DegenerateVariance):
        standardize([2.0, 2.0, 2.0], 2.0)


@given(arrays(np.float64, st.integers(2, 50), elements=finite), finite)
def test_shift_invariance(values, shift):
    if np.ptp(values) < 1e-3:
        return
    w1, _ = standardized_values(values, 0.0)
    w2, _ = standardized_values(values + shift, shift)
    assert np.allclose(w1, w2, atol=1e-6)


@given(arrays(np.float64, st.integers(2, 200), elements=st.floats(-1e3, 1e3)))
def test_standardized_about_mean(values):
    if np.ptp(values) < 1e-6:
        return
    w, _ = standardized_values(values, float(values.mean()))
    assert abs(w.mean()) <= 1e-12
    assert abs(w.var(ddof=1) - 1) <= 1e-12


def test_wstatistic_records_sigma():
    ws = standardize([1.0, 2.0, 3.0], 2.0)
    assert [w.w for w in ws] == [-1.0, 0.0, 1.0]
    assert all(w.sigma_used == 1.0 and w.mu_used == 2.0 for w in ws)


def test_non_finite_record():
    with pytest.raises(OASamplingError):
        EstimateRecord(float("nan"), Design.OAS, 3, 3, SeedSpec(0), "product")


def test_estimates_csv_round_trip(tmp_path):
    f = get_integrand("product", 3)
    recs = [estimate(f, sample_srs(9, 3, SeedSpec(5, r, extra=2))) for r in range(5)]
    path = tmp_path / "est.csv"
    write_estimates_csv(recs, path)
    assert path.read_text().splitlines()[0] == "design,q,d,integrand,seed,value"
    assert read_estimates_csv(path) == recs
