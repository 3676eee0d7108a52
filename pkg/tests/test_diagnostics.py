from __future__ import annotations

import numpy as np
import pytest

from lanefair.dataset import PairObs
from lanefair.diagnostics import (adjusted_differences,
                                  gaussian_kde_curve, outlier_scan,
                                  validate_model)
from lanefair.model import FitResult, fit_ml
from lanefair.simulate import (expected_flag_rate, null_flag_rates,
                               simulate_event)

# What the screening pass flags on each championship, fit on all usable pairs.
PIPELINE_ROSTERS = {
    1984: ["G.Kuiper"],
    1985: ["K.-T.Bae", "E.Henriksen"],
    1986: ["G.Boucher"],
    1987: [],
    1988: [],
    1989: ["R.Sighel"],
    1990: [],
    1991: ["T.Kuroiwa", "I.Dolp"],
    1992: ["I.Dolp"],
    1993: [],
    1994: ["T.Hamamichi", "P.Tahmindjis"],
}

CLEAN_COUNTS = {1984: 26, 1985: 29, 1986: 30, 1987: 33, 1988: 28, 1989: 29,
                1990: 28, 1991: 32, 1992: 26, 1993: 30, 1994: 28}


def _exact_fit(pairs):
    """A FitResult whose means interpolate the data exactly."""
    return FitResult(beta=np.array([17.0, 17.2, 2.0, 0.04]), rho=0.5,
                     sigma_ml=0.2, sigma_un=0.2, kappa_ml=0.2, kappa_un=0.2,
                     cov_beta=np.eye(4), loglik=0.0, n=len(pairs), p=4,
                     condition_number=1.0, fixed_point_residual=0.0)


def test_zero_residuals_give_zero_statistics():
    fit = _exact_fit([])
    pairs = []
    for i in range(6):
        w = 0.5 if i % 2 else -0.5
        x1, x2 = 10.0 + 0.1 * i, 10.05 + 0.1 * i
        pairs.append(PairObs(str(i), x1, 17.0 + 2.0 * x1 + 0.04 * w,
                             x2, 17.2 + 2.0 * x2 - 0.04 * w, w))
    report = outlier_scan(pairs, fit)
    for rec in report.records:
        assert (rec.t1, rec.t2, rec.t3) == (0.0, 0.0, 0.0)
        assert not rec.flagged
    assert report.flagged_names == []


def test_screening_rosters_per_event(pipeline):
    for year, cleaned in pipeline.items():
        assert list(cleaned.removed) == PIPELINE_ROSTERS[year], year
        assert cleaned.fit.n == CLEAN_COUNTS[year], year


def test_extreme_statistics_drive_the_flags(pipeline):
    records = {r.name: r for r in pipeline[1994].report.records}
    assert records["P.Tahmindjis"].t1 > 5.0
    assert abs(records["P.Tahmindjis"].t3) > 4.0
    assert records["T.Hamamichi"].t1 < -2.75
    assert "T1" in records["T.Hamamichi"].flagged_by


def test_no_flags_refit_is_first_fit(pipeline):
    cleaned = pipeline[1987]
    assert cleaned.removed == ()
    assert cleaned.fit is cleaned.first_fit


def test_threshold_is_configurable(usable):
    pairs, _ = usable[1993]
    fit = fit_ml(pairs)
    strict = outlier_scan(pairs, fit, threshold=1.5)
    assert len(strict.flagged_names) > len(outlier_scan(pairs, fit).flagged_names)


def test_declared_outlier_marks_set_on_skaters(pipeline, events):
    assert pipeline[1994] is not None
    flagged = {s.name for s in events[1994].skaters if s.declared_outlier}
    assert flagged == set(PIPELINE_ROSTERS[1994])


def test_null_flag_rates_near_two_sided_tail():
    rates = null_flag_rates(events=200, n=500, seed=11)
    assert rates["runs"] == 100000
    nominal = expected_flag_rate(2.75)
    for key in ("T1", "T2", "T3"):
        assert nominal / 2 <= rates[key] <= nominal * 2, (key, rates)


def test_validation_statistics_calgary(pipeline):
    cleaned = pipeline[1994]
    rep = validate_model(cleaned.pairs_clean, cleaned.fit)
    assert rep.n == 28
    assert rep.skew_diff == pytest.approx(0.3436, abs=5e-4)
    assert rep.skew_ave == pytest.approx(0.4899, abs=5e-4)
    assert rep.kurt_diff == pytest.approx(0.0675, abs=5e-4)
    assert rep.kurt_ave == pytest.approx(0.0240, abs=5e-4)
    assert rep.corr == pytest.approx(0.2490, abs=5e-4)
    assert rep.band_skew == pytest.approx(0.7615, abs=5e-4)
    assert rep.band_kurt == pytest.approx(1.5230, abs=5e-4)
    assert rep.band_corr == pytest.approx(0.3109, abs=5e-4)


def test_standardized_sets_centered_and_scaled(pipeline):
    for year, cleaned in pipeline.items():
        rep = validate_model(cleaned.pairs_clean, cleaned.fit)
        ave = np.array([r.ave_star for r in rep.records])
        diff = np.array([r.diff_star for r in rep.records])
        assert abs(ave.mean()) <= 1e-6, year
        assert abs(diff.mean()) <= 1e-6, year
        assert abs(ave.var() - 1.0) <= 0.15, year
        assert abs(diff.var() - 1.0) <= 0.15, year


def test_validation_needs_eight_pairs(pipeline):
    cleaned = pipeline[1994]
    with pytest.raises(ValueError, match="at least 8"):
        validate_model(cleaned.pairs_clean[:7], cleaned.fit)


def test_moment_bands_cover_normal_samples():
    rng = np.random.default_rng(17)
    n = 28
    band_skew = 1.645 * np.sqrt(6 / n)
    band_kurt = 1.645 * np.sqrt(24 / n)
    hits_skew = hits_kurt = 0
    for _ in range(1000):
        v = rng.standard_normal(n)
        c = v - v.mean()
        m2 = (c ** 2).mean()
        if abs((c ** 3).mean() / m2 ** 1.5) <= band_skew:
            hits_skew += 1
        if abs((c ** 4).mean() / m2 ** 2 - 3) <= band_kurt:
            hits_kurt += 1
    assert hits_skew >= 850
    assert hits_kurt >= 850


def test_kde_integrates_to_one(pipeline):
    rep = validate_model(pipeline[1994].pairs_clean, pipeline[1994].fit)
    for curve in (rep.kde_diff, rep.kde_ave):
        assert curve.bandwidth > 0
        assert len(curve.grid) == 512
        assert abs(np.trapezoid(curve.density, curve.grid) - 1.0) <= 1e-3


def test_kde_permutation_invariant():
    rng = np.random.default_rng(3)
    v = rng.standard_normal(40)
    a = gaussian_kde_curve(v)
    b = gaussian_kde_curve(v[::-1].copy())
    assert np.array_equal(a.grid, b.grid)
    assert np.allclose(a.density, b.density, atol=1e-12)


def test_kde_fixed_bandwidth():
    v = np.linspace(-1, 1, 20)
    curve = gaussian_kde_curve(v, bandwidth=0.5)
    assert curve.bandwidth == 0.5
    with pytest.raises(ValueError):
        gaussian_kde_curve(v, bandwidth=0.0)


def test_adjusted_differences_counts(pipeline):
    per_event = {}
    pooled = {0.5: 0, -0.5: 0}
    for year, cleaned in pipeline.items():
        ad = adjusted_differences(cleaned.pairs_clean)
        per_event[year] = len(ad.records)
        pooled[0.5] += len(ad.group(+1))
        pooled[-0.5] += len(ad.group(-1))
    assert per_event == CLEAN_COUNTS
    assert pooled == {0.5: 160, -0.5: 159}


def test_adjusted_differences_use_zero_d_refit(pipeline):
    ad = adjusted_differences(pipeline[1994].pairs_clean)
    assert ad.fit_zero_d.d == 0.0
    assert ad.fit_zero_d.p == 3
    scale = np.sqrt(2) * ad.fit_zero_d.sigma_un
    for r in ad.records:
        assert r.D_star == pytest.approx(r.D / scale, rel=1e-12)


def test_identical_days_zero_adjusted_differences():
    pairs = []
    for i in range(10):
        x = 10.0 + 0.1 * i
        y = 17.0 + 2.0 * x + 0.07 * (i % 3)
        pairs.append(PairObs(str(i), x, y, x, y, 0.5 if i % 2 else -0.5))
    ad = adjusted_differences(pairs)
    for r in ad.records:
        assert abs(r.D) <= 1e-9


def test_group_means_track_minus_two_d():
    rng = np.random.default_rng(23)
    d = 0.08
    pairs = simulate_event(rng, 400, d=d, sigma=0.2, kappa=0.3)
    ad = adjusted_differences(pairs)
    plus = np.mean([r.D for r in ad.group(+1)])
    minus = np.mean([r.D for r in ad.group(-1)])
    # each group mean has sd ~ sigma*sqrt(2)/sqrt(n/2); allow 4 sigma on the contrast
    tol = 4 * 0.2 * 2 / np.sqrt(200)
    assert abs((plus - minus) - (-2 * d)) <= tol
