
import numpy as np
import pytest

from datekit import (
    CovarianceSpec,
    CvConfig,
    InvalidBand,
    SampleOrder,
    SeededRng,
    apply_threshold,
    ar1_precision,
    banded_cholesky_precision,
    build_covariance,
    cholesky,
    invert_regularized,
    mvn_sample,
    one_sample_transform,
    sample_covariance,
    select_band,
    select_threshold,
    spd_inverse,
    thresholded_covariance,
)


def _ar1_data(rho, n, p, seed):
    sigma = build_covariance(CovarianceSpec("ar1", p=p, rho=rho), SeededRng(0))
    return mvn_sample(np.zeros(p), cholesky(sigma), n, SeededRng(seed))


def test_banded_tau0_is_reciprocal_variances(gen):
    x = gen.standard_normal((50, 6)) * np.array([1.0, 2.0, 0.5, 3.0, 1.5, 1.0])
    est = banded_cholesky_precision(x, 0)
    centered = x - x.mean(axis=0)
    mle_var = (centered**2).mean(axis=0)
    assert est.omega == pytest.approx(np.diag(1.0 / mle_var))


def test_banded_recovers_ar1_precision():
    # consistency against the exact tridiagonal inverse; at n=2000 the
    # entrywise max has sampling spread ~0.15, so the 0.1 band needs more data
    exact = ar1_precision(0.6, 50)
    est = banded_cholesky_precision(_ar1_data(0.6, 2000, 50, 1), 1)
    assert np.max(np.abs(est.omega - exact)) < 0.25
    est = banded_cholesky_precision(_ar1_data(0.6, 50000, 50, 1), 1)
    assert np.max(np.abs(est.omega - exact)) < 0.1


def test_banded_independent_offdiagonals_vanish(gen):
    x = gen.standard_normal((2000, 20))
    est = banded_cholesky_precision(x, 2)
    off = est.omega[~np.eye(20, dtype=bool)]
    assert np.max(np.abs(off)) < 0.1


def test_banded_full_window_matches_mle_inverse(gen):
    x = gen.standard_normal((400, 6))
    est = banded_cholesky_precision(x, 5)
    assert np.max(np.abs(est.omega - spd_inverse(sample_covariance(x)))) < 1e-6


def test_banded_output_is_spd():
    x = _ar1_data(0.4, 60, 30, 3)
    for tau in (0, 1, 4):
        cholesky(banded_cholesky_precision(x, tau).omega)


def test_banded_rejects_bad_tau(gen):
    x = gen.standard_normal((10, 5))
    with pytest.raises(InvalidBand):
        banded_cholesky_precision(x, 9)
    with pytest.raises(InvalidBand):
        banded_cholesky_precision(x, -1)


def test_select_band_independent_prefers_zero():
    hits = 0
    for seed in range(20):
        x = SeededRng(seed).generator().standard_normal((400, 30))
        cv = CvConfig(rng=SeededRng(1000 + seed), n_splits=20)
        hits += select_band(x, cv) == 0
    assert hits > 10


def test_select_band_dependent_prefers_positive():
    hits = 0
    for seed in range(20):
        x = _ar1_data(0.6, 400, 30, seed)
        cv = CvConfig(rng=SeededRng(2000 + seed), n_splits=20)
        hits += select_band(x, cv) >= 1
    assert hits > 10


def test_select_band_deterministic():
    x = _ar1_data(0.5, 200, 25, 9)
    cv = CvConfig(rng=SeededRng(5), n_splits=15)
    assert select_band(x, cv) == select_band(x, cv)


def test_apply_threshold_cases():
    s = np.array([[1.0, 0.3], [0.3, 1.0]])
    assert np.array_equal(apply_threshold(s, 0.0), s)
    assert np.array_equal(apply_threshold(s, 0.31), np.eye(2))
    big = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert np.array_equal(apply_threshold(big, 0.9), np.diag([2.0, 1.0]))


def test_thresholded_covariance_zero_threshold(gen):
    x = gen.standard_normal((80, 5))
    assert np.array_equal(thresholded_covariance(x, 0.0), sample_covariance(x))


def test_select_threshold_independent_is_aggressive():
    hits = 0
    for seed in range(10):
        x = SeededRng(seed).generator().standard_normal((400, 30))
        cv = CvConfig(rng=SeededRng(3000 + seed), n_splits=20)
        m = select_threshold(x, cv)
        s = sample_covariance(x)
        off = np.abs(s[~np.eye(30, dtype=bool)])
        hits += m > np.quantile(off, 0.9)
    assert hits > 5


def test_select_threshold_keeps_strong_structure():
    hits = 0
    for seed in range(10):
        spec = CovarianceSpec("randsparse", p=30)
        sigma = build_covariance(spec, SeededRng(40 + seed))
        x = mvn_sample(np.zeros(30), cholesky(sigma), 400, SeededRng(seed))
        cv = CvConfig(rng=SeededRng(4000 + seed), n_splits=20)
        m = select_threshold(x, cv)
        strongest = np.max(np.abs(sigma[~np.eye(30, dtype=bool)]))
        hits += m <= strongest
    assert hits > 5


def test_select_threshold_deterministic(gen):
    x = gen.standard_normal((150, 12))
    cv = CvConfig(rng=SeededRng(77), n_splits=10)
    assert select_threshold(x, cv) == select_threshold(x, cv)


def test_invert_regularized_identity():
    est = invert_regularized(np.eye(4))
    assert np.array_equal(est.omega, np.eye(4))
    assert not est.params["repaired"]


def test_invert_regularized_indefinite_shift():
    est = invert_regularized(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert est.params["repaired"]
    assert est.params["shift"] == pytest.approx(1.0 + 1e-6, rel=1e-9)
    expected = np.linalg.inv(np.array([[2.0 + 1e-6, 2.0], [2.0, 2.0 + 1e-6]]))
    assert est.omega == pytest.approx(expected, rel=1e-6)


def test_invert_regularized_spd_matches_plain_inverse(gen):
    from conftest import random_unit_diag_spd

    a = random_unit_diag_spd(gen, 9)
    est = invert_regularized(a)
    assert np.array_equal(est.omega, spd_inverse(a))
    assert not est.params["repaired"]


def test_one_sample_transform_zero_second_group(gen):
    x1 = gen.standard_normal((5, 4))
    assert np.array_equal(one_sample_transform(x1, np.zeros((8, 4))), x1)


def test_one_sample_transform_equal_sizes(gen):
    x1 = gen.standard_normal((6, 3))
    x2 = gen.standard_normal((6, 3))
    assert one_sample_transform(x1, x2) == pytest.approx(x1 - x2)


def test_one_sample_transform_requires_order(gen):
    with pytest.raises(SampleOrder):
        one_sample_transform(gen.standard_normal((5, 2)), gen.standard_normal((4, 2)))


def test_one_sample_transform_moments():
    # mean must match the group difference; covariance sigma1 + (n1/n2)*sigma2
    p, n1, n2, reps = 4, 10, 15, 1000
    sigma = build_covariance(CovarianceSpec("ar1", p=p, rho=0.5), SeededRng(0))
    lower = cholesky(sigma)
    delta = np.array([0.8, 0.0, -0.5, 0.0])
    base = SeededRng(123)
    rows = []
    for i in range(reps):
        r = base.derive(i)
        x1 = mvn_sample(delta, lower, n1, r.derive(0))
        x2 = mvn_sample(np.zeros(p), lower, n2, r.derive(1))
        rows.append(one_sample_transform(x1, x2))
    y = np.vstack(rows)
    target_cov = sigma * (1.0 + n1 / n2)
    se_mean = np.sqrt(np.diagonal(target_cov) / y.shape[0])
    assert np.all(np.abs(y.mean(axis=0) - delta) < 3 * se_mean)
    emp_cov = np.cov(y.T, bias=True)
    # elementwise 3-sigma band for covariance entries of Gaussian data
    se_cov = 3 * np.sqrt(
        (np.outer(np.diagonal(target_cov), np.diagonal(target_cov)) + target_cov**2)
        / y.shape[0]
    )
    assert np.all(np.abs(emp_cov - target_cov) < se_cov)
