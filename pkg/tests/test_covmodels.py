import math

import numpy as np
import pytest

from datekit import (
    CovarianceSpec,
    NotPositiveDefinite,
    SeededRng,
    SignalSpec,
    ar1_precision,
    build_covariance,
    cholesky,
    generate_dataset,
    known_precision_from_meta,
    pooled_precision,
    signal_count,
    spd_inverse,
)

RNG = SeededRng(31)


def test_ar1_entries():
    sigma = build_covariance(CovarianceSpec("ar1", p=3, rho=0.5), RNG)
    expected = np.array([[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
    assert sigma == pytest.approx(expected)


def test_ar1_rejects_unit_rho():
    with pytest.raises(NotPositiveDefinite):
        build_covariance(CovarianceSpec("ar1", p=3, rho=1.0), RNG)


def test_block_entries():
    sigma = build_covariance(
        CovarianceSpec("block", p=4, within_corr=0.6, block_size=2), RNG
    )
    expected = np.array(
        [
            [1.0, 0.6, 0.0, 0.0],
            [0.6, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.6],
            [0.0, 0.0, 0.6, 1.0],
        ]
    )
    assert sigma == pytest.approx(expected)


def test_penta_entries():
    sigma = build_covariance(CovarianceSpec("penta", p=5), RNG)
    dist = np.abs(np.subtract.outer(np.arange(5), np.arange(5)))
    assert np.all(sigma[dist == 1] == 0.5)
    assert np.all(sigma[dist == 2] == 0.2)
    assert np.all(sigma[dist > 2] == 0.0)
    assert np.all(np.diagonal(sigma) == 1.0)


def test_randsparse_unit_diag_spd_deterministic():
    spec = CovarianceSpec("randsparse", p=40)
    a = build_covariance(spec, SeededRng(4))
    b = build_covariance(spec, SeededRng(4))
    assert np.array_equal(a, b)
    assert np.max(np.abs(np.diagonal(a) - 1.0)) < 1e-12
    cholesky(a)  # SPD
    c = build_covariance(spec, SeededRng(5))
    assert not np.array_equal(a, c)


def test_ar1_precision_identity_at_zero():
    assert np.array_equal(ar1_precision(0.0, 7), np.eye(7))


def test_ar1_precision_diagonal_values():
    omega = ar1_precision(0.6, 500)
    assert omega[0, 0] == pytest.approx(1.5625)
    assert omega[250, 250] == pytest.approx(2.125)
    assert omega[0, 1] == pytest.approx(-0.9375)


@pytest.mark.parametrize("rho", [-0.8, -0.4, 0.0, 0.3, 0.6, 0.8])
def test_ar1_precision_matches_numeric_inverse(rho):
    p = 60
    sigma = build_covariance(CovarianceSpec("ar1", p=p, rho=rho), RNG)
    assert np.max(np.abs(ar1_precision(rho, p) - spd_inverse(sigma))) < 1e-8


def test_pooled_precision_equal_covariances():
    sigma = build_covariance(CovarianceSpec("ar1", p=10, rho=0.4), RNG)
    expected = spd_inverse(sigma)
    for n1, n2 in [(3, 11), (50, 50)]:
        assert np.max(np.abs(pooled_precision(sigma, sigma, n1, n2) - expected)) < 1e-10


def test_pooled_precision_equal_sizes():
    s1 = build_covariance(CovarianceSpec("ar1", p=8, rho=0.3), RNG)
    s2 = build_covariance(CovarianceSpec("penta", p=8), RNG)
    got = pooled_precision(s1, s2, 20, 20)
    assert got == pytest.approx(spd_inverse((s1 + s2) / 2))


def test_pooled_precision_scalar_case():
    got = pooled_precision(np.eye(3), 2 * np.eye(3), 1, 3)
    assert got == pytest.approx(0.8 * np.eye(3))


def test_signal_count_values():
    assert signal_count(500, 0.6) == 12
    assert signal_count(1000, 0.6) == 16


def test_generate_dataset_support_and_magnitudes():
    cov = CovarianceSpec("ar1", p=500, rho=0.6)
    sig = SignalSpec(beta=0.6, r=1.0)
    data = generate_dataset(cov, sig, 60, 60, SeededRng(2))
    support = np.nonzero(data.truth)[0]
    assert support.size == 12
    mags = np.abs(data.truth[support])
    lo = math.sqrt(math.log(500) / 30)
    hi = math.sqrt(3 * math.log(500) / 30)
    assert np.all((mags >= lo) & (mags <= hi))
    assert data.x1.shape == (60, 500)
    assert data.x2.shape == (60, 500)


def test_generate_dataset_large_p_support():
    data = generate_dataset(
        CovarianceSpec("ar1", p=1000, rho=0.2),
        SignalSpec(beta=0.6, r=1.0),
        20,
        20,
        SeededRng(3),
    )
    assert np.count_nonzero(data.truth) == 16


def test_generate_dataset_signs_vary():
    cov = CovarianceSpec("ar1", p=200, rho=0.3)
    sig = SignalSpec(beta=0.6, r=1.0)
    saw_pos = saw_neg = False
    for seed in range(12):
        truth = generate_dataset(cov, sig, 10, 10, SeededRng(seed)).truth
        nz = truth[truth != 0]
        saw_pos |= bool(np.any(nz > 0))
        saw_neg |= bool(np.any(nz < 0))
    assert saw_pos and saw_neg


def test_generate_dataset_deterministic():
    cov = CovarianceSpec("randsparse", p=30)
    sig = SignalSpec(beta=0.7, r=0.9)
    a = generate_dataset(cov, sig, 8, 9, SeededRng(12))
    b = generate_dataset(cov, sig, 8, 9, SeededRng(12))
    assert np.array_equal(a.x1, b.x1)
    assert np.array_equal(a.x2, b.x2)
    assert np.array_equal(a.truth, b.truth)


def test_known_precision_from_meta_roundtrip():
    cov = CovarianceSpec("randsparse", p=25)
    sig = SignalSpec(beta=0.6, r=1.0)
    data = generate_dataset(cov, sig, 12, 15, SeededRng(8))
    omega = known_precision_from_meta(data.meta)
    sigma = build_covariance(cov, SeededRng(8).derive(0))
    assert np.max(np.abs(omega @ sigma - np.eye(25))) < 1e-8
