import math

import numpy as np
import pytest

from ndasnr.crlb import (
    BOUND_NAMES,
    fisher_inverse,
    ncrlb_ber_chain,
    ncrlb_bundle,
    ncrlb_gamma,
    ncrlb_of_function,
    numeric_fisher,
)


def test_da_fisher_inverse():
    fi = fisher_inverse(1.0, 1.0, 1, "da")
    assert np.allclose(fi.matrix, [[1.0, 0.0], [0.0, 0.5]], atol=0, rtol=1e-15)
    fi2 = fisher_inverse(1.0, 2.0, 1, "da")
    assert np.allclose(fi2.matrix, 4.0 * fi.matrix, rtol=1e-15)


def test_nda_tends_to_da():
    nda = fisher_inverse(100.0, 1.0, 1, "nda").matrix
    da = fisher_inverse(100.0, 1.0, 1, "da").matrix
    assert np.allclose(nda, da, rtol=1e-6, atol=1e-30)


@pytest.mark.parametrize("gamma", [0.25, 1.0, 4.0])
def test_closed_form_matches_numeric_fisher(gamma):
    closed = fisher_inverse(gamma, 1.0, 1, "nda").matrix
    numeric = np.linalg.inv(numeric_fisher(gamma))
    assert np.allclose(closed, numeric, rtol=1e-6, atol=1e-6 * np.abs(closed).max())


def test_da_gamma_bound():
    assert ncrlb_bundle(1.0, 100, "da").ncrlb_gamma == pytest.approx(0.04, rel=1e-15)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 4.0])
@pytest.mark.parametrize("mode", ["nda", "da"])
def test_ber_chain_rule(gamma, mode):
    closed = ncrlb_bundle(gamma, 64, mode).ncrlb_ber
    assert ncrlb_ber_chain(gamma, 64, mode) == pytest.approx(closed, rel=1e-8)


def test_one_over_n_scaling():
    a = ncrlb_bundle(0.7, 64).as_dict()
    b = ncrlb_bundle(0.7, 128).as_dict()
    for k in BOUND_NAMES:
        assert b[k] == pytest.approx(a[k] / 2, rel=1e-12), k


def test_function_bounds_reproduce_bundle():
    g, n = 1.0, 64
    sigma = 1.0
    mu = sigma * math.sqrt(2 * g)
    fi = fisher_inverse(g, sigma, n)
    b = ncrlb_bundle(g, n)
    assert ncrlb_of_function(mu, 1.0, 0.0, fi) == pytest.approx(b.ncrlb_mu, rel=1e-12)
    assert ncrlb_of_function(sigma, 0.0, 1.0, fi) == pytest.approx(b.ncrlb_sigma, rel=1e-12)
    lam = 2 * mu / sigma**2
    assert ncrlb_of_function(lam, 2 / sigma**2, -4 * mu / sigma**3, fi) == pytest.approx(b.ncrlb_lambda, rel=1e-12)

    g = 0.5
    mu = math.sqrt(2 * g)
    fi = fisher_inverse(g, sigma, n)
    got = ncrlb_of_function(g, mu / sigma**2, -(mu**2) / sigma**3, fi)
    assert got == pytest.approx(ncrlb_bundle(g, n).ncrlb_gamma, rel=1e-10)


def test_bounds_independent_of_sigma():
    g = 2.0
    for sigma in (0.1, 1.0, 30.0):
        mu = sigma * math.sqrt(2 * g)
        fi = fisher_inverse(g, sigma, 10)
        v = ncrlb_of_function(g, mu / sigma**2, -(mu**2) / sigma**3, fi)
        assert v == pytest.approx(ncrlb_gamma(g, 10), rel=1e-12)


def test_nda_dominates_da():
    for g in np.logspace(-2, 2, 50):
        nda = ncrlb_bundle(g, 64, "nda").as_dict()
        da = ncrlb_bundle(g, 64, "da").as_dict()
        for k in BOUND_NAMES:
            assert nda[k] >= da[k] * (1 - 1e-12), (g, k)


def test_nda_da_ratio_limits():
    assert ncrlb_gamma(100.0, 1, "nda") / ncrlb_gamma(100.0, 1, "da") == pytest.approx(1.0, rel=1e-9)
    low = [ncrlb_gamma(g, 1, "nda") / ncrlb_gamma(g, 1, "da") for g in (1e-1, 1e-2, 1e-3)]
    assert low[0] < low[1] < low[2] and low[2] > 100


def test_argument_checks():
    with pytest.raises(ValueError):
        ncrlb_bundle(0.0, 10)
    with pytest.raises(ValueError):
        ncrlb_bundle(1.0, 0)
    with pytest.raises(ValueError):
        ncrlb_bundle(1.0, 10, "xx")
    with pytest.raises(ValueError):
        ncrlb_of_function(0.0, 1.0, 1.0, fisher_inverse(1.0, 1.0, 1))


def test_mi_bound_positive_and_finite():
    for g in (0.1, 1.0, 10.0):
        v = ncrlb_bundle(g, 64).ncrlb_mi
        assert math.isfinite(v) and v > 0
