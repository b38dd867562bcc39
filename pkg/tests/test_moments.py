import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ndasnr.model import ChannelParams, SampleBlock, generate_block, params_from
from ndasnr.moments import exact_moments, sample_moments


def mom(values):
    return sample_moments(SampleBlock(np.asarray(values, dtype=np.float64)))


def test_unit_magnitude():
    m = mom([1, -1, 1, -1])
    assert (m.m1, m.m2, m.m4, m.abs_moment, m.n) == (0.0, 1.0, 1.0, 1.0, 4)


def test_two_point():
    m = mom([2, -2])
    assert (m.m1, m.m2, m.m4, m.abs_moment) == (0.0, 4.0, 16.0, 2.0)


def test_zero_vector():
    m = mom([0, 0, 0])
    assert (m.m1, m.m2, m.m4, m.abs_moment) == (0.0, 0.0, 0.0, 0.0)


def test_exact_noiseless_limit():
    m = exact_moments(ChannelParams(1.0, 0.0))
    assert (m.m1, m.m2, m.m4, m.abs_moment) == (0.0, 1.0, 1.0, 1.0)
    near = exact_moments(ChannelParams(1.0, 1e-6))
    assert near.abs_moment == pytest.approx(1.0, abs=1e-9)
    assert m.n == 0


def test_exact_standard_normal():
    m = exact_moments(ChannelParams(0.0, 1.0))
    assert m.m2 == 1.0 and m.m4 == 3.0
    assert m.abs_moment == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)


def test_exact_substitution():
    m = exact_moments(ChannelParams(1.0, 0.5))
    assert m.m2 == 1.25
    assert m.m4 == 2.6875


def test_first_moment_follows_prior():
    m = exact_moments(ChannelParams(2.0, 1.0, prior_q=0.75))
    assert m.m1 == pytest.approx(1.0)


def test_sample_converges_to_exact():
    p = params_from(gamma_db=2.0, m2_scale=3.0, prior_q=0.3)
    s = sample_moments(generate_block(p, 2_000_000, 1))
    e = exact_moments(p)
    assert s.m1 == pytest.approx(e.m1, abs=3e-3)
    assert s.m2 == pytest.approx(e.m2, rel=3e-3)
    assert s.m4 == pytest.approx(e.m4, rel=6e-3)
    assert s.abs_moment == pytest.approx(e.abs_moment, rel=2e-3)


def test_matches_numpy():
    y = generate_block(params_from(gamma=0.7), 10_001, 3).samples
    m = mom(y)
    assert m.m1 == pytest.approx(np.mean(y), rel=1e-12, abs=1e-15)
    assert m.m2 == pytest.approx(np.mean(y**2), rel=1e-13)
    assert m.m4 == pytest.approx(np.mean(y**4), rel=1e-13)
    assert m.abs_moment == pytest.approx(np.mean(np.abs(y)), rel=1e-13)


@given(arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e3, 1e3)))
def test_moment_inequalities(y):
    m = mom(y)
    tol = 1e-12
    assert m.m2 >= 0 and m.m4 >= 0 and m.abs_moment >= 0
    assert m.abs_moment**2 <= m.m2 * (1 + tol) + 1e-300
    assert m.m4 >= m.m2**2 * (1 - tol)
