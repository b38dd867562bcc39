"""Sample and exact moments of the observables."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .model import ChannelParams, SampleBlock
from .specfun import q_function


@dataclass(frozen=True)
class MomentSummary:
    """``m1 = E[Y]``, ``m2 = E[Y^2]``, ``m4 = E[Y^4]`` and ``abs_moment = E|Y|``.

    ``n`` is the sample count, or 0 when the values are analytic.
    """

    m1: float
    m2: float
    m4: float
    abs_moment: float
    n: int = 0

    @property
    def ratio(self) -> float:
        """``A**2 / M2``, the statistic the absolute-moment estimators invert."""
        return self.abs_moment**2 / self.m2 if self.m2 > 0 else math.nan


def batch_moments(y: np.ndarray):
    """Row-wise moments of a ``(rows, n)`` array as four arrays ``(m1, m2, m4, a)``."""
    return kernels.batch_moments(np.ascontiguousarray(y, dtype=np.float64))


def sample_moments(block: SampleBlock) -> MomentSummary:
    """Compensated single-pass sample moments of a block."""
    if block.n < 1:
        raise ValueError("empty block")
    m1, m2, m4, a = batch_moments(block.samples.reshape(1, -1))
    return MomentSummary(float(m1[0]), float(m2[0]), float(m4[0]), float(a[0]), block.n)


def exact_moments(params: ChannelParams) -> MomentSummary:
    """Closed-form moments of ``Y = mu X + sigma W`` with ``P(X=+1) = prior_q``."""
    mu, sigma, q = params.mu, params.sigma, params.prior_q
    m1 = mu * (2.0 * q - 1.0)
    m2 = mu * mu + sigma * sigma
    m4 = mu**4 + 6.0 * mu * mu * sigma * sigma + 3.0 * sigma**4
    if sigma == 0.0:
        a = mu
    else:
        a = (
            mu
            + sigma * math.sqrt(2.0 / math.pi) * math.exp(-(mu * mu) / (2.0 * sigma * sigma))
            - 2.0 * mu * float(q_function(mu / sigma))
        )
    return MomentSummary(m1, m2, m4, a, 0)
