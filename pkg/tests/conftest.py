import numpy as np
import pytest

from ndasnr.model import SampleBlock, generate_block, params_from


@pytest.fixture
def block_factory():
    def make(gamma_db=0.0, n=256, seed=7, prior_q=0.5, m2_scale=1.0):
        p = params_from(gamma_db=gamma_db, m2_scale=m2_scale, prior_q=prior_q)
        return generate_block(p, n, seed)

    return make


def as_block(values):
    return SampleBlock(np.asarray(values, dtype=np.float64))
