"""Non-data-aided SNR estimation for BPSK over AWGN.

Estimators (conventional, iterative ML, method of moments, polynomial and
absolute-moment inverses), normalized Cramer-Rao bounds, and a deterministic
Monte Carlo harness for NMSE / bias sweeps.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .crlb import CrlbBundle, FisherInverse, fisher_inverse, ncrlb_bundle, ncrlb_of_function
from .estimators import (
    METHODS,
    DerivedParams,
    EstimatorOptions,
    SnrEstimate,
    channel_metrics,
    derive_params,
    estimate_snr,
    log_likelihood,
    ml_trajectory,
    symbol_metrics,
)
from .model import ChannelParams, SampleBlock, generate_block, params_from
from .moments import MomentSummary, exact_moments, sample_moments
from .specfun import HConstants, QuadratureSpec, f_gamma, h_forward, h_inverse, j_function, q_function

__all__ = [
    "BACKEND",
    "METHODS",
    "ChannelParams",
    "CrlbBundle",
    "DerivedParams",
    "EstimatorOptions",
    "FisherInverse",
    "HConstants",
    "MomentSummary",
    "QuadratureSpec",
    "SampleBlock",
    "SnrEstimate",
    "channel_metrics",
    "derive_params",
    "estimate_snr",
    "exact_moments",
    "f_gamma",
    "fisher_inverse",
    "generate_block",
    "h_forward",
    "h_inverse",
    "j_function",
    "log_likelihood",
    "ml_trajectory",
    "ncrlb_bundle",
    "ncrlb_of_function",
    "params_from",
    "q_function",
    "sample_moments",
    "symbol_metrics",
]
