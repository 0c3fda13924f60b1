"""Joint contrastive learning: closed-form multi-positive loss, oracles and a desk-scale trainer."""

from jcl.numerics import (
    dot,
    l2_normalize,
    log_sum_exp,
    make_rng,
    quadratic_form,
    sample_gaussian,
)
from jcl.losses import (
    ContrastiveInstance,
    LossParams,
    LossResult,
    gaussian_mgf_expectation,
    info_nce_batch,
    jcl_batch_loss,
    jcl_loss,
    monte_carlo_inf_loss,
    pair_loss,
    vanilla_multi_key_loss,
)
from jcl.stats import PositiveKeyStats, compute_covariance, compute_mean, stats_psd_check

__version__ = "0.1.0"
