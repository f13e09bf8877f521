from .describe import SampleSummary, histogram, quantile, summarize
from .special import (
    DomainError,
    f_cdf,
    f_sf,
    kolmogorov_q,
    ln_gamma,
    normal_cdf,
    normal_sf,
    reg_inc_beta,
    reg_inc_beta_upper,
    reg_inc_gamma,
    reg_inc_gamma_upper,
    t_cdf,
    t_sf,
)
from .twosample import (
    TAILS,
    DegenerateSample,
    TestReport,
    ks_two_sample,
    levene,
    welch_t,
    wilcoxon_rank_sum,
)

__all__ = [
    "DegenerateSample",
    "DomainError",
    "SampleSummary",
    "TAILS",
    "TestReport",
    "f_cdf",
    "f_sf",
    "histogram",
    "kolmogorov_q",
    "ks_two_sample",
    "levene",
    "ln_gamma",
    "normal_cdf",
    "normal_sf",
    "quantile",
    "reg_inc_beta",
    "reg_inc_beta_upper",
    "reg_inc_gamma",
    "reg_inc_gamma_upper",
    "summarize",
    "t_cdf",
    "t_sf",
    "welch_t",
    "wilcoxon_rank_sum",
]
