"""Rate regions for the uplink cloud radio access network with oblivious relays."""

from .dm_schemes import (
    DmCranModel,
    DmPolicy,
    assemble_joint,
    cf_ssd_all_orders,
    region_cf_jd,
    region_cf_sd,
    region_cf_ssd,
    region_capacity_class,
    sumrate_cf_jd,
)
from .finite_info import Pmf, cond_mutual_info, check_markov, entropy, marginalize
from .gaussian_info import GaussianCranModel, QuantizerProfile, TimeShare
from .gaussian_schemes import (
    cutset_bound,
    gap_certificate,
    gaussian_bound,
    region_gaussian_no_ts,
    region_gaussian_ts,
)
from .regions import Infeasible, RateRegion
from .submodular import (
    check_supermodular,
    construct_cf_ssd_schedule,
    extreme_point,
    g_of_s,
    set_function_bound,
    verify_domination,
)
from .wyner import WynerModel, rate_cf_variants, rate_cof, rate_cutset, rate_df

__version__ = "0.1.0"
