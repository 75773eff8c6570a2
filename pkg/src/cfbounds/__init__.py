"""Variance bounds on differences of weighted power means."""
from cfbounds.classify import (
    Classification, Verdict, classify_lhs, classify_rhs, region_map,
)
from cfbounds.kernels import BACKEND
from cfbounds.means import (
    BoundCheck, ExponentPair, Side, WeightedSample, cf_check, f_value,
    power_mean, variance,
)
from cfbounds.search import (
    Certificate, brute_force_extremum, search_counterexample, verify_certificate,
)

__version__ = "0.1.0"
