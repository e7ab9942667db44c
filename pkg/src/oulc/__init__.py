"""Change-point estimation for daily open/up/low/close series."""

from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_ci, tau_confidence_set
from .bench import ScenarioMetrics, ScenarioSpec, run_scenario
from .csvio import OhlcRecord, ingest, load, write_series
from .data import IntervalBar, SegmentParams, Series
from .density import (DEFAULT_POLICY, TruncationPolicy, dlogf_dsigma2, log_density_oc,
                      log_density_oulc, oulc_logpdf)
from .estimate import (DEFAULT_NR, OC, OULC, ChangePointFit, NRConfig, aic, detect, detect_oc,
                       detect_oulc, fit_sigma2_newton, loglik_oc, loglik_oulc, profile_loglik_oulc)
from .simulate import SimSpec, simulate_series

__version__ = "0.1.0"

__all__ = [
    "BootstrapConfig", "BootstrapResult", "bootstrap_ci", "tau_confidence_set",
    "ScenarioMetrics", "ScenarioSpec", "run_scenario",
    "OhlcRecord", "ingest", "load", "write_series",
    "IntervalBar", "SegmentParams", "Series",
    "DEFAULT_POLICY", "TruncationPolicy", "dlogf_dsigma2", "log_density_oc", "log_density_oulc",
    "oulc_logpdf",
    "DEFAULT_NR", "OC", "OULC", "ChangePointFit", "NRConfig", "aic", "detect", "detect_oc",
    "detect_oulc", "fit_sigma2_newton", "loglik_oc", "loglik_oulc", "profile_loglik_oulc",
    "SimSpec", "simulate_series",
]
