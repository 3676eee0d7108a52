"""Lane-advantage estimation for two-day paired 500 m speed-skating results."""

from .counterfactual import OlympicEntry, SpeculativeList, parse_olympic, round_trip, speculate
from .dataset import (EventDataset, Lane, PairObs, ParseError, Run, RunStatus,
                      SkaterPair, lane_indicator, load_event, parse_event,
                      serialize_event, usable_pairs)
from .diagnostics import (AdjustedDiffs, CleanedFit, OutlierReport, ValidationReport,
                          adjusted_differences, clean_and_refit, gaussian_kde_curve,
                          outlier_scan, validate_model)
from .meta import (EventSummary, MetaResult, PowerSpec, SplitContrast, combine,
                   cross_group_correlation, heterogeneity, power_plan, predict_range,
                   read_summaries, split_half)
from .model import (FitError, FitResult, MomentMatrices, SimpleFit, VarianceReport,
                    build_moments, fit_ml, fit_simple, gls_beta, profile_loglik,
                    q_components, variance_report)
from .simulate import mc_calibration, simulate_event

__version__ = "0.1.0"
