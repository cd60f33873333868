"""Strategic bidding against a seller who learns reserve prices from bids."""
from .dist import (Distribution, Exponential, MaxOf, Mixture, PiecewiseEmpirical, Product,
                   TruncatedLogNormal, Uniform, check_quasi_regular, dist_from_spec,
                   is_regular, monopoly_price, revenue_curve, transforms, virtual_value)
from .errors import (AcceptanceFailure, AssumptionViolated, AuctionLabError, ConfigInvalid,
                     EmptySample, InvalidThresholds, NoCrossing, NonMonotone, NoRoot,
                     NotUnimodal, OutOfSupport)
from .game import (NashReport, PhaseReport, TwoStageProcess, UtilityBreakdown, best_response,
                   commitment_utility, critical_alpha, equilibrium_competition,
                   myerson_payment, nash_report, nash_threshold, one_strategic_threshold,
                   utility_grad, utility_two_stage, worst_case_threshold)
from .mech import (MechanismComparison, compare_all, eager_utilities, lazy_utilities,
                   myerson_utilities)
from .oracle import (ErmOfBids, FixedPrice, MonopolyOfBids, MonopolyOfValues, SimConfig,
                     SimResult, simulate, simulate_two_stage)
from .seller import ErmReport, ReserveDecision, erm_reserve, erm_theorem5_experiment, optimal_reserve
from .strategy import (DoubleThreshold, EpsThreshold, Truthful, bid_virtual_value,
                       perceived_virtual_value, pushforward)

__version__ = "0.1.0"
