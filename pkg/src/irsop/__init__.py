"""Outage probability of IRS-assisted multi-user MISO downlinks.

Closed-form moments feed a two-step Log-Normal approximation of each user's
SINR; a Monte-Carlo channel simulator checks every step.
"""
from .errors import (ConfigError, DomainError, InfeasibleCorrelationError,
                     InfeasibleMomentsError, SearchRangeError)
from .lognormal import (LogNormalParams, fit_lognormal, fit_sinr, log_covariance,
                        outage_probability, pdf, ratio_params)
from .model import (Geometry, LinkGains, SystemConfig, link_gains, pathloss,
                    uniform_power_allocation)
from .moments import MomentSet, analytic_moments

__version__ = "0.1.0"
