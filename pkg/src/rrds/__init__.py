"""Simulator and estimation toolkit for chain-referral surveys.

Builds synthetic homophilous populations, runs referral-driven recruitment
under two designs (preferential RDS and randomized referral), and estimates
population attributes with inverse-degree weighting plus recruitment-tree
bootstrap confidence intervals.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    EstimationError,
    InputError,
    InsufficientSeedsError,
    ParseError,
)

__all__ = [
    "ConfigurationError",
    "EstimationError",
    "InputError",
    "InsufficientSeedsError",
    "ParseError",
    "__version__",
]
