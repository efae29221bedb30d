"""Regression, mediation, moderation, matching and rank tests."""

from .kruskal import kruskal_wallis
from .matching import MatchResult, psm_att
from .mediation import MediationResult, mediate
from .moderation import ModerationResult, moderate
from .ols import OlsResult, ols, with_intercept

__all__ = [
    "MatchResult",
    "MediationResult",
    "ModerationResult",
    "OlsResult",
    "kruskal_wallis",
    "mediate",
    "moderate",
    "ols",
    "psm_att",
    "with_intercept",
]
