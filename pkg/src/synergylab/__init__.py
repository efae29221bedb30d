"""Collaboration synergy and disruption analytics for bibliographic corpora."""

__version__ = "0.1.0"
