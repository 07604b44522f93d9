"""Churn-risk modelling for prolific wiki editors."""

__version__ = "0.1.0"
