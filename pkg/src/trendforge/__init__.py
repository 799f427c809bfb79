"""Batch analytics for measuring the efficacy of astroturfed Twitter
trend campaigns: cascade reconstruction, exposure classification,
template penetration rates and the causal return to trending."""

__version__ = "0.1.0"
