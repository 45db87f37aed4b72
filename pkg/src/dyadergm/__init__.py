"""Dyad-independent exponential random graph models with density and
reciprocity terms, their sparse (log N offset) variants, and tools to sample,
fit and study the sampling behaviour of maximum likelihood estimates."""

__version__ = "0.1.0"
