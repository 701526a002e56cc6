"""Batch figure rendering for fedclust experiment traces."""

__version__ = "0.1.0"
