"""Multi-layer dependency-network analysis for formal mathematics libraries."""

__version__ = "0.1.0"
