"""MBSFN area formation and content assignment for LTE broadcast."""

__version__ = "0.1.0"
