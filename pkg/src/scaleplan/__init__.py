"""Task-relevant filtering and multi-robot planning over STRIPS domains."""

__version__ = "0.1.0"
