"""Business process variability: derive, configure and compare process variants."""

__version__ = "0.1.0"
