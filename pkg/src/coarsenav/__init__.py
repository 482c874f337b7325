"""Path systems, contraction spaces and navigability on finite graphs."""

__version__ = "0.1.0"
