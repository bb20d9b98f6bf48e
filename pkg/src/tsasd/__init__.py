"""One-class anomaly state detection for time series."""
__version__ = "0.1.0"
