"""Doubled density operators for spatial, temporal and spatiotemporal quantum processes."""

__version__ = "0.1.0"
