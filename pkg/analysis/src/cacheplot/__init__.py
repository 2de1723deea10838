"""Render simulator sweep CSVs: hit-rate curves, miss-distance curves,
frequency and topic-popularity distributions, and the gap table."""

import matplotlib

matplotlib.use("Agg")

__version__ = "0.1.0"
