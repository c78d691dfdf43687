"""Real-time edge audio tagging runtime and soak-benchmark harness."""

__version__ = "0.1.0"
