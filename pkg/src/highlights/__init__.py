"""Real-time cascaded highlight detection for esports-style video."""

__version__ = "0.1.0"
