"""navlab: develop, train, and benchmark 2D robot navigation planners."""

__version__ = "0.1.0"
