"""codescaffold: auto-graded practice tasks with far-transfer scaffold examples."""

__version__ = "0.1.0"
