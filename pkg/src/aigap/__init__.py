"""Human-AI gap measurement for Go game records."""

__version__ = "0.1.0"
