"""Two-agent collaborative task allocation testbed."""

__version__ = "0.1.0"
