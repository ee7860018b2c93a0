"""Recursive polynomial chaos for polynomial SDEs."""

__version__ = "0.1.0"
