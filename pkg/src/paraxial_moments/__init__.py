"""Moments of paraxial waves in random media: closed forms and Monte-Carlo checks."""

__version__ = "0.1.0"
