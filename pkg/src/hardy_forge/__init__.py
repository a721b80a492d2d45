"""Hardy-inequality violations for entangled pure states."""

__version__ = "0.1.0"
