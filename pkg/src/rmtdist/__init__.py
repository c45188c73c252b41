"""Random-matrix distribution functions via operator determinants."""

__version__ = "0.1.0"
