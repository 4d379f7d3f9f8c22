"""Essential spectra and Fredholm checks for many-body type operators."""

__version__ = "0.1.0"
