"""OpenPBR surface as a mixture of BSDF lobes."""

__version__ = "0.1.0"
