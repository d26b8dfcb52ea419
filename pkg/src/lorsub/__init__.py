"""Numeric verification of semi-Riemannian submersions from Lorentzian (para)Sasakian manifolds."""

__version__ = "0.1.0"
