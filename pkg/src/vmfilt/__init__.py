"""Separable FIR/IIR image filters with prescribed vanishing moments."""

__version__ = "0.1.0"
