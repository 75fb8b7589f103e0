#!/usr/bin/env python3
"""
dps_lab
Learned probabilistic sub-sampling with unrolled sparse recovery (LISTA / ISTA)
on partial Fourier measurements of K-sparse signals
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
