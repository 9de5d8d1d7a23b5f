"""Frequency-domain forced-oscillation analysis: device FRFs, dynamic Ward
equivalents, dissipating-energy-flow reliability checks and a phasor pipeline."""

__version__ = "0.1.0"
