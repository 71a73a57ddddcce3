"""Deterministic quadrature and Fourier engine."""

from qeilab.numerics.envelope import DecayEnvelope
from qeilab.numerics.fitting import fit_power_law, local_slopes, select_window
from qeilab.numerics.fourier import (
    GridSpec,
    SpectralSamples,
    direct_transform,
    fft_transform,
    panel_rule,
)
from qeilab.numerics.quadrature import (
    FloatArray,
    Integrand,
    cumulative_integral,
    cumulative_tail,
    integrate_finite,
    integrate_semi_infinite,
)

__all__ = [
    # Envelope
    "DecayEnvelope",
    # Quadrature
    "FloatArray",
    "Integrand",
    "cumulative_integral",
    "cumulative_tail",
    "integrate_finite",
    "integrate_semi_infinite",
    # Fourier
    "GridSpec",
    "SpectralSamples",
    "direct_transform",
    "fft_transform",
    "panel_rule",
    # Fitting
    "fit_power_law",
    "local_slopes",
    "select_window",
]
