"""Data models for qeilab."""

from qeilab.models.record import RunMetadata, RunRecord
from qeilab.models.results import (
    BoundRoute,
    ExponentFit,
    NuclearityEstimate,
    PartitionSum,
    QeiBound,
    QuadratureResult,
    ScalingCurve,
    SeriesTest,
    VerificationReport,
)
from qeilab.models.spectrum import (
    ArithmeticSpectrum,
    ListSpectrum,
    LogarithmicSpectrum,
    MassSpectrum,
    PowerLawSpectrum,
    SpectrumKind,
    SpectrumSpec,
)
from qeilab.models.weight import (
    BumpWeight,
    Cos2Weight,
    GaussianWeight,
    ProfileParams,
    SampledWeight,
    SamplesParams,
    Weight,
    WeightFamily,
    WeightSpec,
)

__all__ = [
    # Weight
    "WeightFamily",
    "ProfileParams",
    "SamplesParams",
    "GaussianWeight",
    "BumpWeight",
    "Cos2Weight",
    "SampledWeight",
    "Weight",
    "WeightSpec",
    # Spectrum
    "SpectrumKind",
    "ListSpectrum",
    "ArithmeticSpectrum",
    "PowerLawSpectrum",
    "LogarithmicSpectrum",
    "MassSpectrum",
    "SpectrumSpec",
    # Results
    "BoundRoute",
    "SeriesTest",
    "QuadratureResult",
    "ExponentFit",
    "QeiBound",
    "ScalingCurve",
    "PartitionSum",
    "NuclearityEstimate",
    "VerificationReport",
    # Record
    "RunMetadata",
    "RunRecord",
]
