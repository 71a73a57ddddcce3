"""qeilab - Quantum energy inequality bounds and truncated Fock-space checks.

自由場・一般化自由場の QWEI 下界の数値計算、切断 Fock 空間での検証、
質量スペクトルの核型性診断を行うツールキット。
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("qeilab")
except PackageNotFoundError:
    __version__ = "0.0.0"  # 開発モード（未インストール時）

from qeilab.fock import (
    EnergyQuadraticForm,
    FockBasis,
    ModeSet,
    assemble_smeared_energy_form,
    build_mode_set,
    min_eigenvalue,
    verify_qwei,
    volume_trend,
)
from qeilab.models import (
    ArithmeticSpectrum,
    BumpWeight,
    Cos2Weight,
    GaussianWeight,
    ListSpectrum,
    LogarithmicSpectrum,
    PowerLawSpectrum,
    QeiBound,
    SampledWeight,
    ScalingCurve,
    VerificationReport,
)
from qeilab.qei import (
    WorldlineDecomposition,
    fit_scaling_exponent,
    gff_qwei_bound,
    local_slopes,
    scaling_curve,
    vacuum_reference_bound,
    worldline_qwei_bound,
)
from qeilab.spectrum import (
    counting,
    fit_nuclearity_exponent,
    mass,
    nuclearity_log_index,
    partition_sum,
)
from qeilab.weights import (
    evaluate,
    fourier_transform_weight,
    norm_squared,
    power_spectrum_of_square,
    rescale,
)

__all__ = [
    "__version__",
    # Weights
    "GaussianWeight",
    "BumpWeight",
    "Cos2Weight",
    "SampledWeight",
    "evaluate",
    "rescale",
    "norm_squared",
    "fourier_transform_weight",
    "power_spectrum_of_square",
    # Spectrum
    "ListSpectrum",
    "ArithmeticSpectrum",
    "PowerLawSpectrum",
    "LogarithmicSpectrum",
    "mass",
    "counting",
    "partition_sum",
    "nuclearity_log_index",
    "fit_nuclearity_exponent",
    # QEI
    "QeiBound",
    "ScalingCurve",
    "WorldlineDecomposition",
    "worldline_qwei_bound",
    "gff_qwei_bound",
    "vacuum_reference_bound",
    "scaling_curve",
    "fit_scaling_exponent",
    "local_slopes",
    # Fock
    "ModeSet",
    "FockBasis",
    "EnergyQuadraticForm",
    "VerificationReport",
    "build_mode_set",
    "assemble_smeared_energy_form",
    "min_eigenvalue",
    "verify_qwei",
    "volume_trend",
]
