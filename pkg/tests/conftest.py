"""Pytest fixtures for qeilab tests."""

from pathlib import Path
from typing import TYPE_CHECKING

import pytest

if TYPE_CHECKING:
    from typer.testing import CliRunner

from qeilab.models import (
    ArithmeticSpectrum,
    BumpWeight,
    Cos2Weight,
    GaussianWeight,
    ListSpectrum,
    LogarithmicSpectrum,
    PowerLawSpectrum,
    SampledWeight,
    SamplesParams,
)


@pytest.fixture
def gaussian() -> GaussianWeight:
    """Provide the unit gaussian weight."""
    return GaussianWeight()


@pytest.fixture
def bump() -> BumpWeight:
    """Provide the unit bump weight on [-1, 1]."""
    return BumpWeight()


@pytest.fixture
def cos2() -> Cos2Weight:
    """Provide the unit cos² window on [-1, 1]."""
    return Cos2Weight()


@pytest.fixture
def sampled_cos2() -> SampledWeight:
    """Provide a cos² window tabulated on 201 points."""
    import numpy as np

    t = np.linspace(-1.0, 1.0, 201)
    g = np.cos(0.5 * np.pi * t) ** 2
    return SampledWeight(
        params=SamplesParams(t=tuple(float(x) for x in t), g=tuple(float(x) for x in g))
    )


@pytest.fixture
def single_mass() -> ListSpectrum:
    """Provide a one-species spectrum with m=1."""
    return ListSpectrum(masses=(1.0,))


@pytest.fixture
def arithmetic() -> ArithmeticSpectrum:
    """Provide the arithmetic spectrum m_j = j."""
    return ArithmeticSpectrum(m0=1.0)


@pytest.fixture
def quadratic() -> PowerLawSpectrum:
    """Provide the power-law spectrum N(u) = ⌊u²⌋."""
    return PowerLawSpectrum(c=1.0, p=2.0)


@pytest.fixture
def logarithmic() -> LogarithmicSpectrum:
    """Provide the logarithmic spectrum m_j = log(j+1)."""
    return LogarithmicSpectrum(scale=1.0)


@pytest.fixture
def temp_dir(tmp_path: Path) -> Path:
    """Provide a temporary directory for tests."""
    return tmp_path


@pytest.fixture
def runner() -> "CliRunner":
    """Create CLI test runner."""
    from typer.testing import CliRunner

    return CliRunner()
