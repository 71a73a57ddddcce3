"""Box-quantized free scalar field in a truncated Fock space.

The field in a periodic box of side L is
φ(t,x) = Σ_k (2Vω_k)^-1/2 (a_k e^{i(k·x−ω_k t)} + h.c.), and the smeared
normal-ordered energy density ∫dt |g(t)|² :ρ(t,0): becomes

    Σ_{k,k'} B_{kk'} ĥ(ω_k−ω_k') a†_k a_k'
    + Σ_{k,k'} P_{kk'} (ĥ(ω_k+ω_k') a†_k a†_k' + h.c.)

with B = (ω_kω_k' + k·k' + m²)/(2V√(ω_kω_k')),
P = (m² − ω_kω_k' − k·k')/(4V√(ω_kω_k')) and ĥ the transform of |g|².
"""

import bisect
import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from itertools import combinations_with_replacement

import numpy as np
import numpy.typing as npt
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from qeilab.errors import MasslessZeroMode, MismatchedInputs
from qeilab.models.results import QeiBound, VerificationReport
from qeilab.models.weight import Weight
from qeilab.numerics.fourier import ComplexArray, GridSpec
from qeilab.numerics.quadrature import FloatArray
from qeilab.qei import worldline_qwei_bound
from qeilab.weights import power_spectrum_of_square

logger = logging.getLogger(__name__)

DENSE_LIMIT = 2000
"""この次元未満では密行列の固有値分解を使う。"""

ITERATIVE_TOL = 1e-10
"""反復固有値ソルバーの残差許容誤差。"""

DEFAULT_EPSILON = 0.25
"""有限体積補正の既定の許容幅 ε。"""

_PHASE_TIE = 1e-12
_LATTICE_SLACK = 1e-12

State = tuple[int, ...]
"""占有モード番号の昇順タプル（重複は多重占有）。"""


class Sector(StrEnum):
    """切断する粒子数セクター。"""

    TWO = "0+2"
    FOUR = "0+2+4"

    @property
    def particle_numbers(self) -> tuple[int, ...]:
        return (0, 2) if self is Sector.TWO else (0, 2, 4)


@dataclass(frozen=True, eq=False)
class ModeSet:
    """箱の中の運動量モードの集合。

    Attributes:
        box_length: 箱の一辺 L
        mass: 質量 m
        cutoff: 運動量カットオフ Λ
        momenta: 運動量ベクトル（形状 (M, 3)）
        k_min: 赤外下限（|k| < k_min のモードを除く）
    """

    box_length: float
    mass: float
    cutoff: float
    momenta: FloatArray
    k_min: float = 0.0

    def __post_init__(self) -> None:
        if not self.box_length > 0:
            raise ValueError(f"box length must be positive, got {self.box_length}")
        if not self.mass >= 0:
            raise ValueError(f"mass must be non-negative, got {self.mass}")
        if self.momenta.ndim != 2 or self.momenta.shape[1] != 3:
            raise ValueError("momenta must have shape (M, 3)")
        if self.momenta.shape[0] == 0:
            raise ValueError("mode set must contain at least one mode")
        if not np.all(self.frequencies > 0):
            raise MasslessZeroMode(
                "the k=0 mode has zero frequency at m=0; raise k_min or set m > 0"
            )

    @classmethod
    def from_momenta(
        cls,
        momenta: npt.ArrayLike,
        box_length: float,
        mass: float,
        cutoff: float | None = None,
    ) -> "ModeSet":
        """Build a mode set from hand-picked momenta (kept in the given order)."""
        k = np.atleast_2d(np.asarray(momenta, dtype=np.float64))
        norms = np.sqrt(np.sum(k * k, axis=1)) if k.size else np.zeros(0)
        top = float(norms.max()) if norms.size else 0.0
        return cls(
            box_length=box_length,
            mass=mass,
            cutoff=top if cutoff is None else cutoff,
            momenta=k,
        )

    @property
    def count(self) -> int:
        return int(self.momenta.shape[0])

    @property
    def volume(self) -> float:
        return self.box_length**3

    @property
    def frequencies(self) -> FloatArray:
        return np.sqrt(np.sum(self.momenta**2, axis=1) + self.mass**2)


def build_mode_set(
    box_length: float, cutoff: float, mass: float, k_min: float = 0.0
) -> ModeSet:
    """Collect every lattice momentum k ∈ (2π/L)ℤ³ with k_min ≤ |k| ≤ Λ.

    Modes are ordered by |n|² and then lexicographically in n, so the set is
    closed under k → −k and the cubic group.

    Raises:
        ValueError: If ``box_length`` or ``cutoff`` is not positive.
        MasslessZeroMode: If m = 0 and the k=0 mode would be included.
    """
    if not box_length > 0:
        raise ValueError(f"box length must be positive, got {box_length}")
    if not cutoff > 0:
        raise ValueError(f"momentum cutoff must be positive, got {cutoff}")
    if mass == 0.0 and k_min <= 0.0:
        raise MasslessZeroMode(
            "m=0 with no infrared floor would include the k=0 mode; set k_min > 0"
        )
    spacing = 2.0 * math.pi / box_length
    radius = cutoff / spacing
    n_max = math.floor(radius + _LATTICE_SLACK)
    axis = np.arange(-n_max, n_max + 1)
    n = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
    n_sq = np.sum(n * n, axis=1)
    keep = n_sq <= radius**2 * (1.0 + _LATTICE_SLACK)
    if k_min > 0.0:
        keep &= n_sq >= (k_min / spacing) ** 2 * (1.0 - _LATTICE_SLACK)
    n, n_sq = n[keep], n_sq[keep]
    order = np.lexsort((n[:, 2], n[:, 1], n[:, 0], n_sq))
    modes = ModeSet(
        box_length=box_length,
        mass=mass,
        cutoff=cutoff,
        momenta=spacing * n[order].astype(np.float64),
        k_min=k_min,
    )
    logger.debug("build_mode_set(L=%g, cutoff=%g): %d modes", box_length, cutoff, modes.count)
    return modes


@dataclass(frozen=True)
class FockBasis:
    """真空と 2 粒子（オプションで 4 粒子）状態の占有数基底。"""

    mode_count: int
    sector: Sector = Sector.TWO
    states: tuple[State, ...] = field(init=False)
    index: dict[State, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        states: list[State] = []
        for n in self.sector.particle_numbers:
            states.extend(combinations_with_replacement(range(self.mode_count), n))
        object.__setattr__(self, "states", tuple(states))
        object.__setattr__(self, "index", {s: i for i, s in enumerate(states)})

    @property
    def dimension(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[State]:
        return iter(self.states)


def _annihilate(state: State, mode: int) -> tuple[State, float]:
    """Apply a_mode; the state must occupy the mode."""
    i = state.index(mode)
    occupation = state.count(mode)
    return state[:i] + state[i + 1 :], math.sqrt(occupation)


def _create(state: State, mode: int) -> tuple[State, float]:
    """Apply a†_mode."""
    occupation = state.count(mode)
    out = list(state)
    bisect.insort(out, mode)
    return tuple(out), math.sqrt(occupation + 1)


@dataclass(frozen=True, eq=False)
class EnergyQuadraticForm:
    """切断 Fock 基底上の ∫dt |g(t)|² :ρ(t,0): の行列表現。"""

    matrix: scipy.sparse.csr_array
    basis: FockBasis
    modes: ModeSet
    weight: Weight

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def dense(self) -> npt.NDArray[np.complex128]:
        return np.asarray(self.matrix.toarray(), dtype=np.complex128)

    def hermiticity_defect(self) -> float:
        """max|A − A†| / max|A| (0 for the zero form)."""
        a = self.dense()
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(a - a.conj().T))) / scale


def _square_transform_lookup(w: Weight, freqs: FloatArray) -> ComplexArray:
    """Evaluate ĥ at an array of frequencies from one explicit-grid sample."""
    magnitude = np.abs(freqs)
    unique, inverse = np.unique(magnitude, return_inverse=True)
    grid = GridSpec.explicit(unique)
    samples = power_spectrum_of_square(w, grid)
    offset = samples.grid.size - unique.size
    values = samples.values[offset + inverse.reshape(freqs.shape)]
    return np.where(freqs < 0, np.conj(values), values)


def _coefficients(
    modes: ModeSet, w: Weight
) -> tuple[npt.NDArray[np.complex128], npt.NDArray[np.complex128]]:
    """Return (B·ĥ(ω−ω'), P·ĥ(ω+ω')) as M×M arrays."""
    k = modes.momenta
    omega = modes.frequencies
    m_sq = modes.mass**2
    volume = modes.volume
    dot = np.zeros((modes.count, modes.count))
    for axis in range(3):
        dot += np.multiply.outer(k[:, axis], k[:, axis])
    product = np.multiply.outer(omega, omega)
    root = np.sqrt(product)
    h_minus = _square_transform_lookup(w, np.subtract.outer(omega, omega))
    h_plus = _square_transform_lookup(w, np.add.outer(omega, omega))
    number = (product + dot + m_sq) / (2.0 * volume * root) * h_minus
    pair = (m_sq - product - dot) / (4.0 * volume * root) * h_plus
    return number, pair


def assemble_smeared_energy_form(
    modes: ModeSet, w: Weight, sector: Sector | str = Sector.TWO
) -> EnergyQuadraticForm:
    """Assemble the matrix of ∫dt |g(t)|² :ρ(t,0): in the truncated basis.

    Number-conserving elements couple states of equal particle number; the
    pair-creation block couples n to n+2 and is mirrored into the
    annihilation block. The vacuum row and column carry no diagonal entry.

    Args:
        modes: Mode set of the box.
        w: Weight g along the worldline x = 0.
        sector: "0+2" or "0+2+4".

    Returns:
        EnergyQuadraticForm as a sparse Hermitian matrix.
    """
    basis = FockBasis(modes.count, Sector(sector))
    number, pair = _coefficients(modes, w)
    top = max(basis.sector.particle_numbers)
    rows: list[int] = []
    cols: list[int] = []
    data: list[complex] = []

    for col, state in enumerate(basis):
        for q in sorted(set(state)):
            reduced, f_q = _annihilate(state, q)
            for p in range(modes.count):
                target, f_p = _create(reduced, p)
                rows.append(basis.index[target])
                cols.append(col)
                data.append(complex(number[p, q]) * f_q * f_p)

    c_rows: list[int] = []
    c_cols: list[int] = []
    c_data: list[complex] = []
    for col, state in enumerate(basis):
        if len(state) + 2 > top:
            continue
        for p in range(modes.count):
            once, f_p = _create(state, p)
            for q in range(p, modes.count):
                target, f_q = _create(once, q)
                multiplicity = 1.0 if p == q else 2.0
                c_rows.append(basis.index[target])
                c_cols.append(col)
                c_data.append(multiplicity * complex(pair[p, q]) * f_p * f_q)

    shape = (basis.dimension, basis.dimension)
    conserving = scipy.sparse.coo_array((data, (rows, cols)), shape=shape)
    creation = scipy.sparse.coo_array((c_data, (c_rows, c_cols)), shape=shape)
    matrix = (conserving + creation + creation.conj().T).tocsr()
    logger.debug(
        "assembled %s form: dimension %d, %d non-zeros",
        basis.sector,
        basis.dimension,
        matrix.nnz,
    )
    return EnergyQuadraticForm(matrix=matrix, basis=basis, modes=modes, weight=w)


def _fix_phase(vector: npt.NDArray[np.complex128]) -> npt.NDArray[np.complex128]:
    """Normalize and rotate so the first largest component is real positive."""
    v = vector / np.linalg.norm(vector)
    magnitude = np.abs(v)
    pivot = int(np.flatnonzero(magnitude >= magnitude.max() * (1.0 - _PHASE_TIE))[0])
    return np.asarray(v * (np.conj(v[pivot]) / magnitude[pivot]), dtype=np.complex128)


def min_eigenvalue(
    form: EnergyQuadraticForm,
) -> tuple[float, npt.NDArray[np.complex128]]:
    """Smallest eigenvalue of the form and its eigenvector.

    Dense ``scipy.linalg.eigh`` is used below ``DENSE_LIMIT``; larger forms
    use ``scipy.sparse.linalg.eigsh`` with a fixed start vector.
    """
    n = form.dimension
    if n < DENSE_LIMIT:
        values, vectors = scipy.linalg.eigh(form.dense(), subset_by_index=[0, 0])
        logger.debug("min_eigenvalue: dense eigh (dimension %d)", n)
    else:
        logger.warning(
            "min_eigenvalue: dimension %d >= %d, using iterative eigsh", n, DENSE_LIMIT
        )
        start = np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128)
        values, vectors = scipy.sparse.linalg.eigsh(
            form.matrix.astype(np.complex128), k=1, which="SA", v0=start, tol=ITERATIVE_TOL
        )
    return float(values[0]), _fix_phase(vectors[:, 0])


def verify_qwei(
    form: EnergyQuadraticForm, bound: QeiBound, epsilon: float = DEFAULT_EPSILON
) -> VerificationReport:
    """Check λ_min ≥ −Q[g](1+ε) for a form and a bound of the same weight and mass.

    Raises:
        MismatchedInputs: If the bound was computed for another weight or mass.
        ValueError: If ``epsilon`` is negative.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    if bound.mass is None or bound.mass != form.modes.mass:
        raise MismatchedInputs(
            f"bound mass {bound.mass} differs from mode-set mass {form.modes.mass}"
        )
    if bound.weight != form.weight:
        raise MismatchedInputs("bound and form were built from different weights")
    lam, _ = min_eigenvalue(form)
    q = bound.q_value
    passed = lam >= -q * (1.0 + epsilon)
    report = VerificationReport(
        lambda_min=lam,
        minus_q=-q,
        q_value=q,
        ratio=abs(lam) / q if q > 0 else None,
        passed=passed,
        epsilon=epsilon,
        dimension=form.dimension,
        deficit=abs(lam + q),
        box_length=form.modes.box_length,
        mode_count=form.modes.count,
    )
    logger.info(
        "verify_qwei L=%g dim=%d: lambda_min=%.6e, -q=%.6e, pass=%s",
        form.modes.box_length,
        form.dimension,
        lam,
        -q,
        passed,
    )
    return report


def volume_trend(
    box_lengths: Sequence[float],
    cutoff: float,
    w: Weight,
    mass: float,
    epsilon: float = DEFAULT_EPSILON,
    sector: Sector | str = Sector.TWO,
    k_min: float = 0.0,
) -> list[VerificationReport]:
    """Verify the bound at fixed physical cutoff over increasing box sizes."""
    bound = worldline_qwei_bound(w, mass)
    reports = []
    for length in sorted(box_lengths):
        modes = build_mode_set(length, cutoff, mass, k_min=k_min)
        form = assemble_smeared_energy_form(modes, w, sector)
        reports.append(verify_qwei(form, bound, epsilon))
    return reports


__all__ = [
    "DEFAULT_EPSILON",
    "DENSE_LIMIT",
    "EnergyQuadraticForm",
    "FockBasis",
    "ModeSet",
    "Sector",
    "assemble_smeared_energy_form",
    "build_mode_set",
    "min_eigenvalue",
    "verify_qwei",
    "volume_trend",
]
