"""States, corrective rotations, depolarizing channels and purifications."""
import logging
from enum import StrEnum
from typing import Sequence

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import InvalidStateError
from .linalg import (
    ComplexMatrix,
    DensityMatrix,
    PureState,
    _readonly,
    as_square,
    eig_hermitian,
    kron_all,
    projector,
)

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)

UNITARY_ATOL = 1e-10
COMPLETENESS_ATOL = 1e-9
PURIFY_CUTOFF = 1e-12

Bit = int
BellLabel = tuple[Bit, Bit]
BELL_LABELS: tuple[BellLabel, ...] = ((0, 0), (0, 1), (1, 0), (1, 1))


class BlochVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    x: float
    y: float
    z: float

    @model_validator(mode="after")
    def _check_unit(self) -> "BlochVector":
        norm_sq = self.x**2 + self.y**2 + self.z**2
        if abs(norm_sq - 1.0) > 1e-10:
            raise ValueError(f"Bloch vector must be a unit vector, |a|^2 = {norm_sq:.12g}")
        return self

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "BlochVector":
        return cls(
            x=float(np.sin(theta) * np.cos(phi)),
            y=float(np.sin(theta) * np.sin(phi)),
            z=float(np.cos(theta)),
        )

    @classmethod
    def from_array(cls, vector: npt.ArrayLike) -> "BlochVector":
        x, y, z = (float(v) for v in np.asarray(vector, dtype=np.float64).reshape(3))
        return cls(x=x, y=y, z=z)

    def as_array(self) -> npt.NDArray[np.float64]:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    def spin_operator(self) -> ComplexMatrix:
        return self.x * PAULI_X + self.y * PAULI_Y + self.z * PAULI_Z


AXIAL_POINTS: tuple[BlochVector, ...] = (
    BlochVector(x=1.0, y=0.0, z=0.0),
    BlochVector(x=-1.0, y=0.0, z=0.0),
    BlochVector(x=0.0, y=1.0, z=0.0),
    BlochVector(x=0.0, y=-1.0, z=0.0),
    BlochVector(x=0.0, y=0.0, z=1.0),
    BlochVector(x=0.0, y=0.0, z=-1.0),
)


class KrausChannel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    operators: tuple[np.ndarray, ...]

    @field_validator("operators", mode="before")
    @classmethod
    def _coerce_operators(cls, value: Sequence[npt.ArrayLike]) -> tuple[np.ndarray, ...]:
        return tuple(_readonly(as_square(op)) for op in value)

    @model_validator(mode="after")
    def _check_completeness(self) -> "KrausChannel":
        if not self.operators:
            raise ValueError("a channel needs at least one Kraus operator")
        dim = self.operators[0].shape[0]
        if any(op.shape != (dim, dim) for op in self.operators):
            raise ValueError("Kraus operators must share one dimension")
        total = sum(op.conj().T @ op for op in self.operators)
        if np.max(np.abs(total - np.eye(dim))) > COMPLETENESS_ATOL:
            raise ValueError("Kraus operators do not satisfy sum E^dag E = I")
        return self

    @property
    def dim(self) -> int:
        return int(self.operators[0].shape[0])

    def apply(self, matrix: npt.ArrayLike) -> ComplexMatrix:
        rho = as_square(matrix)
        return sum(op @ rho @ op.conj().T for op in self.operators)

    def on_qubit(self, qubit: int, n_qubits: int) -> "KrausChannel":
        """Embed a single-qubit channel acting on `qubit` of an n-qubit register."""
        if self.dim != 2:
            raise InvalidStateError("only single-qubit channels can be embedded")
        operators = []
        for op in self.operators:
            factors = [PAULI_I] * n_qubits
            factors[qubit] = op
            operators.append(kron_all(factors))
        return KrausChannel(operators=operators)


CorrectionKey = tuple[Bit, Bit, int]


class CorrectionTable(BaseModel):
    """Bob's corrective rotations keyed by (s0, s1, gamma).

    Each entry is the SU(2) rotation R that maps the teleported Bloch vector
    onto Bob's vector; Bob undoes it by applying R^dagger.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    entries: dict[CorrectionKey, np.ndarray]

    @field_validator("entries", mode="before")
    @classmethod
    def _coerce_entries(
        cls, value: dict[CorrectionKey, npt.ArrayLike]
    ) -> dict[CorrectionKey, np.ndarray]:
        return {tuple(key): _readonly(as_square(op)) for key, op in value.items()}  # type: ignore[misc]

    @model_validator(mode="after")
    def _check_unitary(self) -> "CorrectionTable":
        for key, op in self.entries.items():
            if op.shape != (2, 2):
                raise ValueError(f"correction {key} is not a qubit operator")
            if np.max(np.abs(op.conj().T @ op - PAULI_I)) > UNITARY_ATOL:
                raise ValueError(f"correction {key} is not unitary")
        return self

    def rotation(self, s0: Bit, s1: Bit, gamma: int) -> ComplexMatrix:
        return self.entries[(s0, s1, gamma)]

    def row(self, gamma: int) -> dict[BellLabel, ComplexMatrix]:
        return {label: self.entries[(*label, gamma)] for label in BELL_LABELS}


def make_ghz() -> PureState:
    amplitudes = np.zeros(8, dtype=np.complex128)
    amplitudes[0] = amplitudes[7] = 1 / np.sqrt(2)
    return PureState(amplitudes=amplitudes)


def make_bell(c0: Bit, c1: Bit) -> PureState:
    """Bell state |phi^{c0 c1}>: c0 selects the parity, c1 the relative sign."""
    if c0 not in (0, 1) or c1 not in (0, 1):
        raise InvalidStateError(f"Bell labels must be bits, got ({c0}, {c1})")
    amplitudes = np.zeros(4, dtype=np.complex128)
    sign = -1.0 if c1 else 1.0
    if c0 == 0:
        amplitudes[0], amplitudes[3] = 1.0, sign
    else:
        amplitudes[1], amplitudes[2] = 1.0, sign
    return PureState(amplitudes=amplitudes / np.sqrt(2))


def bell_projectors() -> dict[BellLabel, ComplexMatrix]:
    return {label: projector(make_bell(*label).amplitudes) for label in BELL_LABELS}


def bell_frame(c0: Bit, c1: Bit) -> ComplexMatrix:
    """Pauli V with |phi^{c0 c1}> = (I x V)|phi^{00}>."""
    frame = PAULI_I
    if c1:
        frame = PAULI_Z
    if c0:
        frame = PAULI_X @ frame
    return frame


def bloch_state(a: BlochVector) -> DensityMatrix:
    return DensityMatrix(matrix=(PAULI_I + a.spin_operator()) / 2, n_qubits=1)


def bloch_operator(vector: npt.ArrayLike) -> ComplexMatrix:
    """(I + a.sigma)/2 for any real 3-vector, without the unit-norm check."""
    x, y, z = np.asarray(vector, dtype=np.float64).reshape(3)
    return (PAULI_I + x * PAULI_X + y * PAULI_Y + z * PAULI_Z) / 2


def correction_table() -> CorrectionTable:
    return CorrectionTable(
        entries={
            (0, 0, +1): PAULI_I,
            (0, 1, +1): PAULI_Z,
            (1, 0, +1): PAULI_X,
            (1, 1, +1): PAULI_Y,
            (0, 0, -1): PAULI_Z,
            (0, 1, -1): PAULI_I,
            (1, 0, -1): PAULI_Y,
            (1, 1, -1): PAULI_X,
        }
    )


def _as_density(state: PureState | DensityMatrix) -> DensityMatrix:
    if isinstance(state, PureState):
        return state.density()
    return state


def _check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidStateError(f"noise parameter p must be in [0, 1], got {p}")
    return p


def depolarize_total(state: PureState | DensityMatrix, p: float) -> DensityMatrix:
    """Mix the whole state with white noise: p I/d + (1 - p) rho."""
    p = _check_probability(p)
    rho = _as_density(state)
    mixed = p * np.eye(rho.dim) / rho.dim + (1 - p) * rho.matrix
    return DensityMatrix(matrix=mixed, n_qubits=rho.n_qubits)


def replace_qubit(matrix: npt.ArrayLike, qubit: int, n_qubits: int, p: float) -> ComplexMatrix:
    """Replace `qubit` by I/2 with probability p."""
    rho = as_square(matrix)
    n = n_qubits
    tensor = rho.reshape([2] * (2 * n))
    marginal = np.trace(tensor, axis1=qubit, axis2=n + qubit)
    replaced = np.multiply.outer(marginal, PAULI_I / 2)
    replaced = np.moveaxis(replaced, [2 * n - 2, 2 * n - 1], [qubit, n + qubit])
    return (1 - p) * rho + p * replaced.reshape(rho.shape)


def depolarize_qubit(state: PureState | DensityMatrix, p: float) -> DensityMatrix:
    """Each qubit independently replaced by I/2 with probability p."""
    p = _check_probability(p)
    rho = _as_density(state)
    matrix = rho.matrix
    for qubit in range(rho.n_qubits):
        matrix = replace_qubit(matrix, qubit, rho.n_qubits, p)
    return DensityMatrix(matrix=matrix, n_qubits=rho.n_qubits)


class Channel(StrEnum):
    Total = "total"
    Qubit = "qubit"


def depolarize(channel: Channel, state: PureState | DensityMatrix, p: float) -> DensityMatrix:
    if Channel(channel) == Channel.Total:
        return depolarize_total(state, p)
    return depolarize_qubit(state, p)


def noisy_ghz(channel: Channel, p: float) -> DensityMatrix:
    return depolarize(channel, make_ghz(), p)


def qubit_depolarizing_kraus(p: float) -> KrausChannel:
    """Kraus form of the single-qubit replacement channel with probability p."""
    p = _check_probability(p)
    weight = np.sqrt(p / 4)
    return KrausChannel(
        operators=[
            np.sqrt(1 - 3 * p / 4) * PAULI_I,
            weight * PAULI_X,
            weight * PAULI_Y,
            weight * PAULI_Z,
        ]
    )


def apply_kraus(
    channel: KrausChannel,
    state: PureState | DensityMatrix,
    qubits: Sequence[int] | None = None,
) -> DensityMatrix:
    """Apply `channel` to the whole state, or independently to each listed qubit."""
    rho = _as_density(state)
    if qubits is None:
        if channel.dim != rho.dim:
            raise InvalidStateError(
                f"channel dimension {channel.dim} does not match state dimension {rho.dim}"
            )
        return DensityMatrix(matrix=channel.apply(rho.matrix), n_qubits=rho.n_qubits)
    matrix = rho.matrix
    for qubit in qubits:
        if not 0 <= qubit < rho.n_qubits:
            raise InvalidStateError(f"qubit {qubit} out of range 0..{rho.n_qubits - 1}")
        matrix = channel.on_qubit(qubit, rho.n_qubits).apply(matrix)
    return DensityMatrix(matrix=matrix, n_qubits=rho.n_qubits)


def purify(rho: DensityMatrix) -> PureState:
    """Purification sum_k sqrt(lambda_k) |L_k>|L_k> with a square ancilla.

    Null eigen-branches are dropped and the global phase is fixed so that the
    largest amplitude is real and positive.
    """
    decomposition = eig_hermitian(rho.matrix)
    amplitudes = np.zeros(rho.dim * rho.dim, dtype=np.complex128)
    for value, vector in zip(
        decomposition.eigenvalues, decomposition.eigenvectors.T, strict=True
    ):
        if value <= PURIFY_CUTOFF:
            continue
        amplitudes += np.sqrt(value) * np.kron(vector, vector)
    amplitudes /= np.linalg.norm(amplitudes)
    pivot = amplitudes[int(np.argmax(np.abs(amplitudes)))]
    amplitudes *= abs(pivot) / pivot
    logging.debug(f"states: purified rank {int(np.sum(decomposition.eigenvalues > PURIFY_CUTOFF))} state")
    return PureState(amplitudes=amplitudes)


def random_density_matrix(
    n_qubits: int, rng: np.random.Generator, rank: int | None = None
) -> DensityMatrix:
    dim = 2**n_qubits
    columns = dim if rank is None else rank
    ginibre = rng.normal(size=(dim, columns)) + 1j * rng.normal(size=(dim, columns))
    matrix = ginibre @ ginibre.conj().T
    return DensityMatrix(matrix=matrix / np.trace(matrix).real, n_qubits=n_qubits)


def random_bloch_vectors(count: int, rng: np.random.Generator) -> npt.NDArray[np.float64]:
    """Haar-uniform points on the Bloch sphere as a (count, 3) array."""
    points = rng.normal(size=(count, 3))
    return points / np.linalg.norm(points, axis=1, keepdims=True)
