"""Dense complex linear algebra on small Hilbert spaces.

Qubit 0 is the most significant tensor factor, i.e. the leftmost factor of a
Kronecker product. Every module in the package follows this convention.
"""
import math
from typing import Iterable, Sequence

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import InvalidStateError

ComplexMatrix = npt.NDArray[np.complex128]
RealVector = npt.NDArray[np.float64]

HERMITIAN_ATOL = 1e-10
PSD_ATOL = 1e-9
TRACE_ATOL = 1e-10
NORM_ATOL = 1e-10
RECONSTRUCTION_ATOL = 1e-9


def _readonly(array: npt.ArrayLike, dtype: type = np.complex128) -> np.ndarray:
    value = np.array(array, dtype=dtype, copy=True)
    value.flags.writeable = False
    return value


def _qubit_count(dim: int) -> int:
    n_qubits = int(round(math.log2(dim))) if dim > 0 else -1
    if n_qubits < 0 or 2**n_qubits != dim:
        raise InvalidStateError(f"dimension {dim} is not a power of two")
    return n_qubits


def as_square(matrix: npt.ArrayLike) -> ComplexMatrix:
    value = np.asarray(matrix, dtype=np.complex128)
    if value.ndim != 2 or value.shape[0] != value.shape[1] or value.shape[0] < 1:
        raise InvalidStateError(f"expected a square matrix, got shape {value.shape}")
    return value


def hermitian_part(matrix: npt.ArrayLike) -> ComplexMatrix:
    value = as_square(matrix)
    return (value + value.conj().T) / 2


def hermiticity_residual(matrix: npt.ArrayLike) -> float:
    value = as_square(matrix)
    return float(np.max(np.abs(value - value.conj().T)))


def is_hermitian(matrix: npt.ArrayLike, atol: float = HERMITIAN_ATOL) -> bool:
    return hermiticity_residual(matrix) <= atol


def min_eigenvalue(matrix: npt.ArrayLike) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(matrix))[0])


def projector(vector: npt.ArrayLike) -> ComplexMatrix:
    ket = np.asarray(vector, dtype=np.complex128).reshape(-1)
    return np.outer(ket, ket.conj())


def psd_power(
    matrix: npt.ArrayLike, power: float, cutoff: float = 1e-12
) -> ComplexMatrix:
    """Matrix power of a PSD matrix restricted to its support.

    Eigenvalues at or below `cutoff` are mapped to zero, which makes negative
    powers act as pseudo-inverses.
    """
    values, vectors = np.linalg.eigh(hermitian_part(matrix))
    scaled = np.zeros_like(values)
    support = values > cutoff
    scaled[support] = values[support] ** power
    return (vectors * scaled) @ vectors.conj().T


class DensityMatrix(BaseModel):
    """A Hermitian, positive semi-definite, unit trace operator on qubits."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray
    n_qubits: int

    @field_validator("matrix", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: npt.ArrayLike) -> np.ndarray:
        return _readonly(as_square(value))

    @model_validator(mode="after")
    def _check_invariants(self) -> "DensityMatrix":
        dim = self.matrix.shape[0]
        if self.n_qubits < 1 or 2**self.n_qubits != dim:
            raise ValueError(
                f"matrix dimension {dim} does not match {self.n_qubits} qubits"
            )
        residual = hermiticity_residual(self.matrix)
        if residual > HERMITIAN_ATOL:
            raise ValueError(f"density matrix is not Hermitian (residual {residual:.3e})")
        trace = complex(np.trace(self.matrix))
        if abs(trace - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace is {trace.real:.12g}, expected 1")
        lowest = min_eigenvalue(self.matrix)
        if lowest < -PSD_ATOL:
            raise ValueError(f"density matrix is not PSD (min eigenvalue {lowest:.3e})")
        return self

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @classmethod
    def from_array(cls, matrix: npt.ArrayLike) -> "DensityMatrix":
        value = as_square(matrix)
        return cls(matrix=value, n_qubits=_qubit_count(value.shape[0]))

    @classmethod
    def from_pure(cls, state: "PureState") -> "DensityMatrix":
        return cls.from_array(projector(state.amplitudes))

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2**n_qubits
        return cls(matrix=np.eye(dim) / dim, n_qubits=n_qubits)


class PureState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    amplitudes: np.ndarray

    @field_validator("amplitudes", mode="before")
    @classmethod
    def _coerce_amplitudes(cls, value: npt.ArrayLike) -> np.ndarray:
        vector = np.asarray(value, dtype=np.complex128).reshape(-1)
        if vector.size < 1:
            raise ValueError("a pure state needs at least one amplitude")
        return _readonly(vector)

    @model_validator(mode="after")
    def _check_norm(self) -> "PureState":
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > NORM_ATOL:
            raise ValueError(f"state norm is {norm:.12g}, expected 1")
        return self

    @property
    def dim(self) -> int:
        return int(self.amplitudes.size)

    @property
    def n_qubits(self) -> int:
        return _qubit_count(self.dim)

    def density(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self)


class EigenDecomposition(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @field_validator("eigenvalues", mode="before")
    @classmethod
    def _coerce_values(cls, value: npt.ArrayLike) -> np.ndarray:
        return _readonly(np.asarray(value, dtype=np.float64).reshape(-1), np.float64)

    @field_validator("eigenvectors", mode="before")
    @classmethod
    def _coerce_vectors(cls, value: npt.ArrayLike) -> np.ndarray:
        return _readonly(as_square(value))

    @model_validator(mode="after")
    def _check_orthonormal(self) -> "EigenDecomposition":
        vectors = self.eigenvectors
        if vectors.shape[0] != self.eigenvalues.size:
            raise ValueError("eigenvector count does not match eigenvalue count")
        if np.any(np.diff(self.eigenvalues) < 0):
            raise ValueError("eigenvalues must be ascending")
        gram = vectors.conj().T @ vectors
        if np.max(np.abs(gram - np.eye(vectors.shape[0]))) > RECONSTRUCTION_ATOL:
            raise ValueError("eigenvectors are not orthonormal")
        return self

    def reconstruct(self) -> ComplexMatrix:
        vectors = self.eigenvectors
        return (vectors * self.eigenvalues) @ vectors.conj().T


def kron(a: npt.ArrayLike, b: npt.ArrayLike) -> ComplexMatrix:
    return np.kron(as_square(a), as_square(b))


def kron_all(factors: Sequence[npt.ArrayLike]) -> ComplexMatrix:
    result = np.eye(1, dtype=np.complex128)
    for factor in factors:
        result = np.kron(result, as_square(factor))
    return result


def reduce_operator(
    operator: npt.ArrayLike, dims: Sequence[int], keep: Iterable[int]
) -> ComplexMatrix:
    """Partial trace of `operator` over every factor not listed in `keep`.

    `dims` lists the factor dimensions, most significant first. The kept
    factors are returned in their original order.
    """
    value = as_square(operator)
    dims = [int(d) for d in dims]
    kept = sorted(set(int(k) for k in keep))
    n = len(dims)
    if not kept:
        raise InvalidStateError("cannot trace out all subsystems")
    if kept[0] < 0 or kept[-1] >= n:
        raise InvalidStateError(f"subsystem indices {kept} out of range 0..{n - 1}")
    if math.prod(dims) != value.shape[0]:
        raise InvalidStateError(
            f"factor dimensions {dims} do not match operator dimension {value.shape[0]}"
        )

    tensor = value.reshape(dims + dims)
    subscripts = list(range(2 * n))
    for index in range(n):
        if index not in kept:
            subscripts[n + index] = index
    output = kept + [n + k for k in kept]
    reduced = np.einsum(tensor, subscripts, output)
    size = math.prod(dims[k] for k in kept)
    return reduced.reshape(size, size)


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    kept = sorted(set(keep))
    reduced = reduce_operator(rho.matrix, [2] * rho.n_qubits, kept)
    return DensityMatrix(matrix=reduced, n_qubits=len(kept))


def eig_hermitian(matrix: npt.ArrayLike) -> EigenDecomposition:
    value = as_square(matrix)
    residual = hermiticity_residual(value)
    if residual > HERMITIAN_ATOL:
        raise InvalidStateError(
            f"eig_hermitian needs a Hermitian matrix (residual {residual:.3e})"
        )
    eigenvalues, eigenvectors = np.linalg.eigh(hermitian_part(value))
    decomposition = EigenDecomposition(
        eigenvalues=eigenvalues, eigenvectors=eigenvectors
    )
    error = float(np.max(np.abs(decomposition.reconstruct() - value)))
    if error > RECONSTRUCTION_ATOL:
        raise InvalidStateError(f"eigendecomposition reconstruction error {error:.3e}")
    return decomposition


def fidelity_pure(rho: DensityMatrix, phi: PureState) -> float:
    """Overlap <phi|rho|phi> of a mixed state with a pure one."""
    if rho.dim != phi.dim:
        raise InvalidStateError(
            f"dimension mismatch: state has {rho.dim}, vector has {phi.dim}"
        )
    overlap = complex(np.vdot(phi.amplitudes, rho.matrix @ phi.amplitudes))
    return float(min(1.0, max(0.0, overlap.real)))
