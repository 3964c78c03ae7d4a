"""Black-box statistics of the untrusted-receiver test and Bell functionals.

Alice's box takes an input j, prepares the qubit a_j, rotates her share by
the analyzer frame and performs the Bell measurement on (input, share). The
outcome s0 s1 is reduced to alpha = 2 s_j - 1. Bob and Charlie measure spin
along b_k and c_l.

Outcome axes are indexed 0 for +1 and 1 for -1 throughout.
"""
import functools
import itertools
import logging
from enum import StrEnum
from typing import Iterator, Sequence

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.optimize import minimize

from .errors import InvalidStateError
from .linalg import ComplexMatrix, DensityMatrix, _readonly, kron, reduce_operator
from .states import (
    BELL_LABELS,
    PAULI_I,
    PAULIS,
    BlochVector,
    Channel,
    bell_projectors,
    bloch_operator,
)

SIGNS = np.array([1.0, -1.0])
PROBABILITY_ATOL = 1e-9
NEGATIVE_ATOL = 1e-12

CHSH_COEFFS = np.array([[1.0, 1.0], [1.0, -1.0]])
CHSH_PRIMED_COEFFS = np.array([[1.0, -1.0], [-1.0, -1.0]])
# indexed [j, k, l]
SVETLICHNY_COEFFS = np.array([CHSH_COEFFS, CHSH_PRIMED_COEFFS])
MERMIN_COEFFS = np.zeros((2, 2, 2))
MERMIN_COEFFS[0, 0, 1] = MERMIN_COEFFS[0, 1, 0] = MERMIN_COEFFS[1, 0, 0] = 1.0
MERMIN_COEFFS[1, 1, 1] = -1.0

QUANTUM_SVETLICHNY_MAX = 4 * np.sqrt(2)
CLASSICAL_SVETLICHNY_MAX = 4.0

PARAMETER_COUNT = 15


class Objective(StrEnum):
    Svetlichny = "svetlichny"
    Mermin = "mermin"
    Chsh = "chsh"


FrameAngles = tuple[float, float, float]
VectorPair = tuple[BlochVector, BlochVector]


def _rz(angle: float) -> ComplexMatrix:
    return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])


def _ry(angle: float) -> ComplexMatrix:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def frame_unitary(angles: Sequence[float]) -> ComplexMatrix:
    """ZYZ Euler rotation Rz(a) Ry(b) Rz(c)."""
    a, b, c = angles
    return _rz(a) @ _ry(b) @ _rz(c)


def _angles(vector: BlochVector) -> tuple[float, float]:
    theta = float(np.arccos(np.clip(vector.z, -1.0, 1.0)))
    phi = float(np.arctan2(vector.y, vector.x))
    return theta, phi


class SettingsTriple(BaseModel):
    model_config = ConfigDict(frozen=True)

    alice_inputs: VectorPair
    bob_dirs: VectorPair
    charlie_dirs: VectorPair
    alice_frame: FrameAngles = (0.0, 0.0, 0.0)

    def frame(self) -> ComplexMatrix:
        return frame_unitary(self.alice_frame)

    def to_parameters(self) -> npt.NDArray[np.float64]:
        angles = [
            angle
            for vector in (*self.alice_inputs, *self.bob_dirs, *self.charlie_dirs)
            for angle in _angles(vector)
        ]
        return np.array(angles + list(self.alice_frame), dtype=np.float64)

    @classmethod
    def from_parameters(cls, parameters: npt.ArrayLike) -> "SettingsTriple":
        x = np.asarray(parameters, dtype=np.float64).reshape(-1)
        if x.size != PARAMETER_COUNT:
            raise InvalidStateError(f"expected {PARAMETER_COUNT} parameters, got {x.size}")
        vectors = [BlochVector.from_angles(x[2 * i], x[2 * i + 1]) for i in range(6)]
        return cls(
            alice_inputs=(vectors[0], vectors[1]),
            bob_dirs=(vectors[2], vectors[3]),
            charlie_dirs=(vectors[4], vectors[5]),
            alice_frame=(float(x[12]), float(x[13]), float(x[14])),
        )

    def __rich_repr__(self):
        yield "alice_inputs", [tuple(round(c, 6) for c in v.as_array()) for v in self.alice_inputs]
        yield "bob_dirs", [tuple(round(c, 6) for c in v.as_array()) for v in self.bob_dirs]
        yield "charlie_dirs", [tuple(round(c, 6) for c in v.as_array()) for v in self.charlie_dirs]
        yield "alice_frame", self.alice_frame


def _check_distribution(p: np.ndarray, outcome_axes: tuple[int, ...]) -> None:
    if np.min(p) < -NEGATIVE_ATOL:
        raise ValueError(f"negative probability {np.min(p):.3e}")
    totals = p.sum(axis=outcome_axes)
    if np.max(np.abs(totals - 1.0)) > PROBABILITY_ATOL:
        raise ValueError("conditional distributions do not sum to 1")


class CorrelationTable(BaseModel):
    """p(alpha, beta, gamma | j, k, l) stored as p[alpha, beta, gamma, j, k, l]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p: np.ndarray

    @field_validator("p", mode="before")
    @classmethod
    def _coerce(cls, value: npt.ArrayLike) -> np.ndarray:
        table = np.asarray(value, dtype=np.float64)
        if table.shape != (2,) * 6:
            raise ValueError(f"expected shape (2,)*6, got {table.shape}")
        return _readonly(table, np.float64)

    @model_validator(mode="after")
    def _check(self) -> "CorrelationTable":
        _check_distribution(self.p, (0, 1, 2))
        return self

    def correlators(self) -> npt.NDArray[np.float64]:
        """Full correlators E[j, k, l]."""
        return np.einsum("a,b,c,abcjkl->jkl", SIGNS, SIGNS, SIGNS, self.p)

    def alice_marginal(self) -> npt.NDArray[np.float64]:
        """p_A(alpha | j, k, l) as [alpha, j, k, l]."""
        return self.p.sum(axis=(1, 2))

    def weighted_conditioned_correlators(self) -> npt.NDArray[np.float64]:
        """p_A(alpha | j k l) E^{alpha j}_{kl} as [alpha, j, k, l]."""
        return np.einsum("b,c,abcjkl->ajkl", SIGNS, SIGNS, self.p)

    def conditioned_correlators(self) -> npt.NDArray[np.float64]:
        """E^{alpha j}_{kl}; zero where alpha never occurs."""
        marginal = self.alice_marginal()
        weighted = self.weighted_conditioned_correlators()
        out = np.zeros_like(weighted)
        np.divide(weighted, marginal, out=out, where=marginal > NEGATIVE_ATOL)
        return out

    def marginal_ab(self, l: int = 0) -> "BipartiteTable":
        """Alice and Bob's statistics with Charlie's setting l and outcome ignored."""
        return BipartiteTable(p=self.p[:, :, :, :, :, l].sum(axis=2))


class BipartiteTable(BaseModel):
    """p(alpha, beta | j, k) stored as p[alpha, beta, j, k]."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p: np.ndarray

    @field_validator("p", mode="before")
    @classmethod
    def _coerce(cls, value: npt.ArrayLike) -> np.ndarray:
        table = np.asarray(value, dtype=np.float64)
        if table.shape != (2,) * 4:
            raise ValueError(f"expected shape (2,)*4, got {table.shape}")
        return _readonly(table, np.float64)

    @model_validator(mode="after")
    def _check(self) -> "BipartiteTable":
        _check_distribution(self.p, (0, 1))
        return self

    def correlators(self) -> npt.NDArray[np.float64]:
        """E[j, k] = P(alpha = beta) - P(alpha != beta)."""
        return np.einsum("a,b,abjk->jk", SIGNS, SIGNS, self.p)


def pauli_coordinates(operator: ComplexMatrix) -> npt.NDArray[np.float64]:
    return np.array([np.trace(operator @ pauli).real / 2 for pauli in PAULIS])


def pauli_tensor(resource: DensityMatrix) -> npt.NDArray[np.float64]:
    """T[m1, ..., mn] = Tr(rho sigma_m1 x ... x sigma_mn)."""
    n = resource.n_qubits
    tensor = resource.matrix.reshape([2] * (2 * n))
    paulis = np.array(PAULIS)
    operands: list = [tensor, list(range(2 * n))]
    for qubit in range(n):
        # sigma[m, col, row] contracts rho[row, col]
        operands += [paulis, [2 * n + qubit, n + qubit, qubit]]
    return np.einsum(*operands, list(range(2 * n, 3 * n))).real


def spin_effects(direction: npt.ArrayLike) -> npt.NDArray[np.float64]:
    """Pauli coordinates of the +1 and -1 spin projectors along `direction`."""
    d = np.asarray(direction, dtype=np.float64).reshape(3)
    plus = np.concatenate(([0.5], d / 2))
    minus = np.concatenate(([0.5], -d / 2))
    return np.array([plus, minus])


def alice_effects(
    input_vector: npt.ArrayLike, frame: ComplexMatrix
) -> dict[tuple[int, int], ComplexMatrix]:
    """Effective operators on Alice's share for each Bell outcome s0 s1."""
    rho_a = bloch_operator(input_vector)
    projectors = bell_projectors()
    effects = {}
    for label in BELL_LABELS:
        effect = reduce_operator(projectors[label] @ kron(rho_a, PAULI_I), [2, 2], [1])
        effects[label] = frame.conj().T @ effect @ frame
    return effects


@functools.cache
def _bell_effect_basis() -> npt.NDArray[np.float64]:
    # [label, mu, nu]: coordinates of Tr_a(Pi_s (sigma_mu / 2 x I))
    projectors = bell_projectors()
    basis = np.zeros((4, 4, 4))
    for s, label in enumerate(BELL_LABELS):
        for mu, pauli in enumerate(PAULIS):
            effect = reduce_operator(projectors[label] @ kron(pauli / 2, PAULI_I), [2, 2], [1])
            basis[s, mu] = pauli_coordinates(effect)
    return basis


def _adjoint_action(frame: ComplexMatrix) -> npt.NDArray[np.float64]:
    """Matrix of X -> V^dagger X V in Pauli coordinates."""
    action = np.zeros((4, 4))
    for nu, pauli in enumerate(PAULIS):
        action[:, nu] = pauli_coordinates(frame.conj().T @ pauli @ frame)
    return action


def alice_binary_effects(
    inputs: npt.ArrayLike, frame: ComplexMatrix
) -> npt.NDArray[np.float64]:
    """Pauli coordinates A[j, alpha, mu] with alpha = 2 s_j - 1."""
    vectors = np.asarray(inputs, dtype=np.float64).reshape(2, 3)
    basis = _bell_effect_basis()
    action = _adjoint_action(frame)
    coords = np.zeros((2, 2, 4))
    for j in range(2):
        t = np.concatenate(([1.0], vectors[j]))
        for s, label in enumerate(BELL_LABELS):
            alpha_index = 0 if label[j] == 1 else 1
            coords[j, alpha_index] += action @ (t @ basis[s])
    return coords


def _spherical(parameters: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    theta, phi = parameters[0:12:2], parameters[1:12:2]
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=1
    )


def _parameter_arrays(
    parameters: npt.NDArray[np.float64],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    vectors = _spherical(parameters)
    alice = alice_binary_effects(vectors[0:2], frame_unitary(parameters[12:15]))
    bob = np.array([spin_effects(v) for v in vectors[2:4]])
    charlie = np.array([spin_effects(v) for v in vectors[4:6]])
    return alice, bob, charlie


def _settings_arrays(settings: SettingsTriple) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    alice = alice_binary_effects([v.as_array() for v in settings.alice_inputs], settings.frame())
    bob = np.array([spin_effects(v.as_array()) for v in settings.bob_dirs])
    charlie = np.array([spin_effects(v.as_array()) for v in settings.charlie_dirs])
    return alice, bob, charlie


def _table_from_coordinates(
    tensor: np.ndarray, alice: np.ndarray, bob: np.ndarray, charlie: np.ndarray
) -> np.ndarray:
    return np.einsum("mnr,jam,kbn,lcr->abcjkl", tensor, alice, bob, charlie)


def correlations_from_state(resource: DensityMatrix, settings: SettingsTriple) -> CorrelationTable:
    if resource.n_qubits != 3:
        raise InvalidStateError(f"expected a three-qubit resource, got {resource.n_qubits}")
    alice, bob, charlie = _settings_arrays(settings)
    return CorrelationTable(p=_table_from_coordinates(pauli_tensor(resource), alice, bob, charlie))


def spin_correlations(
    resource: DensityMatrix,
    alice_dirs: VectorPair,
    bob_dirs: VectorPair,
    charlie_dirs: VectorPair,
) -> CorrelationTable:
    """Three parties each measuring spin along one of two directions."""
    if resource.n_qubits != 3:
        raise InvalidStateError(f"expected a three-qubit resource, got {resource.n_qubits}")
    alice, bob, charlie = (
        np.array([spin_effects(v.as_array()) for v in dirs])
        for dirs in (alice_dirs, bob_dirs, charlie_dirs)
    )
    return CorrelationTable(p=_table_from_coordinates(pauli_tensor(resource), alice, bob, charlie))


def bipartite_correlations_from_state(
    resource: DensityMatrix,
    alice_inputs: VectorPair,
    bob_dirs: VectorPair,
    alice_frame: FrameAngles = (0.0, 0.0, 0.0),
) -> BipartiteTable:
    """Black-box teleportation test: Alice's Bell-measurement box against Bob's spin."""
    if resource.n_qubits != 2:
        raise InvalidStateError(f"expected a two-qubit resource, got {resource.n_qubits}")
    alice = alice_binary_effects([v.as_array() for v in alice_inputs], frame_unitary(alice_frame))
    bob = np.array([spin_effects(v.as_array()) for v in bob_dirs])
    return BipartiteTable(p=np.einsum("mn,jam,kbn->abjk", pauli_tensor(resource), alice, bob))


def bipartite_spin_correlations(
    resource: DensityMatrix, alice_dirs: VectorPair, bob_dirs: VectorPair
) -> BipartiteTable:
    if resource.n_qubits != 2:
        raise InvalidStateError(f"expected a two-qubit resource, got {resource.n_qubits}")
    alice = np.array([spin_effects(v.as_array()) for v in alice_dirs])
    bob = np.array([spin_effects(v.as_array()) for v in bob_dirs])
    return BipartiteTable(p=np.einsum("mn,jam,kbn->abjk", pauli_tensor(resource), alice, bob))


def chsh_value(table: BipartiteTable) -> float:
    """E00 + E01 + E10 - E11."""
    return float(np.sum(CHSH_COEFFS * table.correlators()))


def conditional_chsh(table: CorrelationTable, alpha: int, j: int, primed: bool = False) -> float:
    """CHSH of Bob and Charlie conditioned on Alice's input j and output alpha."""
    if alpha not in (1, -1) or j not in (0, 1):
        raise InvalidStateError(f"invalid conditioning alpha={alpha}, j={j}")
    conditioned = table.conditioned_correlators()[0 if alpha == 1 else 1, j]
    coeffs = CHSH_PRIMED_COEFFS if primed else CHSH_COEFFS
    return float(np.sum(coeffs * conditioned))


def svetlichny_value(table: CorrelationTable) -> float:
    """S = sum_alpha alpha p_A(alpha|0) CHSH_{alpha 0} + sum_alpha alpha p_A(alpha|1) CHSH'_{alpha 1}."""
    weighted = table.weighted_conditioned_correlators()
    return float(np.einsum("a,ajkl,jkl->", SIGNS, weighted, SVETLICHNY_COEFFS))


def mermin_value(table: CorrelationTable) -> float:
    return float(np.sum(MERMIN_COEFFS * table.correlators()))


def evaluate_objective(table: CorrelationTable, objective: Objective) -> float:
    match Objective(objective):
        case Objective.Svetlichny:
            return svetlichny_value(table)
        case Objective.Mermin:
            return mermin_value(table)
        case Objective.Chsh:
            return chsh_value(table.marginal_ab(0))


def _random_start(rng: np.random.Generator) -> npt.NDArray[np.float64]:
    angles = np.empty(PARAMETER_COUNT)
    angles[0:12:2] = np.arccos(rng.uniform(-1.0, 1.0, size=6))
    angles[1:12:2] = rng.uniform(0.0, 2 * np.pi, size=6)
    angles[12:] = rng.uniform(0.0, 2 * np.pi, size=3)
    return angles


def optimize_settings(
    resource: DensityMatrix,
    objective: Objective,
    restarts: int = 20,
    seed: int | Sequence[int] = 0,
) -> tuple[SettingsTriple, float]:
    """Maximize `objective` over the settings with Powell searches from random starts.

    Ties between restarts go to the lowest restart index.
    """
    if restarts < 1:
        raise InvalidStateError(f"restarts must be at least 1, got {restarts}")
    if resource.n_qubits != 3:
        raise InvalidStateError(f"expected a three-qubit resource, got {resource.n_qubits}")
    objective = Objective(objective)
    tensor = pauli_tensor(resource)
    rng = np.random.default_rng(seed)

    def negative_value(x: npt.NDArray[np.float64]) -> float:
        table = CorrelationTable.model_construct(
            p=_table_from_coordinates(tensor, *_parameter_arrays(x))
        )
        return -evaluate_objective(table, objective)

    best_x: npt.NDArray[np.float64] | None = None
    best_value = -np.inf
    for restart in range(restarts):
        start = _random_start(rng)
        result = minimize(
            negative_value,
            start,
            method="Powell",
            options={"xtol": 1e-9, "ftol": 1e-13, "maxiter": 200 * PARAMETER_COUNT},
        )
        value = -float(result.fun)
        logging.debug(f"nonlocality: restart {restart} {objective} = {value:.10f}")
        if value > best_value:
            best_x, best_value = np.asarray(result.x), value

    assert best_x is not None
    settings = SettingsTriple.from_parameters(best_x)
    value = evaluate_objective(correlations_from_state(resource, settings), objective)
    return settings, value


def closed_form_max_s(channel: Channel, p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidStateError(f"noise parameter p must be in [0, 1], got {p}")
    match Channel(channel):
        case Channel.Total:
            surviving = 1 - p
        case Channel.Qubit:
            surviving = (1 - p) ** 3
    return surviving * QUANTUM_SVETLICHNY_MAX + CLASSICAL_SVETLICHNY_MAX * (1 - surviving)


def _index(value: int) -> int:
    return 0 if value > 0 else 1


def deterministic_table(
    alpha: npt.ArrayLike, beta: npt.ArrayLike, gamma: npt.ArrayLike
) -> CorrelationTable:
    """Table of a deterministic strategy alpha[j, k], beta[k], gamma[l, k] in {+1, -1}."""
    a, b, c = (np.asarray(v) for v in (alpha, beta, gamma))
    p = np.zeros((2,) * 6)
    for j, k, l in itertools.product((0, 1), repeat=3):
        p[_index(a[j, k]), _index(b[k]), _index(c[l, k]), j, k, l] = 1.0
    return CorrelationTable(p=p)


def deterministic_strategies(broadcast: bool = True) -> Iterator[CorrelationTable]:
    """Every deterministic strategy, with Bob's input published to Alice and Charlie
    when `broadcast` is set."""
    signs = (1, -1)
    if broadcast:
        alphas = [np.array(v).reshape(2, 2) for v in itertools.product(signs, repeat=4)]
        gammas = [np.array(v).reshape(2, 2) for v in itertools.product(signs, repeat=4)]
    else:
        alphas = [np.repeat(np.array(v)[:, None], 2, axis=1) for v in itertools.product(signs, repeat=2)]
        gammas = [np.repeat(np.array(v)[:, None], 2, axis=1) for v in itertools.product(signs, repeat=2)]
    betas = [np.array(v) for v in itertools.product(signs, repeat=2)]
    for alpha, beta, gamma in itertools.product(alphas, betas, gammas):
        yield deterministic_table(alpha, beta, gamma)


def classical_broadcast_bound(objective: Objective, broadcast: bool = True) -> float:
    """Largest |objective| over deterministic (broadcasting) strategies."""
    objective = Objective(objective)
    best = 0.0
    count = 0
    for table in deterministic_strategies(broadcast):
        best = max(best, abs(evaluate_objective(table, objective)))
        count += 1
    logging.debug(f"nonlocality: {objective} bound {best} over {count} strategies")
    return best
