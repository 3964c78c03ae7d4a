"""Controlled teleportation on arbitrary resource states.

Every fidelity here is an average over pure inputs of a quadratic polynomial
in the input's Bloch vector. The polynomial is built once per protocol as a
`FidelityForm` and averaged exactly with the six axial points.
"""
import logging
from typing import Callable, Mapping

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import InvalidStateError
from .linalg import (
    ComplexMatrix,
    DensityMatrix,
    _readonly,
    hermitian_part,
    kron,
    partial_trace,
    reduce_operator,
)
from .povm import (
    DEFAULT_MAX_ITERS,
    DEFAULT_TOL,
    Backend,
    Povm,
    build_instance,
    solve_discrimination,
)
from .states import (
    AXIAL_POINTS,
    BELL_LABELS,
    PAULI_I,
    PAULI_X,
    PAULIS,
    BellLabel,
    BlochVector,
    Channel,
    CorrectionTable,
    bell_projectors,
    bloch_state,
    correction_table,
    noisy_ghz,
    purify,
)

DEGENERATE_PROBABILITY = 1e-14
FIDELITY_ATOL = 1e-9

CorrectionRow = Mapping[BellLabel, ComplexMatrix]
GAMMAS = (+1, -1)


class TeleportOutcome(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    s0: int
    s1: int
    gamma: int | None = None
    delta: int | None = None
    probability: float
    bob_state: DensityMatrix
    fidelity: float

    @model_validator(mode="after")
    def _check_probability(self) -> "TeleportOutcome":
        if not -1e-12 <= self.probability <= 1 + 1e-12:
            raise ValueError(f"outcome probability {self.probability} outside [0, 1]")
        return self


class FidelityReport(BaseModel):
    f_c_ne: float
    f_nc_e: float
    f_nc_guess: float
    ecp: float
    channel: Channel | None = None
    p: float | None = None
    sdp_gap: float | None = None
    primal_value: float | None = None

    @model_validator(mode="after")
    def _check_report(self) -> "FidelityReport":
        for name in ("f_c_ne", "f_nc_e", "f_nc_guess"):
            value = getattr(self, name)
            if not -FIDELITY_ATOL <= value <= 1 + FIDELITY_ATOL:
                raise ValueError(f"{name} = {value} outside [0, 1]")
        if abs(self.ecp - (self.f_c_ne - self.f_nc_e)) > 1e-12:
            raise ValueError("ecp must equal f_c_ne - f_nc_e")
        return self


class FidelityForm(BaseModel):
    """f(a) = t^T Q t with t = (1, a_x, a_y, a_z)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: npt.ArrayLike) -> np.ndarray:
        matrix = np.asarray(value, dtype=np.float64)
        if matrix.shape != (4, 4):
            raise ValueError(f"fidelity form must be 4x4, got {matrix.shape}")
        return _readonly(matrix, np.float64)

    @classmethod
    def zero(cls) -> "FidelityForm":
        return cls(matrix=np.zeros((4, 4)))

    def __add__(self, other: "FidelityForm") -> "FidelityForm":
        return FidelityForm(matrix=self.matrix + other.matrix)

    def scaled(self, weight: float) -> "FidelityForm":
        return FidelityForm(matrix=weight * self.matrix)

    def evaluate(self, a: BlochVector) -> float:
        t = np.concatenate(([1.0], a.as_array()))
        return float(t @ self.matrix @ t)

    def evaluate_many(self, points: npt.ArrayLike) -> npt.NDArray[np.float64]:
        vectors = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        t = np.hstack([np.ones((vectors.shape[0], 1)), vectors])
        return np.einsum("ni,ij,nj->n", t, self.matrix, t)

    def sphere_average(self) -> float:
        return float(self.matrix[0, 0] + np.trace(self.matrix[1:, 1:]) / 3)


def bloch_average(f: Callable[[BlochVector], float]) -> float:
    """Exact sphere average of a quadratic polynomial in the Bloch components."""
    return float(np.mean([f(a) for a in AXIAL_POINTS]))


def haar_estimate(
    f: Callable[[npt.NDArray[np.float64]], npt.NDArray[np.float64]],
    samples: int,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Monte Carlo sphere average and its standard error."""
    points = rng.normal(size=(samples, 3))
    points /= np.linalg.norm(points, axis=1, keepdims=True)
    values = np.asarray(f(points), dtype=np.float64)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples))


def _bob_blocks(ab_operator: ComplexMatrix) -> dict[BellLabel, list[ComplexMatrix]]:
    # Bob's unnormalized state per Bell outcome for each input sigma_mu / 2
    projectors = bell_projectors()
    blocks: dict[BellLabel, list[ComplexMatrix]] = {}
    for label in BELL_LABELS:
        effect = kron(projectors[label], PAULI_I)
        blocks[label] = [
            reduce_operator(effect @ kron(pauli / 2, ab_operator), [2, 2, 2], [2])
            for pauli in PAULIS
        ]
    return blocks


def fidelity_form(ab_operator: npt.ArrayLike, corrections: CorrectionRow) -> FidelityForm:
    """Fidelity polynomial of teleporting through an (unnormalized) A, B operator.

    `corrections` maps Alice's Bell outcome to the rotation R that Bob undoes
    with R^dagger.
    """
    operator = hermitian_part(ab_operator)
    if operator.shape != (4, 4):
        raise InvalidStateError(f"expected a two-qubit operator, got shape {operator.shape}")
    q = np.zeros((4, 4))
    for label, blocks in _bob_blocks(operator).items():
        rotation = corrections[label]
        for mu, block in enumerate(blocks):
            corrected = rotation.conj().T @ block @ rotation
            for nu, pauli in enumerate(PAULIS):
                q[mu, nu] += np.trace(corrected @ pauli).real / 2
    return FidelityForm(matrix=q)


def charlie_effect(gamma: int) -> ComplexMatrix:
    return (PAULI_I + gamma * PAULI_X) / 2


def charlie_branches(resource: DensityMatrix) -> dict[int, ComplexMatrix]:
    """A, B operators left after Charlie measures sigma_x and reports gamma."""
    if resource.n_qubits != 3:
        raise InvalidStateError(f"expected a three-qubit resource, got {resource.n_qubits}")
    return {
        gamma: reduce_operator(
            kron(np.eye(4), charlie_effect(gamma)) @ resource.matrix, [2, 2, 2], [0, 1]
        )
        for gamma in GAMMAS
    }


def control_form(resource: DensityMatrix, corrections: CorrectionTable) -> FidelityForm:
    form = FidelityForm.zero()
    for gamma, branch in charlie_branches(resource).items():
        form = form + fidelity_form(branch, corrections.row(gamma))
    return form


def guess_form(resource: DensityMatrix, corrections: CorrectionTable) -> FidelityForm:
    # gamma hidden, Bob picks gamma' uniformly
    form = FidelityForm.zero()
    for branch in charlie_branches(resource).values():
        for guess in GAMMAS:
            form = form + fidelity_form(branch, corrections.row(guess)).scaled(0.5)
    return form


def _clip(value: float) -> float:
    return float(min(1.0, max(0.0, value)))


def fidelity_with_control(resource: DensityMatrix, corrections: CorrectionTable) -> float:
    return _clip(bloch_average(control_form(resource, corrections).evaluate))


def fidelity_no_control_guess(resource: DensityMatrix, corrections: CorrectionTable) -> float:
    return _clip(bloch_average(guess_form(resource, corrections).evaluate))


def control_power(resource: DensityMatrix, corrections: CorrectionTable | None = None) -> float:
    table = corrections if corrections is not None else correction_table()
    return fidelity_with_control(resource, table) - fidelity_no_control_guess(resource, table)


def gamma_from_branch(branch: BellLabel) -> int:
    """Charlie's outcome announced by Derek's guess of the A, B Bell branch.

    Tr_C of the GHZ state mixes |phi^00> (gamma = +1) and |phi^01>
    (gamma = -1), so only c1 carries gamma.
    """
    return +1 if branch[1] == 0 else -1


def bell_branch_corrections(table: CorrectionTable) -> dict[int, dict[BellLabel, ComplexMatrix]]:
    """Bob's corrections per Derek outcome, outcome delta naming Bell branch delta.

    Bob only ever applies a row of the correction table, the one for the
    gamma that Derek's outcome announces.
    """
    return {
        delta: dict(table.row(gamma_from_branch(branch)))
        for delta, branch in enumerate(BELL_LABELS)
    }


def derek_branches(rho_abd: DensityMatrix, povm: Povm) -> list[ComplexMatrix]:
    """A, B operators conditioned on each of Derek's outcomes."""
    derek_dim = povm.dim
    if rho_abd.dim != 4 * derek_dim:
        raise InvalidStateError(
            f"POVM dimension {derek_dim} does not match Derek's factor of a "
            f"{rho_abd.dim}-dimensional state"
        )
    return [
        reduce_operator(kron(np.eye(4), element) @ rho_abd.matrix, [4, derek_dim], [0])
        for element in povm.elements
    ]


def adversarial_form(
    rho_abd: DensityMatrix,
    povm: Povm,
    corrections_by_delta: Mapping[int, CorrectionRow],
) -> FidelityForm:
    form = FidelityForm.zero()
    for delta, branch in enumerate(derek_branches(rho_abd, povm)):
        if np.trace(branch).real < DEGENERATE_PROBABILITY:
            continue
        form = form + fidelity_form(branch, corrections_by_delta[delta])
    return form


def fidelity_no_control_adversarial(
    rho_abd: DensityMatrix,
    povm: Povm,
    corrections_by_delta: Mapping[int, CorrectionRow],
) -> float:
    return _clip(bloch_average(adversarial_form(rho_abd, povm, corrections_by_delta).evaluate))


def enumerate_outcomes(
    resource: DensityMatrix, a: BlochVector, corrections: CorrectionTable
) -> list[TeleportOutcome]:
    """Every (s0 s1, gamma) branch of one controlled run with input a."""
    rho_a = bloch_state(a).matrix
    projectors = bell_projectors()
    outcomes = []
    for gamma, branch in charlie_branches(resource).items():
        joint = kron(rho_a, branch)
        for label in BELL_LABELS:
            bob = reduce_operator(kron(projectors[label], PAULI_I) @ joint, [2, 2, 2], [2])
            probability = float(np.trace(bob).real)
            if probability < DEGENERATE_PROBABILITY:
                continue
            rotation = corrections.rotation(*label, gamma)
            corrected = hermitian_part(rotation.conj().T @ bob @ rotation) / probability
            outcomes.append(
                TeleportOutcome(
                    s0=label[0],
                    s1=label[1],
                    gamma=gamma,
                    probability=probability,
                    bob_state=DensityMatrix(matrix=corrected, n_qubits=1),
                    fidelity=_clip(float(np.trace(rho_a @ corrected).real)),
                )
            )
    return outcomes


def adversary_view(rho_f: DensityMatrix) -> DensityMatrix:
    """rho_ABD = Tr_C of a purification of the three-qubit resource."""
    purified = purify(rho_f)
    keep = [0, 1] + list(range(rho_f.n_qubits, 2 * rho_f.n_qubits))
    return partial_trace(purified.density(), keep)


def ecp_report(
    channel: Channel,
    p: float,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    backend: Backend = Backend.InteriorPoint,
) -> FidelityReport:
    channel = Channel(channel)
    table = correction_table()
    rho_f = noisy_ghz(channel, p)

    f_c_ne = fidelity_with_control(rho_f, table)
    f_nc_guess = fidelity_no_control_guess(rho_f, table)

    rho_abd = adversary_view(rho_f)
    derek_dim = rho_abd.dim // 4
    instance = build_instance(rho_abd, derek_dim)
    result = solve_discrimination(instance, tol=tol, max_iters=max_iters, backend=backend)
    f_nc_e = fidelity_no_control_adversarial(rho_abd, result.povm, bell_branch_corrections(table))

    logging.debug(
        f"teleport: {channel} p={p:.4g} F_C={f_c_ne:.10f} F_NC^E={f_nc_e:.10f} gap={result.gap:.3e}"
    )
    return FidelityReport(
        f_c_ne=f_c_ne,
        f_nc_e=f_nc_e,
        f_nc_guess=f_nc_guess,
        ecp=f_c_ne - f_nc_e,
        channel=channel,
        p=p,
        sdp_gap=result.gap,
        primal_value=result.primal_value,
    )
