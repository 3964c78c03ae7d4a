"""Minimum-error discrimination of the adversary's conditional states.

The primal problem is: maximize sum_i Tr(rho_i M_i) over POVMs {M_i}. Its
dual is: minimize Tr(Y) subject to Y >= rho_i for every i. Every solve ends
with an explicit dual certificate Y so that the reported gap bounds the
suboptimality of the returned measurement.
"""
import logging
from enum import StrEnum
from typing import Sequence

import cvxpy as cp
import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .errors import InvalidStateError, SolverConvergenceError
from .linalg import (
    PSD_ATOL,
    ComplexMatrix,
    DensityMatrix,
    _readonly,
    as_square,
    eig_hermitian,
    hermitian_part,
    hermiticity_residual,
    kron,
    min_eigenvalue,
    psd_power,
    reduce_operator,
)
from .states import BELL_LABELS, bell_projectors

COMPLETENESS_ATOL = 1e-9
DUAL_FEASIBILITY_ATOL = 1e-8
ENSEMBLE_ATOL = 1e-8
DEGENERATE_TRACE = 1e-14
SUPPORT_CUTOFF = 1e-12

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITERS = 5000

Label = str


class Backend(StrEnum):
    InteriorPoint = "interior-point"
    FixedPoint = "fixed-point"


class Povm(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    elements: tuple[np.ndarray, ...]

    @field_validator("elements", mode="before")
    @classmethod
    def _coerce_elements(cls, value: Sequence[npt.ArrayLike]) -> tuple[np.ndarray, ...]:
        return tuple(_readonly(as_square(element)) for element in value)

    @model_validator(mode="after")
    def _check_povm(self) -> "Povm":
        if not self.elements:
            raise ValueError("a POVM needs at least one element")
        dim = self.elements[0].shape[0]
        for index, element in enumerate(self.elements):
            if element.shape != (dim, dim):
                raise ValueError("POVM elements must share one dimension")
            if hermiticity_residual(element) > 1e-10:
                raise ValueError(f"POVM element {index} is not Hermitian")
            if min_eigenvalue(element) < -PSD_ATOL:
                raise ValueError(f"POVM element {index} is not PSD")
        residual = completeness_residual(self.elements)
        if residual > COMPLETENESS_ATOL:
            raise ValueError(f"POVM elements do not sum to identity (residual {residual:.3e})")
        return self

    @property
    def dim(self) -> int:
        return int(self.elements[0].shape[0])

    def __len__(self) -> int:
        return len(self.elements)


class DiscriminationInstance(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rho_tilde: tuple[np.ndarray, ...]
    labels: tuple[Label, ...]

    @field_validator("rho_tilde", mode="before")
    @classmethod
    def _coerce_operators(cls, value: Sequence[npt.ArrayLike]) -> tuple[np.ndarray, ...]:
        return tuple(_readonly(as_square(op)) for op in value)

    @model_validator(mode="after")
    def _check_ensemble(self) -> "DiscriminationInstance":
        if not self.rho_tilde:
            raise ValueError("an instance needs at least one operator")
        if len(self.labels) != len(self.rho_tilde):
            raise ValueError("one label is needed per operator")
        dim = self.rho_tilde[0].shape[0]
        for label, op in zip(self.labels, self.rho_tilde, strict=True):
            if op.shape != (dim, dim):
                raise ValueError("operators must share one dimension")
            if hermiticity_residual(op) > 1e-10:
                raise ValueError(f"operator {label} is not Hermitian")
            if min_eigenvalue(op) < -PSD_ATOL:
                raise ValueError(f"operator {label} is not PSD")
        if self.total_trace > 1.0 + ENSEMBLE_ATOL:
            raise ValueError(f"ensemble trace {self.total_trace:.12g} exceeds 1")
        return self

    @property
    def dim(self) -> int:
        return int(self.rho_tilde[0].shape[0])

    @property
    def total_trace(self) -> float:
        return float(sum(np.trace(op).real for op in self.rho_tilde))

    def traces(self) -> list[float]:
        return [float(np.trace(op).real) for op in self.rho_tilde]


class SolveResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    povm: Povm
    primal_value: float
    dual_value: float
    dual_certificate: np.ndarray
    gap: float
    iterations: int
    backend: Backend = Backend.InteriorPoint

    @field_validator("dual_certificate", mode="before")
    @classmethod
    def _coerce_certificate(cls, value: npt.ArrayLike) -> np.ndarray:
        return _readonly(as_square(value))

    @model_validator(mode="after")
    def _check_duality(self) -> "SolveResult":
        if abs(self.gap - (self.dual_value - self.primal_value)) > 1e-12:
            raise ValueError("gap must equal dual_value - primal_value")
        if self.gap < -1e-9:
            raise ValueError(f"weak duality violated (gap {self.gap:.3e})")
        return self

    def __rich_repr__(self):
        yield "primal_value", self.primal_value
        yield "dual_value", self.dual_value
        yield "gap", self.gap
        yield "iterations", self.iterations
        yield "backend", str(self.backend)


class VerificationReport(BaseModel):
    primal_value: float
    dual_value: float | None = None
    gap: float | None = None
    completeness_residual: float
    hermiticity_residual: float
    min_element_eigenvalue: float
    dual_min_eigenvalues: list[float] = []

    @property
    def povm_feasible(self) -> bool:
        return (
            self.completeness_residual <= COMPLETENESS_ATOL
            and self.hermiticity_residual <= 1e-10
            and self.min_element_eigenvalue >= -PSD_ATOL
        )

    @property
    def dual_feasible(self) -> bool:
        return bool(self.dual_min_eigenvalues) and min(
            self.dual_min_eigenvalues
        ) >= -DUAL_FEASIBILITY_ATOL

    def certified(self, tol: float) -> bool:
        return (
            self.povm_feasible
            and self.dual_feasible
            and self.gap is not None
            and self.gap <= tol
        )


def completeness_residual(elements: Sequence[npt.ArrayLike]) -> float:
    total = sum(as_square(element) for element in elements)
    dim = total.shape[0]
    return float(np.max(np.abs(total - np.eye(dim))))


def primal_value(instance: DiscriminationInstance, elements: Sequence[npt.ArrayLike]) -> float:
    return float(
        sum(
            np.trace(rho @ as_square(element)).real
            for rho, element in zip(instance.rho_tilde, elements, strict=True)
        )
    )


def helstrom_value(rho_1: npt.ArrayLike, rho_2: npt.ArrayLike) -> float:
    """Optimal success for two weighted states: (Tr r1 + Tr r2 + Tr|r1 - r2|)/2."""
    a, b = hermitian_part(rho_1), hermitian_part(rho_2)
    trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))
    return (float(np.trace(a).real + np.trace(b).real) + trace_norm) / 2


def build_instance(rho_abd: DensityMatrix, derek_dim: int) -> DiscriminationInstance:
    """Condition Derek's factor on each Bell state of the A, B pair.

    rho_i = Tr_AB((|phi_i><phi_i| x I_D) rho_ABD), one operator on Derek's
    space per Bell label.
    """
    if derek_dim < 1 or rho_abd.dim != 4 * derek_dim:
        raise InvalidStateError(
            f"state dimension {rho_abd.dim} does not factor as 4 x {derek_dim}"
        )
    projectors = bell_projectors()
    identity = np.eye(derek_dim)
    rho_tilde = []
    for label in BELL_LABELS:
        conditioned = kron(projectors[label], identity) @ rho_abd.matrix
        rho_tilde.append(hermitian_part(reduce_operator(conditioned, [4, derek_dim], [1])))
    instance = DiscriminationInstance(
        rho_tilde=rho_tilde, labels=tuple(f"{c0}{c1}" for c0, c1 in BELL_LABELS)
    )
    if abs(instance.total_trace - 1.0) > ENSEMBLE_ATOL:
        raise InvalidStateError(f"ensemble trace {instance.total_trace:.12g}, expected 1")
    logging.debug(
        "povm: instance traces " + ", ".join(f"{t:.6g}" for t in instance.traces())
    )
    return instance


def dual_certificate(
    rho_tilde: Sequence[ComplexMatrix],
    elements: Sequence[ComplexMatrix],
    candidates: Sequence[ComplexMatrix] = (),
) -> tuple[ComplexMatrix, float]:
    """Smallest-trace feasible Y among the repaired candidates.

    The primary candidate is sum_i rho_i M_i, which is optimal at the optimum.
    Each candidate is shifted by the identity until Y - rho_i >= 0 for all i.
    """
    dim = rho_tilde[0].shape[0]
    identity = np.eye(dim)
    pool = [hermitian_part(sum(rho @ m for rho, m in zip(rho_tilde, elements, strict=True)))]
    pool += [hermitian_part(c) for c in candidates]
    pool.append(max(np.linalg.eigvalsh(rho)[-1] for rho in rho_tilde) * identity)

    best: ComplexMatrix | None = None
    best_trace = np.inf
    for y in pool:
        shift = max(0.0, max(-min_eigenvalue(y - rho) for rho in rho_tilde))
        repaired = y + shift * identity
        trace = float(np.trace(repaired).real)
        if trace < best_trace:
            best, best_trace = repaired, trace
    assert best is not None
    return best, best_trace


def repair_povm(elements: Sequence[ComplexMatrix]) -> list[ComplexMatrix]:
    """Clip negative eigenvalues, then renormalize so the elements sum to I."""
    clipped = []
    for element in elements:
        values, vectors = np.linalg.eigh(hermitian_part(element))
        clipped.append((vectors * np.maximum(values, 0.0)) @ vectors.conj().T)
    norm = psd_power(sum(clipped), -0.5)
    return [hermitian_part(norm @ m @ norm) for m in clipped]


def _fixed_point(
    rho_tilde: Sequence[ComplexMatrix],
    start: Sequence[ComplexMatrix],
    tol: float,
    max_iters: int,
) -> tuple[list[ComplexMatrix], int, float]:
    # M_i <- L^-1/2 rho_i M_i rho_i L^-1/2 with L = sum_j rho_j M_j rho_j
    n = len(rho_tilde)
    dim = rho_tilde[0].shape[0]
    elements = [hermitian_part(m) for m in start]
    gap = np.inf
    iteration = 0
    for iteration in range(1, max_iters + 1):
        products = [rho @ m @ rho for rho, m in zip(rho_tilde, elements, strict=True)]
        weight = hermitian_part(sum(products))
        inverse_root = psd_power(weight, -0.5)
        null_space = np.eye(dim) - psd_power(weight, 0.0)
        elements = [
            hermitian_part(inverse_root @ product @ inverse_root) + null_space / n
            for product in products
        ]
        _, dual = dual_certificate(rho_tilde, elements)
        gap = dual - sum(
            np.trace(rho @ m).real for rho, m in zip(rho_tilde, elements, strict=True)
        )
        if gap <= tol:
            break
    return elements, iteration, float(gap)


def _interior_point(
    rho_tilde: Sequence[ComplexMatrix], max_iters: int, solver: str
) -> tuple[list[ComplexMatrix], int, list[ComplexMatrix]]:
    dim = rho_tilde[0].shape[0]
    constants = [cp.Constant(np.array(rho, dtype=np.complex128)) for rho in rho_tilde]
    variables = [cp.Variable((dim, dim), hermitian=True) for _ in rho_tilde]
    completeness = sum(variables[1:], start=variables[0]) == cp.Constant(np.eye(dim))
    constraints = [m >> 0 for m in variables] + [completeness]
    terms = [cp.real(cp.trace(m @ rho)) for rho, m in zip(constants, variables, strict=True)]
    objective = cp.Maximize(sum(terms[1:], start=terms[0]))
    problem = cp.Problem(objective, constraints)
    options: dict[str, float | int] = {}
    if solver == cp.CLARABEL:
        options = {
            "tol_gap_abs": 1e-10,
            "tol_gap_rel": 1e-10,
            "tol_feas": 1e-10,
            "max_iter": max_iters,
        }
    problem.solve(solver=solver, **options)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise cp.error.SolverError(f"solver finished with status {problem.status}")

    elements = [np.asarray(m.value, dtype=np.complex128) for m in variables]
    candidates = []
    if completeness.dual_value is not None:
        dual = np.asarray(completeness.dual_value, dtype=np.complex128)
        candidates = [dual, -dual, dual.conj().T]
    iterations = problem.solver_stats.num_iters if problem.solver_stats else None
    return elements, int(iterations or 0), candidates


def solve_discrimination(
    instance: DiscriminationInstance,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    backend: Backend = Backend.InteriorPoint,
    solver: str = cp.CLARABEL,
) -> SolveResult:
    if tol <= 0:
        raise InvalidStateError(f"tol must be positive, got {tol}")
    if max_iters < 1:
        raise InvalidStateError(f"max_iters must be positive, got {max_iters}")

    n = len(instance.rho_tilde)
    dim = instance.dim
    identity = np.eye(dim)

    # Restrict Derek's space to the support of the ensemble average.
    decomposition = eig_hermitian(hermitian_part(sum(instance.rho_tilde)))
    values = decomposition.eigenvalues
    support = values > SUPPORT_CUTOFF * max(float(values[-1]), 0.0)
    if not np.any(support):
        support[-1] = True
    basis = decomposition.eigenvectors[:, support]
    compressed = [hermitian_part(basis.conj().T @ rho @ basis) for rho in instance.rho_tilde]
    rank = basis.shape[1]

    active = [i for i, rho in enumerate(compressed) if np.trace(rho).real >= DEGENERATE_TRACE]
    if not active:
        active = [0]
    active_rho = [compressed[i] for i in active]
    logging.debug(f"povm: solving rank {rank} of {dim} with {len(active)}/{n} active operators")

    candidates: list[ComplexMatrix] = []
    iterations = 0
    used = backend
    start = [np.eye(rank) / len(active) for _ in active]
    if len(active) == 1:
        elements = [np.eye(rank)]
    elif backend == Backend.InteriorPoint:
        try:
            elements, iterations, candidates = _interior_point(active_rho, max_iters, solver)
            elements = repair_povm(elements)
        except (cp.error.SolverError, ValueError) as exc:
            logging.warning(f"povm: interior-point solve failed ({exc}), using fixed-point")
            used = Backend.FixedPoint
            elements, iterations, _ = _fixed_point(active_rho, start, tol, max_iters)
    else:
        elements, iterations, _ = _fixed_point(active_rho, start, tol, max_iters)

    certificate, dual = dual_certificate(active_rho, elements, candidates)
    gap = dual - sum(np.trace(r @ m).real for r, m in zip(active_rho, elements, strict=True))
    if gap > tol and len(active) > 1:
        logging.debug(f"povm: gap {gap:.3e} above {tol:.1e}, polishing")
        polished, extra, _ = _fixed_point(active_rho, elements, tol, max_iters)
        polished = repair_povm(polished)
        polished_certificate, polished_dual = dual_certificate(active_rho, polished)
        polished_gap = polished_dual - sum(
            np.trace(r @ m).real for r, m in zip(active_rho, polished, strict=True)
        )
        iterations += extra
        if polished_gap < gap:
            elements, certificate, dual, gap = (
                polished,
                polished_certificate,
                polished_dual,
                polished_gap,
            )

    # Embed back into Derek's full space.
    outside = identity - basis @ basis.conj().T
    full_elements = [np.zeros((dim, dim), dtype=np.complex128) for _ in range(n)]
    for index, element in zip(active, elements, strict=True):
        full_elements[index] = basis @ element @ basis.conj().T + outside / len(active)
    full_elements = [hermitian_part(m) for m in full_elements]
    full_certificate = hermitian_part(basis @ certificate @ basis.conj().T)
    # Operators dropped as degenerate still bound the certificate from below.
    shift = max(0.0, max(-min_eigenvalue(full_certificate - rho) for rho in instance.rho_tilde))
    full_certificate = full_certificate + shift * identity

    value = primal_value(instance, full_elements)
    dual_value = float(np.trace(full_certificate).real)
    result = SolveResult(
        povm=Povm(elements=full_elements),
        primal_value=value,
        dual_value=dual_value,
        dual_certificate=full_certificate,
        gap=dual_value - value,
        iterations=iterations,
        backend=used,
    )
    logging.debug(
        f"povm: primal {result.primal_value:.10f} dual {result.dual_value:.10f} gap {result.gap:.3e}"
    )
    if result.gap > tol:
        raise SolverConvergenceError(
            f"duality gap {result.gap:.3e} exceeds tolerance {tol:.1e}", best=result
        )
    return result


def verify_povm(
    instance: DiscriminationInstance,
    elements: Sequence[npt.ArrayLike],
    certificate: npt.ArrayLike | None = None,
) -> VerificationReport:
    matrices = [as_square(element) for element in elements]
    if len(matrices) != len(instance.rho_tilde):
        raise InvalidStateError("one POVM element is needed per operator")
    value = primal_value(instance, matrices)
    report = {
        "primal_value": value,
        "completeness_residual": completeness_residual(matrices),
        "hermiticity_residual": max(hermiticity_residual(m) for m in matrices),
        "min_element_eigenvalue": min(min_eigenvalue(m) for m in matrices),
    }
    if certificate is not None:
        y = as_square(certificate)
        dual_value = float(np.trace(y).real)
        report["dual_value"] = dual_value
        report["gap"] = dual_value - value
        report["dual_min_eigenvalues"] = [min_eigenvalue(y - rho) for rho in instance.rho_tilde]
    return VerificationReport(**report)


def verify_result(instance: DiscriminationInstance, result: SolveResult) -> VerificationReport:
    return verify_povm(instance, result.povm.elements, result.dual_certificate)
