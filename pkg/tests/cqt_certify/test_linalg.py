import numpy as np
import pytest

from cqt_certify.errors import InvalidStateError
from cqt_certify.linalg import (
    DensityMatrix,
    PureState,
    eig_hermitian,
    fidelity_pure,
    kron,
    kron_all,
    partial_trace,
    psd_power,
    reduce_operator,
)
from cqt_certify.states import make_bell, make_ghz, random_density_matrix


def test_kron_dimension():
    a = np.eye(2)
    b = np.eye(4)
    assert kron(a, b).shape == (8, 8)


def test_kron_qubit_zero_is_most_significant():
    ket0 = np.array([[1, 0], [0, 0]])
    ket1 = np.array([[0, 0], [0, 1]])
    product = kron_all([ket1, ket0])
    # |10> is basis index 2
    assert product[2, 2] == 1
    assert np.count_nonzero(product) == 1


def test_partial_trace_ghz_keep_ab():
    reduced = partial_trace(make_ghz().density(), [0, 1])
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[3, 3] = 0.5
    assert np.allclose(reduced.matrix, expected, atol=1e-12)


def test_partial_trace_bell_single_qubit_is_mixed():
    reduced = partial_trace(make_bell(0, 0).density(), [1])
    assert np.allclose(reduced.matrix, np.eye(2) / 2, atol=1e-12)


def test_partial_trace_keep_all_is_identity():
    rho = make_ghz().density()
    reduced = partial_trace(rho, [0, 1, 2])
    assert np.allclose(reduced.matrix, rho.matrix)


def test_partial_trace_keep_empty_fails():
    with pytest.raises(InvalidStateError):
        partial_trace(make_ghz().density(), [])


def test_partial_trace_keep_order_is_canonical():
    rng = np.random.default_rng(7)
    rho = random_density_matrix(3, rng)
    assert np.allclose(partial_trace(rho, [2, 0]).matrix, partial_trace(rho, [0, 2]).matrix)


def test_reduce_operator_non_qubit_factor():
    a = np.diag([0.25, 0.75]).astype(complex)
    d = np.eye(3) / 3
    joint = np.kron(a, d)
    assert np.allclose(reduce_operator(joint, [2, 3], [0]), a)
    assert np.allclose(reduce_operator(joint, [2, 3], [1]), d)


def test_reduce_operator_dimension_mismatch():
    with pytest.raises(InvalidStateError):
        reduce_operator(np.eye(6), [2, 2], [0])


def test_eig_hermitian_reconstructs():
    rng = np.random.default_rng(3)
    rho = random_density_matrix(3, rng)
    decomposition = eig_hermitian(rho.matrix)
    assert np.max(np.abs(decomposition.reconstruct() - rho.matrix)) <= 1e-9
    assert np.all(np.diff(decomposition.eigenvalues) >= 0)


def test_eig_hermitian_rejects_non_hermitian():
    with pytest.raises(InvalidStateError):
        eig_hermitian(np.array([[0, 1], [0, 0]]))


def test_density_matrix_rejects_bad_trace():
    with pytest.raises(ValueError):
        DensityMatrix.from_array(np.eye(2))


def test_density_matrix_rejects_negative_eigenvalue():
    with pytest.raises(ValueError):
        DensityMatrix.from_array(np.diag([1.5, -0.5]))


def test_density_matrix_is_read_only():
    rho = DensityMatrix.maximally_mixed(1)
    with pytest.raises(ValueError):
        rho.matrix[0, 0] = 1


def test_pure_state_rejects_unnormalized():
    with pytest.raises(ValueError):
        PureState(amplitudes=[1, 1])


def test_psd_power_inverse_on_support():
    matrix = np.diag([4.0, 0.0]).astype(complex)
    assert np.allclose(psd_power(matrix, -0.5), np.diag([0.5, 0.0]))
    assert np.allclose(psd_power(matrix, 0.5), np.diag([2.0, 0.0]))


def test_fidelity_pure_of_own_projector():
    ghz = make_ghz()
    assert fidelity_pure(ghz.density(), ghz) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_pure_dimension_mismatch():
    with pytest.raises(InvalidStateError):
        fidelity_pure(make_ghz().density(), make_bell(0, 0))


def test_partial_trace_composes():
    rng = np.random.default_rng(100)
    for _ in range(100):
        rho = random_density_matrix(3, rng)
        stepwise = partial_trace(partial_trace(rho, [0, 1]), [0])
        assert np.allclose(stepwise.matrix, partial_trace(rho, [0]).matrix, atol=1e-12)
        stepwise = partial_trace(partial_trace(rho, [1, 2]), [1])
        assert np.allclose(stepwise.matrix, partial_trace(rho, [2]).matrix, atol=1e-12)


def test_kron_is_associative():
    rng = np.random.default_rng(8)
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)))
    assert np.allclose(kron_all([a, b, c]), kron(a, kron(b, c)))


def test_eig_hermitian_eigenvalues_sum_to_trace():
    rng = np.random.default_rng(4)
    for n_qubits in (1, 2, 3):
        rho = random_density_matrix(n_qubits, rng, rank=2)
        decomposition = eig_hermitian(rho.matrix)
        assert decomposition.eigenvalues.sum() == pytest.approx(1.0, abs=1e-12)
