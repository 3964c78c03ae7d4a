import numpy as np
import pytest

from cqt_certify.errors import InvalidStateError
from cqt_certify.linalg import DensityMatrix, kron, min_eigenvalue, partial_trace
from cqt_certify.states import (
    BELL_LABELS,
    PAULI_I,
    PAULIS,
    BlochVector,
    Channel,
    apply_kraus,
    bell_frame,
    bell_projectors,
    bloch_state,
    correction_table,
    depolarize,
    depolarize_qubit,
    depolarize_total,
    make_bell,
    make_ghz,
    noisy_ghz,
    purify,
    qubit_depolarizing_kraus,
    random_bloch_vectors,
    random_density_matrix,
    replace_qubit,
)
from cqt_certify.teleport import enumerate_outcomes


def test_ghz_amplitudes():
    amplitudes = make_ghz().amplitudes
    assert amplitudes[0] == pytest.approx(1 / np.sqrt(2))
    assert amplitudes[7] == pytest.approx(1 / np.sqrt(2))
    assert np.count_nonzero(amplitudes) == 2


def test_bell_states_orthonormal():
    states = [make_bell(*label).amplitudes for label in BELL_LABELS]
    gram = np.array([[np.vdot(a, b) for b in states] for a in states])
    assert np.allclose(gram, np.eye(4), atol=1e-12)


def test_bell_phi_01_has_minus_sign():
    amplitudes = make_bell(0, 1).amplitudes * np.sqrt(2)
    assert np.allclose(amplitudes, [1, 0, 0, -1])


def test_bell_invalid_label():
    with pytest.raises(InvalidStateError):
        make_bell(2, 0)


def test_bell_projectors_resolve_identity():
    total = sum(bell_projectors().values())
    assert np.allclose(total, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("label", BELL_LABELS)
def test_bell_frame_maps_phi_00(label):
    phi_00 = make_bell(0, 0).amplitudes
    mapped = kron(PAULI_I, bell_frame(*label)) @ phi_00
    assert np.allclose(mapped, make_bell(*label).amplitudes, atol=1e-12)


def test_bloch_vector_rejects_non_unit():
    with pytest.raises(ValueError):
        BlochVector(x=1.0, y=1.0, z=0.0)


def test_bloch_vector_from_angles():
    a = BlochVector.from_angles(np.pi / 2, 0.0)
    assert a.as_array() == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)


def test_correction_table_complete_and_unitary():
    table = correction_table()
    assert len(table.entries) == 8
    for gamma in (+1, -1):
        assert set(table.row(gamma)) == set(BELL_LABELS)


def test_depolarize_total_endpoints():
    ghz = make_ghz()
    assert np.allclose(depolarize_total(ghz, 0.0).matrix, ghz.density().matrix)
    assert np.allclose(depolarize_total(ghz, 1.0).matrix, np.eye(8) / 8)


def test_depolarize_qubit_fully_mixes_at_one():
    assert np.allclose(depolarize_qubit(make_ghz(), 1.0).matrix, np.eye(8) / 8, atol=1e-12)


@pytest.mark.parametrize("p", [-0.1, 1.5])
def test_depolarize_rejects_bad_p(p):
    with pytest.raises(InvalidStateError):
        depolarize(Channel.Total, make_ghz(), p)


@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_kraus_form_equals_replacement_channel(p):
    kraus = qubit_depolarizing_kraus(p)
    via_kraus = apply_kraus(kraus, make_ghz(), qubits=[0, 1, 2])
    assert np.allclose(via_kraus.matrix, depolarize_qubit(make_ghz(), p).matrix, atol=1e-12)


def test_kraus_weights():
    kraus = qubit_depolarizing_kraus(0.4)
    weights = [np.trace(op.conj().T @ op).real / 2 for op in kraus.operators]
    assert weights == pytest.approx([1 - 3 * 0.4 / 4, 0.1, 0.1, 0.1])


def test_apply_kraus_dimension_mismatch():
    with pytest.raises(InvalidStateError):
        apply_kraus(qubit_depolarizing_kraus(0.2), make_ghz())


def test_replace_qubit_zero():
    rho = make_ghz().density()
    replaced = replace_qubit(rho.matrix, 0, 3, 1.0)
    rest = partial_trace(rho, [1, 2]).matrix
    assert np.allclose(replaced, kron(PAULI_I / 2, rest), atol=1e-12)


def test_noisy_ghz_channels_differ():
    total = noisy_ghz(Channel.Total, 0.3).matrix
    qubit = noisy_ghz(Channel.Qubit, 0.3).matrix
    assert not np.allclose(total, qubit)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_purify_reduces_to_input(seed):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(2, rng, rank=3)
    purified = purify(rho)
    assert purified.n_qubits == 4
    reduced = partial_trace(purified.density(), [0, 1])
    assert np.allclose(reduced.matrix, rho.matrix, atol=1e-9)


def test_purify_fixes_global_phase():
    amplitudes = np.exp(0.7j) * make_ghz().amplitudes
    purified = purify(DensityMatrix.from_array(np.outer(amplitudes, amplitudes.conj())))
    pivot = purified.amplitudes[np.argmax(np.abs(purified.amplitudes))]
    assert pivot.imag == pytest.approx(0.0, abs=1e-12)
    assert pivot.real > 0


def test_purify_pure_state_has_product_ancilla():
    purified = purify(make_ghz().density())
    reduced = partial_trace(purified.density(), [0, 1, 2])
    assert np.allclose(reduced.matrix, make_ghz().density().matrix, atol=1e-9)


def test_random_bloch_vectors_are_unit():
    points = random_bloch_vectors(100, np.random.default_rng(5))
    assert np.allclose(np.linalg.norm(points, axis=1), 1.0)


def test_bloch_state_expectations():
    for point in random_bloch_vectors(20, np.random.default_rng(9)):
        a = BlochVector.from_array(point)
        rho = bloch_state(a).matrix
        expectations = [np.trace(rho @ pauli).real for pauli in PAULIS[1:]]
        assert expectations == pytest.approx(list(point), abs=1e-12)


def test_purify_round_trip_random_states():
    rng = np.random.default_rng(50)
    for _ in range(50):
        rho = random_density_matrix(3, rng)
        purified = purify(rho)
        reduced = partial_trace(purified.density(), [0, 1, 2])
        assert np.max(np.abs(reduced.matrix - rho.matrix)) <= 1e-9


@pytest.mark.parametrize("channel", list(Channel))
def test_noisy_ghz_is_a_state_on_the_grid(channel):
    for p in np.round(np.arange(0.0, 1.0 + 1e-9, 0.05), 10):
        rho = noisy_ghz(channel, float(p)).matrix
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
        assert min_eigenvalue(rho) >= -1e-12


def test_correction_table_recovers_random_inputs():
    ghz = make_ghz().density()
    table = correction_table()
    for point in random_bloch_vectors(20, np.random.default_rng(20)):
        outcomes = enumerate_outcomes(ghz, BlochVector.from_array(point), table)
        assert len(outcomes) == 8
        for outcome in outcomes:
            assert outcome.fidelity == pytest.approx(1.0, abs=1e-9)
