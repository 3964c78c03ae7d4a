import numpy as np
import pytest

from cqt_certify.errors import InvalidStateError
from cqt_certify.nonlocality import (
    CLASSICAL_SVETLICHNY_MAX,
    QUANTUM_SVETLICHNY_MAX,
    BipartiteTable,
    CorrelationTable,
    Objective,
    SettingsTriple,
    bipartite_spin_correlations,
    chsh_value,
    classical_broadcast_bound,
    closed_form_max_s,
    conditional_chsh,
    correlations_from_state,
    deterministic_strategies,
    mermin_value,
    optimize_settings,
    spin_correlations,
    svetlichny_value,
)
from cqt_certify.linalg import DensityMatrix, kron, projector
from cqt_certify.states import (
    BlochVector,
    Channel,
    make_bell,
    make_ghz,
    noisy_ghz,
    random_density_matrix,
)

X = BlochVector(x=1.0, y=0.0, z=0.0)
Y = BlochVector(x=0.0, y=1.0, z=0.0)
Z = BlochVector(x=0.0, y=0.0, z=1.0)
MINUS_X = BlochVector(x=-1.0, y=0.0, z=0.0)
MINUS_Y = BlochVector(x=0.0, y=-1.0, z=0.0)


def diagonal(x: float, z: float) -> BlochVector:
    return BlochVector.from_array(np.array([x, 0.0, z]) / np.hypot(x, z))


def test_bell_state_reaches_tsirelson():
    table = bipartite_spin_correlations(
        make_bell(0, 0).density(), (Z, X), (diagonal(1, 1), diagonal(-1, 1))
    )
    assert chsh_value(table) == pytest.approx(2 * np.sqrt(2), abs=1e-12)


def test_ghz_mermin_spin_settings():
    table = spin_correlations(make_ghz().density(), (Y, X), (Y, X), (MINUS_Y, MINUS_X))
    assert mermin_value(table) == pytest.approx(4.0, abs=1e-12)


def test_broadcast_strategy_count():
    assert sum(1 for _ in deterministic_strategies()) == 1024
    assert sum(1 for _ in deterministic_strategies(broadcast=False)) == 64


def test_classical_bounds():
    assert classical_broadcast_bound(Objective.Svetlichny) == 4.0
    assert classical_broadcast_bound(Objective.Mermin) == 4.0
    assert classical_broadcast_bound(Objective.Svetlichny, broadcast=False) == 4.0
    assert classical_broadcast_bound(Objective.Mermin, broadcast=False) == 2.0


def test_ghz_svetlichny_maximum():
    _, value = optimize_settings(make_ghz().density(), Objective.Svetlichny, restarts=20, seed=0)
    assert value >= QUANTUM_SVETLICHNY_MAX - 1e-3
    assert value <= QUANTUM_SVETLICHNY_MAX + 1e-9


def test_ghz_mermin_maximum_equals_broadcast_bound():
    _, value = optimize_settings(make_ghz().density(), Objective.Mermin, restarts=10, seed=0)
    assert value == pytest.approx(4.0, abs=1e-3)


def test_optimizer_is_deterministic():
    rho = random_density_matrix(3, np.random.default_rng(4))
    first = optimize_settings(rho, Objective.Svetlichny, restarts=2, seed=9)
    second = optimize_settings(rho, Objective.Svetlichny, restarts=2, seed=9)
    assert first[1] == second[1]
    assert np.array_equal(first[0].to_parameters(), second[0].to_parameters())


def test_optimizer_rejects_zero_restarts():
    with pytest.raises(InvalidStateError):
        optimize_settings(make_ghz().density(), Objective.Svetlichny, restarts=0)


def test_random_settings_respect_quantum_bound():
    rng = np.random.default_rng(8)
    rho = random_density_matrix(3, rng)
    for _ in range(10):
        settings = SettingsTriple.from_parameters(rng.uniform(0, 2 * np.pi, size=15))
        table = correlations_from_state(rho, settings)
        assert abs(svetlichny_value(table)) <= QUANTUM_SVETLICHNY_MAX + 1e-9


def test_settings_need_fifteen_parameters():
    with pytest.raises(InvalidStateError):
        SettingsTriple.from_parameters(np.zeros(12))


def test_svetlichny_is_weighted_sum_of_conditional_chsh():
    rng = np.random.default_rng(6)
    settings = SettingsTriple.from_parameters(rng.uniform(0, np.pi, size=15))
    table = correlations_from_state(make_ghz().density(), settings)
    marginal = table.alice_marginal()
    total = 0.0
    for alpha, index in ((1, 0), (-1, 1)):
        total += alpha * marginal[index, 0, 0, 0] * conditional_chsh(table, alpha, 0)
        total += alpha * marginal[index, 1, 0, 0] * conditional_chsh(table, alpha, 1, primed=True)
    assert svetlichny_value(table) == pytest.approx(total, abs=1e-9)


def test_conditional_chsh_rejects_bad_alpha():
    table = correlations_from_state(
        make_ghz().density(), SettingsTriple.from_parameters(np.zeros(15))
    )
    with pytest.raises(InvalidStateError):
        conditional_chsh(table, 0, 0)


def test_correlation_table_rejects_unnormalized():
    with pytest.raises(ValueError):
        CorrelationTable(p=np.zeros((2,) * 6))
    with pytest.raises(ValueError):
        BipartiteTable(p=np.ones((2,) * 4))


@pytest.mark.parametrize(
    "channel,p,expected",
    [
        (Channel.Total, 0.0, 4 * np.sqrt(2)),
        (Channel.Total, 0.5, 2 * np.sqrt(2) + 2),
        (Channel.Total, 1.0, 4.0),
        (Channel.Qubit, 0.5, 0.125 * 4 * np.sqrt(2) + 3.5),
        (Channel.Qubit, 1.0, 4.0),
    ],
)
def test_closed_form_curve(channel, p, expected):
    assert closed_form_max_s(channel, p) == pytest.approx(expected, rel=1e-12)


def test_closed_form_stays_between_bounds():
    for p in np.linspace(0, 1, 11):
        for channel in Channel:
            value = closed_form_max_s(channel, p)
            assert CLASSICAL_SVETLICHNY_MAX - 1e-12 <= value <= QUANTUM_SVETLICHNY_MAX + 1e-12


def test_closed_form_rejects_bad_p():
    with pytest.raises(InvalidStateError):
        closed_form_max_s(Channel.Total, 1.2)


def test_bell_pair_with_product_qubit_is_classical():
    rho = DensityMatrix.from_array(kron(make_bell(0, 0).density().matrix, projector([1, 0])))
    _, value = optimize_settings(rho, Objective.Svetlichny, restarts=8, seed=0)
    assert value <= CLASSICAL_SVETLICHNY_MAX + 1e-6


@pytest.mark.parametrize("p", [0.2, 0.5])
def test_depolarized_ghz_optimum(p):
    rho = noisy_ghz(Channel.Total, p)
    _, value = optimize_settings(rho, Objective.Svetlichny, restarts=20, seed=0)
    assert value == pytest.approx((1 - p) * QUANTUM_SVETLICHNY_MAX, abs=1e-3)
    assert value <= closed_form_max_s(Channel.Total, p) + 1e-9


def test_white_noise_has_no_svetlichny_value():
    rng = np.random.default_rng(12)
    for _ in range(5):
        settings = SettingsTriple.from_parameters(rng.uniform(0, 2 * np.pi, size=15))
        table = correlations_from_state(DensityMatrix.maximally_mixed(3), settings)
        assert svetlichny_value(table) == pytest.approx(0.0, abs=1e-12)


def test_svetlichny_is_linear_in_the_state():
    rng = np.random.default_rng(13)
    rho_1 = random_density_matrix(3, rng)
    rho_2 = make_ghz().density()
    weight = 0.37
    mixture = DensityMatrix(
        matrix=weight * rho_1.matrix + (1 - weight) * rho_2.matrix, n_qubits=3
    )
    settings = SettingsTriple.from_parameters(rng.uniform(0, 2 * np.pi, size=15))

    def value(rho: DensityMatrix) -> float:
        return svetlichny_value(correlations_from_state(rho, settings))

    expected = weight * value(rho_1) + (1 - weight) * value(rho_2)
    assert value(mixture) == pytest.approx(expected, abs=1e-12)
