import numpy as np
import pytest

from cqt_certify.errors import InvalidStateError
from cqt_certify.linalg import DensityMatrix
from cqt_certify.states import (
    AXIAL_POINTS,
    BELL_LABELS,
    BlochVector,
    Channel,
    correction_table,
    make_ghz,
    noisy_ghz,
    random_density_matrix,
)
from cqt_certify.teleport import (
    FidelityForm,
    FidelityReport,
    adversary_view,
    bell_branch_corrections,
    bloch_average,
    control_form,
    control_power,
    ecp_report,
    enumerate_outcomes,
    fidelity_form,
    fidelity_no_control_guess,
    fidelity_with_control,
    gamma_from_branch,
    guess_form,
    haar_estimate,
)


def test_ideal_fidelities():
    ghz = make_ghz().density()
    table = correction_table()
    assert fidelity_with_control(ghz, table) == pytest.approx(1.0, abs=1e-9)
    assert fidelity_no_control_guess(ghz, table) == pytest.approx(2 / 3, abs=1e-9)
    assert control_power(ghz) == pytest.approx(1 / 3, abs=1e-9)


@pytest.mark.parametrize("p", [0.0, 0.25, 0.5, 0.75, 1.0])
def test_total_channel_fidelities(p):
    rho = noisy_ghz(Channel.Total, p)
    table = correction_table()
    assert fidelity_with_control(rho, table) == pytest.approx(1 - p / 2, abs=1e-9)
    assert fidelity_no_control_guess(rho, table) == pytest.approx((2 - p / 2) / 3, abs=1e-9)


def test_maximally_mixed_resource_has_no_control_power():
    assert control_power(DensityMatrix.maximally_mixed(3)) == pytest.approx(0.0, abs=1e-12)


def test_ideal_run_outcomes():
    a = BlochVector.from_angles(1.1, 0.4)
    outcomes = enumerate_outcomes(make_ghz().density(), a, correction_table())
    assert len(outcomes) == 8
    assert sum(o.probability for o in outcomes) == pytest.approx(1.0)
    for outcome in outcomes:
        assert outcome.probability == pytest.approx(1 / 8)
        assert outcome.fidelity == pytest.approx(1.0, abs=1e-9)


def test_outcome_average_matches_form():
    rng = np.random.default_rng(11)
    resource = random_density_matrix(3, rng)
    table = correction_table()
    form = control_form(resource, table)
    for a in AXIAL_POINTS:
        weighted = sum(o.probability * o.fidelity for o in enumerate_outcomes(resource, a, table))
        assert weighted == pytest.approx(form.evaluate(a), abs=1e-9)


def test_sphere_average_equals_axial_average():
    rng = np.random.default_rng(2)
    form = guess_form(random_density_matrix(3, rng), correction_table())
    assert form.sphere_average() == pytest.approx(bloch_average(form.evaluate), abs=1e-12)


def test_axial_average_matches_haar_estimate():
    rng = np.random.default_rng(2024)
    table = correction_table()
    for _ in range(20):
        form = control_form(random_density_matrix(3, rng), table)
        mean, stderr = haar_estimate(form.evaluate_many, 100_000, rng)
        assert abs(bloch_average(form.evaluate) - mean) <= 3 * stderr + 1e-12


def test_fidelity_form_rejects_wrong_shape():
    with pytest.raises(InvalidStateError):
        fidelity_form(np.eye(8), correction_table().row(+1))


def test_fidelity_form_addition():
    one = FidelityForm(matrix=np.eye(4))
    assert (one + one.scaled(2.0)).matrix[0, 0] == 3.0
    assert FidelityForm.zero().sphere_average() == 0.0


def test_gamma_from_branch_reads_c1():
    assert [gamma_from_branch(label) for label in BELL_LABELS] == [1, -1, 1, -1]


def test_bell_branch_corrections_are_table_rows():
    table = correction_table()
    corrections = bell_branch_corrections(table)
    assert sorted(corrections) == [0, 1, 2, 3]
    for delta, gamma in ((0, +1), (1, -1), (2, +1), (3, -1)):
        for label, rotation in table.row(gamma).items():
            assert np.allclose(corrections[delta][label], rotation)


def test_adversary_view_dimensions():
    view = adversary_view(noisy_ghz(Channel.Total, 0.2))
    assert view.n_qubits == 5


def test_report_rejects_inconsistent_ecp():
    with pytest.raises(ValueError):
        FidelityReport(f_c_ne=1.0, f_nc_e=0.5, f_nc_guess=0.5, ecp=0.4)


def test_ecp_at_maximal_violation():
    report = ecp_report(Channel.Total, 0.0)
    assert report.ecp == pytest.approx(1 / 3, abs=1e-6)
    assert report.f_nc_e == pytest.approx(2 / 3, abs=1e-6)
    assert report.sdp_gap <= 1e-7


def test_ecp_fully_depolarized():
    # Derek reads the Bell branch exactly; branches 10 and 11 leave Bob a Pauli error
    for channel in Channel:
        report = ecp_report(channel, 1.0)
        assert report.f_c_ne == pytest.approx(0.5, abs=1e-9)
        assert report.f_nc_e == pytest.approx(2 / 3, abs=1e-6)
        assert report.ecp == pytest.approx(-1 / 6, abs=1e-6)


def test_ecp_qubit_channel_at_maximal_violation():
    assert ecp_report(Channel.Qubit, 0.0).ecp == pytest.approx(1 / 3, abs=1e-6)


@pytest.mark.parametrize("channel", list(Channel))
def test_adversary_does_at_least_as_well_as_guessing(grid_reports, channel):
    for report in grid_reports[channel]:
        assert report.f_nc_e >= report.f_nc_guess - 1e-6


def test_sphere_average_of_xy_product_is_zero():
    rng = np.random.default_rng(1)
    mean, stderr = haar_estimate(lambda points: points[:, 0] * points[:, 1], 1_000_000, rng)
    assert bloch_average(lambda a: a.x * a.y) == 0.0
    assert abs(mean) <= 3 * stderr
