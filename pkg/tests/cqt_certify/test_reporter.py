from argparse import Namespace

import pytest

from cqt_certify import events
from cqt_certify.results import SelftestCase, SweepFailure
from cqt_certify.session import LabSession
from cqt_certify.states import Channel
from cqt_certify.teleport import FidelityReport


def make_session(tmp_path, **options) -> LabSession:
    values = {"command": "teleport", "output_text": str(tmp_path / "out.txt")}
    values.update(options)
    return LabSession(Namespace(**values))


def test_session_records_console(tmp_path):
    session = make_session(tmp_path)
    session.start()
    report = FidelityReport(
        f_c_ne=1.0, f_nc_e=2 / 3, f_nc_guess=2 / 3, ecp=1 / 3, channel=Channel.Total, p=0.0
    )
    session.publisher.publish(events.TeleportReport, subject="total", payload={"report": report})
    assert session.finish(0) == 0

    text = (tmp_path / "out.txt").read_text(encoding="utf-8")
    assert "cqt-certify teleport" in text
    assert "ECP" in text
    assert "0.3333333333" in text
    assert session.duration_precise() >= 0
    assert session.duration().total_seconds() >= 0


def test_quiet_session_still_reports_failures(tmp_path):
    session = make_session(tmp_path, quiet=True)
    session.start()
    failure = SweepFailure(channel=Channel.Qubit, p=0.4, exception=RuntimeError("no gap"))
    session.publisher.publish(
        events.SweepPointFailed, subject="qubit:0.4", payload={"failure": failure}
    )
    case = SelftestCase(name="helstrom", expected=1.0, primal_value=1.0, gap=0.0, tol=1e-7)
    session.publisher.publish(events.PovmSelftestCase, subject="helstrom", payload={"case": case})
    session.finish(2)

    text = (tmp_path / "out.txt").read_text(encoding="utf-8")
    assert "qubit:0.4" in text
    assert "no gap" in text
    assert "helstrom" not in text


def test_session_events_are_recorded(tmp_path):
    session = make_session(tmp_path)
    session.start()
    session.output_written(tmp_path / "sweep.csv")
    session.finish(0)

    names = [event.name for event in session.event_bus.history]
    assert names == [events.RunStarted, events.OutputWritten, events.RunFinished]
    started = session.event_bus.get_with_name(events.RunStarted)[0]
    assert started.payload["run_id"] == session.run_id
    assert "numpy_version" in started.payload["environment"]


def test_duration_before_finish(tmp_path):
    session = make_session(tmp_path)
    with pytest.raises(ValueError):
        session.duration()


def test_failure_serializes_exception():
    failure = SweepFailure(channel=Channel.Total, p=0.1, exception=ValueError("bad"))
    data = failure.model_dump()
    assert data["exception"] == "ValueError: bad"
