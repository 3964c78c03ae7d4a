"""Noise sweeps, certification demos and the solver self-test."""
import logging
import time
import uuid
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import events
from .config import SweepConfig
from .errors import InvalidStateError, SolverConvergenceError
from .event import EventPublisher, point_subject
from .linalg import DensityMatrix
from .nonlocality import (
    Objective,
    classical_broadcast_bound,
    closed_form_max_s,
    optimize_settings,
)
from .povm import (
    DEFAULT_TOL,
    Backend,
    DiscriminationInstance,
    helstrom_value,
    solve_discrimination,
)
from .results import BoundsReport, SelftestCase, SweepFailure, SweepResults, SweepRow
from .states import Channel, make_ghz, noisy_ghz
from .teleport import ecp_report

CSV_HEADER = "channel,p,s_closed_form,s_optimized,f_c_ne,f_nc_e,ecp,sdp_gap"
CSV_COLUMNS = CSV_HEADER.split(",")

# Seeds stay tied to the channel, not to its position in the run
CHANNEL_INDEX = {Channel.Total: 0, Channel.Qubit: 1}


def evaluate_point(
    channel: Channel,
    p: float,
    grid_index: int,
    config: SweepConfig,
) -> SweepRow:
    report = ecp_report(
        channel, p, tol=config.sdp_tol, max_iters=config.sdp_max_iters, backend=config.backend
    )
    _, s_optimized = optimize_settings(
        noisy_ghz(channel, p),
        Objective.Svetlichny,
        restarts=config.optimizer_restarts,
        seed=[config.seed, CHANNEL_INDEX[channel], grid_index],
    )
    assert report.sdp_gap is not None
    return SweepRow(
        channel=channel,
        p=p,
        s_closed_form=closed_form_max_s(channel, p),
        s_optimized=s_optimized,
        f_c_ne=report.f_c_ne,
        f_nc_e=report.f_nc_e,
        ecp=report.ecp,
        sdp_gap=report.sdp_gap,
    )


def _failure(channel: Channel, p: float, exc: BaseException) -> SweepFailure:
    gap = exc.gap if isinstance(exc, SolverConvergenceError) else None
    return SweepFailure(channel=channel, p=p, exception=exc, gap=gap)


def run_sweep(config: SweepConfig, publisher: EventPublisher | None = None) -> SweepResults:
    results = SweepResults(run_id=str(uuid.uuid1()), config=config)
    results.start = datetime.now(tz=timezone.utc)
    results.precise_start = time.perf_counter()

    tasks = [
        (channel, p, index)
        for channel in config.channel.channels()
        for index, p in enumerate(config.grid())
    ]
    logging.debug(f"sweep: {len(tasks)} point(s) with {config.jobs} job(s)")
    if publisher is not None:
        publisher.publish(
            events.SweepStarted,
            subject=str(config.channel),
            payload={"config": config, "points": len(tasks)},
        )

    rows: list[SweepRow] = []
    failures: list[SweepFailure] = []

    def record(channel: Channel, p: float, row: SweepRow | None, exc: BaseException | None):
        subject = point_subject(str(channel), p)
        if row is not None:
            rows.append(row)
            if publisher is not None:
                publisher.publish(events.SweepPointFinished, subject=subject, payload={"row": row})
            return
        assert exc is not None
        logging.debug(f"sweep: {subject} failed: {exc}")
        failure = _failure(channel, p, exc)
        failures.append(failure)
        if publisher is not None:
            publisher.publish(events.SweepPointFailed, subject=subject, payload={"failure": failure})

    if config.jobs == 1:
        for channel, p, index in tasks:
            try:
                record(channel, p, evaluate_point(channel, p, index, config), None)
            except Exception as exc:
                record(channel, p, None, exc)
    else:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [
                (channel, p, pool.submit(evaluate_point, channel, p, index, config))
                for channel, p, index in tasks
            ]
            for channel, p, future in futures:
                try:
                    record(channel, p, future.result(), None)
                except Exception as exc:
                    record(channel, p, None, exc)

    order = {channel: i for i, channel in enumerate(CHANNEL_INDEX)}
    results.rows = sorted(rows, key=lambda row: (order[row.channel], row.p))
    results.failures = sorted(failures, key=lambda f: (order[f.channel], f.p))
    results.zero_crossings = {
        channel: ecp_zero_crossing(results.rows, channel) for channel in config.channel.channels()
    }
    results.finish = datetime.now(tz=timezone.utc)
    results.precise_finish = time.perf_counter()

    if publisher is not None:
        publisher.publish(events.SweepFinished, subject=str(config.channel), payload={"results": results})
    return results


def format_row(row: SweepRow) -> str:
    values = [row.p, row.s_closed_form, row.s_optimized, row.f_c_ne, row.f_nc_e, row.ecp, row.sdp_gap]
    return ",".join([str(row.channel)] + [f"{value:.12g}" for value in values])


def emit_csv(rows: Sequence[SweepRow], path: Path | str) -> Path:
    if not rows:
        raise InvalidStateError("no rows to write")
    path = Path(path)
    lines = [CSV_HEADER] + [format_row(row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="") as fp:
        fp.write("\n".join(lines) + "\n")
    logging.debug(f"sweep: wrote {len(rows)} row(s) to {path}")
    return path


def read_csv(path: Path | str) -> list[SweepRow]:
    with open(path, encoding="utf-8") as fp:
        header, *lines = fp.read().splitlines()
    if header != CSV_HEADER:
        raise InvalidStateError(f"unexpected header {header!r}")
    rows = []
    for line in lines:
        fields = dict(zip(CSV_COLUMNS, line.split(","), strict=True))
        rows.append(SweepRow.model_validate(fields))
    return rows


def plot_data_path(path: Path | str, channel: Channel) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}_{channel}.dat")


def emit_plot_data(rows: Sequence[SweepRow], path: Path | str) -> list[Path]:
    """One whitespace separated `s ecp` file per channel next to `path`."""
    written = []
    for channel in CHANNEL_INDEX:
        selected = [row for row in rows if row.channel == channel]
        if not selected:
            continue
        target = plot_data_path(path, channel)
        lines = ["# s_closed_form ecp"] + [
            f"{row.s_closed_form:.12g} {row.ecp:.12g}" for row in selected
        ]
        with open(target, "w", encoding="utf-8", newline="") as fp:
            fp.write("\n".join(lines) + "\n")
        written.append(target)
    return written


def ecp_zero_crossing(rows: Iterable[SweepRow], channel: Channel) -> float | None:
    """S at which ECP turns positive, interpolated linearly in s_closed_form."""
    selected = sorted(
        (row for row in rows if row.channel == channel), key=lambda row: row.s_closed_form
    )
    for low, high in zip(selected, selected[1:]):
        if low.ecp <= 0 < high.ecp:
            weight = -low.ecp / (high.ecp - low.ecp)
            return low.s_closed_form + weight * (high.s_closed_form - low.s_closed_form)
    return None


def demo_bounds(
    restarts: int = 20, seed: int = 42, publisher: EventPublisher | None = None
) -> BoundsReport:
    ghz = make_ghz().density()
    svetlichny_settings, quantum_svetlichny = optimize_settings(
        ghz, Objective.Svetlichny, restarts=restarts, seed=seed
    )
    mermin_settings, quantum_mermin = optimize_settings(
        ghz, Objective.Mermin, restarts=restarts, seed=seed
    )
    report = BoundsReport(
        classical_svetlichny=classical_broadcast_bound(Objective.Svetlichny),
        classical_mermin=classical_broadcast_bound(Objective.Mermin),
        non_broadcast_svetlichny=classical_broadcast_bound(Objective.Svetlichny, broadcast=False),
        quantum_svetlichny=quantum_svetlichny,
        quantum_mermin=quantum_mermin,
        svetlichny_settings=svetlichny_settings,
        mermin_settings=mermin_settings,
    )
    if publisher is not None:
        publisher.publish(events.BoundsComputed, subject="ghz", payload={"report": report})
    return report


def selftest_instances() -> dict[str, tuple[DiscriminationInstance, float]]:
    ket_0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
    ket_1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)
    ket_plus = np.full((2, 2), 0.5, dtype=np.complex128)
    helstrom = DiscriminationInstance(rho_tilde=[ket_0 / 2, ket_plus / 2], labels=("0", "+"))
    orthogonal = DiscriminationInstance(rho_tilde=[ket_0 / 2, ket_1 / 2], labels=("0", "1"))
    mixed = DensityMatrix.maximally_mixed(1).matrix
    identical = DiscriminationInstance(
        rho_tilde=[mixed / 3, mixed / 3, mixed / 3], labels=("a", "b", "c")
    )
    return {
        "helstrom": (helstrom, helstrom_value(ket_0 / 2, ket_plus / 2)),
        "orthogonal": (orthogonal, 1.0),
        "identical": (identical, 1.0 / 3.0),
    }


def povm_selftest(
    tol: float = DEFAULT_TOL,
    backend: Backend = Backend.InteriorPoint,
    publisher: EventPublisher | None = None,
) -> list[SelftestCase]:
    cases = []
    for name, (instance, expected) in selftest_instances().items():
        result = solve_discrimination(instance, tol=tol, backend=backend)
        case = SelftestCase(
            name=name,
            expected=expected,
            primal_value=result.primal_value,
            gap=result.gap,
            tol=tol,
        )
        logging.debug(f"sweep: self-test {name} value {case.primal_value:.12f}")
        if publisher is not None:
            publisher.publish(events.PovmSelftestCase, subject=name, payload={"case": case})
        cases.append(case)
    return cases
