import logging

import rich.box
import rich.console
import rich.pretty
import rich.table

from . import events
from .console import (
    INDENT,
    MIN_WIDTH,
    format_check,
    format_ecp,
    format_gap,
    format_number,
    print_indented,
    print_key,
    print_key_value,
    print_separator,
)
from .event import SOURCE_ID_GENERATOR, Event, EventBus, EventCallback
from .nonlocality import CLASSICAL_SVETLICHNY_MAX, QUANTUM_SVETLICHNY_MAX
from .results import BoundsReport, SelftestCase, SweepFailure, SweepResults, SweepRow
from .teleport import FidelityReport


class RichReporter:
    def __init__(
        self,
        event_bus: EventBus,
        console: rich.console.Console,
        quiet: bool = False,
        verbose: bool = False,
        source_id_generator=SOURCE_ID_GENERATOR,
    ):
        self.quiet = quiet
        self.verbose = verbose

        self.source_id = source_id_generator()
        self._event_handlers = self._configure_event_handlers()
        event_bus.subscribe(self.source_id, self.event_handler, names=self._event_handlers)

        self.console = console

    # region event handling
    def event_handler(self, event: Event) -> None:
        handler = self._event_handlers.get(event.name, None)
        if handler is not None:
            handler(event)

    def _run_started(self, event: Event) -> None:
        logging.debug("reporter: run started")

        if not self.quiet:
            print_separator(self.console, f"cqt-certify {event.subject}")
        return None

    def _run_finished(self, event: Event) -> None:
        logging.debug("reporter: run finished")

        if self.quiet:
            return None
        payload = event.payload or {}
        status = "[passed]ok[/]" if payload.get("exit_code", 0) == 0 else "[failed]failed[/]"
        duration = payload.get("duration")
        text = f"finished in {duration:.2f}s" if duration is not None else "finished"
        print_separator(self.console, text)
        self.console.print(f"{INDENT}status: {status}")
        return None

    def _sweep_started(self, event: Event) -> None:
        if self.quiet or not event.payload:
            return None
        config = event.payload["config"]
        print_key(self.console, "sweep")
        print_key_value(self.console, "channel", str(config.channel), prefix=INDENT)
        print_key_value(
            self.console,
            "grid",
            f"p in [{config.p_min}, {config.p_max}] step {config.p_step}"
            f" ({event.payload['points']} points)",
            prefix=INDENT,
        )
        print_key_value(self.console, "sdp tol", format_number(config.sdp_tol), prefix=INDENT)
        print_key_value(self.console, "restarts", str(config.optimizer_restarts), prefix=INDENT)
        print_key_value(self.console, "seed", str(config.seed), prefix=INDENT)
        print_key_value(self.console, "jobs", str(config.jobs), prefix=INDENT)
        return None

    def _sweep_point_finished(self, event: Event) -> None:
        if self.quiet or not self.verbose or not event.payload:
            return None
        row: SweepRow = event.payload["row"]
        print_key_value(
            self.console,
            str(event.subject),
            f"S={row.s_closed_form:.6f} ECP={row.ecp:+.6f} gap={row.sdp_gap:.2e}",
            prefix=INDENT,
        )
        return None

    def _sweep_point_failed(self, event: Event) -> None:
        if not event.payload:
            return None
        failure: SweepFailure = event.payload["failure"]
        print_key_value(
            self.console,
            str(event.subject),
            str(failure.exception),
            prefix=INDENT,
            value_color="failed",
        )
        return None

    def _sweep_finished(self, event: Event) -> None:
        if self.quiet or not event.payload:
            return None
        results: SweepResults = event.payload["results"]
        self._print_sweep_table(results)
        for channel, crossing in results.zero_crossings.items():
            value = "none on grid" if crossing is None else f"S = {crossing:.6f}"
            print_key_value(self.console, f"ECP zero crossing ({channel})", value, prefix=INDENT)
        if results.failures:
            print_key_value(
                self.console,
                "failures",
                str(len(results.failures)),
                prefix=INDENT,
                value_color="failed",
            )
        return None

    def _bounds_computed(self, event: Event) -> None:
        if self.quiet or not event.payload:
            return None
        report: BoundsReport = event.payload["report"]
        table = self._key_value_table()
        table.add_row("broadcast classical S", format_number(report.classical_svetlichny))
        table.add_row("non-broadcast classical S", format_number(report.non_broadcast_svetlichny))
        table.add_row("broadcast classical Mermin", format_number(report.classical_mermin))
        table.add_row("GHZ S", format_number(report.quantum_svetlichny))
        table.add_row("GHZ Mermin", format_number(report.quantum_mermin))
        table.add_row(
            "S certifies",
            format_check(report.quantum_svetlichny > CLASSICAL_SVETLICHNY_MAX),
        )
        table.add_row(
            "Mermin certifies",
            format_check(report.quantum_mermin > report.classical_mermin + 1e-6),
        )
        print_key(self.console, "bounds")
        print_indented(self.console, table)
        if self.verbose:
            print_key(self.console, "svetlichny settings", prefix=INDENT)
            settings = rich.pretty.Pretty(report.svetlichny_settings)
            print_indented(self.console, settings, level=2)
            print_key(self.console, "mermin settings", prefix=INDENT)
            settings = rich.pretty.Pretty(report.mermin_settings)
            print_indented(self.console, settings, level=2)
        return None

    def _teleport_report(self, event: Event) -> None:
        if self.quiet or not event.payload:
            return None
        report: FidelityReport = event.payload["report"]
        table = self._key_value_table()
        table.add_row("channel", str(report.channel))
        table.add_row("p", format_number(report.p))
        table.add_row("F_C (no eavesdropper)", format_number(report.f_c_ne))
        table.add_row("F_NC (random guess)", format_number(report.f_nc_guess))
        table.add_row("F_NC (with eavesdropper)", format_number(report.f_nc_e))
        table.add_row("ECP", format_number(report.ecp))
        table.add_row("SDP primal", format_number(report.primal_value))
        table.add_row("SDP gap", format_number(report.sdp_gap, 3))
        print_key(self.console, "teleport")
        print_indented(self.console, table)
        return None

    def _povm_selftest_case(self, event: Event) -> None:
        if self.quiet or not event.payload:
            return None
        case: SelftestCase = event.payload["case"]
        print_key_value(
            self.console,
            case.name,
            f"value {case.primal_value:.10f} expected {case.expected:.10f}",
            prefix=INDENT,
        )
        gap = format_gap(case.gap, case.tol)
        self.console.print(f"{INDENT}{INDENT}gap {gap} {format_check(case.passed)}")
        return None

    def _output_written(self, event: Event) -> None:
        if self.quiet:
            return None
        print_key_value(self.console, "wrote", str(event.subject), prefix=INDENT)
        return None

    def _configure_event_handlers(self) -> dict[str, EventCallback]:
        return {
            events.RunStarted: self._run_started,
            events.RunFinished: self._run_finished,
            # Sweep
            events.SweepStarted: self._sweep_started,
            events.SweepPointFinished: self._sweep_point_finished,
            events.SweepPointFailed: self._sweep_point_failed,
            events.SweepFinished: self._sweep_finished,
            # Demos
            events.BoundsComputed: self._bounds_computed,
            events.TeleportReport: self._teleport_report,
            events.PovmSelftestCase: self._povm_selftest_case,
            events.OutputWritten: self._output_written,
        }

    # endregion

    # region report output
    def _key_value_table(self) -> rich.table.Table:
        width = min(MIN_WIDTH - len(INDENT), self.console.width)
        table = rich.table.Table(width=width, show_header=False, box=rich.box.SIMPLE)
        table.add_column("name", style="keyname")
        table.add_column("value", style="value")
        return table

    def _print_sweep_table(self, results: SweepResults) -> None:
        table = rich.table.Table(box=rich.box.SQUARE, border_style="dim white")
        for name in ("channel", "p", "S closed", "S optimized", "F_C", "F_NC^E", "ECP", "gap"):
            table.add_column(name, header_style="green", justify="right")
        for row in results.rows:
            table.add_row(
                str(row.channel),
                f"{row.p:.4g}",
                f"{row.s_closed_form:.6f}",
                f"{row.s_optimized:.6f}",
                f"{row.f_c_ne:.6f}",
                f"{row.f_nc_e:.6f}",
                format_ecp(row.ecp),
                format_gap(row.sdp_gap),
            )
        print_indented(self.console, table)
        limit = f"{QUANTUM_SVETLICHNY_MAX:.6f}"
        self.console.print(f"{INDENT}[dim white]S ranges from 4 (classical) to {limit} (GHZ)[/]")

    # endregion
