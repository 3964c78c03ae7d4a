import logging
import platform
import sys
import time
import uuid
from argparse import Namespace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Any

import numpy
import rich.console
import rich.theme
import scipy
from pydantic import BaseModel

from . import events
from .event import SOURCE_ID_GENERATOR, EventBus, EventPublisher
from .reporter import RichReporter


class LabSession:
    """One invocation of the command line tool.

    Owns the console, the event bus and the reporter listening on it, and
    times the run between `start` and `finish`.
    """

    def __init__(
        self,
        options: Namespace,
        source_id_generator=SOURCE_ID_GENERATOR,
    ):
        self.options = options
        self.quiet = bool(getattr(options, "quiet", False))
        self.verbose = bool(getattr(options, "verbose", False))
        self.console = self._create_console(options)

        self.event_bus = EventBus()
        self.source_id = source_id_generator()
        self.publisher = EventPublisher(self.source_id, self.event_bus)

        self.run_id = str(uuid.uuid1())
        self.command = getattr(options, "command", None) or ""

        self.start_time: datetime | None = None
        self.finish_time: datetime | None = None
        self.precise_start: float | None = None
        self.precise_finish: float | None = None

        self.reporter = RichReporter(
            self.event_bus, self.console, quiet=self.quiet, verbose=self.verbose
        )

    def start(self) -> None:
        logging.debug(f"session: start {self.command} ({self.run_id})")

        self.start_time = datetime.now(tz=timezone.utc)
        self.precise_start = time.perf_counter()
        self.publisher.publish(
            events.RunStarted,
            subject=self.command,
            payload={
                "run_id": self.run_id,
                "start": self.start_time,
                "environment": self._collect_environment(),
            },
        )

    def finish(self, exit_code: int) -> int:
        logging.debug(f"session: finish {self.command} with {exit_code}")

        self.finish_time = datetime.now(tz=timezone.utc)
        self.precise_finish = time.perf_counter()
        duration = self.duration_precise() if self.precise_start is not None else None
        self.publisher.publish(
            events.RunFinished,
            subject=self.command,
            payload={
                "exit_code": exit_code,
                "finish": self.finish_time,
                "duration": duration,
            },
        )
        self.save_output()
        return exit_code

    def duration(self) -> timedelta:
        finish = self.finish_time
        start = self.start_time
        if finish is None or start is None:
            raise ValueError(f"Finish time {finish} or start time {start} missing")
        if finish < start:
            raise ValueError("finish time is before start time")

        return finish - start

    def duration_precise(self) -> float:
        finish = self.precise_finish
        start = self.precise_start
        if finish is None or start is None:
            raise ValueError(f"Precise finish time {finish} or start time {start} missing")
        if finish < start:
            raise ValueError("finish time is before start time")

        return finish - start

    def write_json(self, model: BaseModel, path: Path | str) -> Path:
        path = Path(path)
        data = model.model_dump_json(indent=4)
        with open(path, "w", encoding="utf-8") as fp:
            fp.write(data)
        self.output_written(path)
        return path

    def output_written(self, path: Path | str) -> None:
        self.publisher.publish(events.OutputWritten, subject=str(path))

    def _create_console(self, options: Namespace) -> rich.console.Console:
        record = False
        self.output_svg = getattr(options, "output_svg", None)
        self.output_html = getattr(options, "output_html", None)
        self.output_text = getattr(options, "output_text", None)
        if any(p is not None for p in (self.output_svg, self.output_html, self.output_text)):
            record = True

        self.theme = rich.theme.Theme(
            styles={
                "keyname": "blue",
                "value": "white",
                "passed": "green",
                "failed": "red",
                "error": "bright_red",
                "separator": "green",
            }
        )

        no_color = bool(getattr(options, "no_color", False))

        return rich.console.Console(theme=self.theme, record=record, no_color=no_color)

    def _collect_environment(self) -> dict[str, Any]:
        env: dict[str, Any] = {}
        env["platform"] = sys.platform
        env["python"] = platform.python_version()
        env["numpy_version"] = numpy.__version__
        env["scipy_version"] = scipy.__version__
        return env

    def save_output(self) -> None:
        if self.output_svg is not None:
            self.console.save_svg(str(self.output_svg))
        if self.output_html is not None:
            self.console.save_html(str(self.output_html))
        if self.output_text is not None:
            self.console.save_text(str(self.output_text))
