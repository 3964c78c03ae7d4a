import traceback
from datetime import datetime

from pydantic import BaseModel, Field, field_serializer, model_validator

from .config import SweepConfig
from .nonlocality import QUANTUM_SVETLICHNY_MAX, SettingsTriple
from .states import Channel

PerfTime = float

S_ATOL = 1e-6


class SweepRow(BaseModel):
    model_config = {"frozen": True}

    channel: Channel
    p: float
    s_closed_form: float
    s_optimized: float
    f_c_ne: float
    f_nc_e: float
    ecp: float
    sdp_gap: float

    @model_validator(mode="after")
    def _check_row(self) -> "SweepRow":
        if abs(self.ecp - (self.f_c_ne - self.f_nc_e)) > 1e-12:
            raise ValueError("ecp must equal f_c_ne - f_nc_e")
        for name in ("s_closed_form", "s_optimized"):
            value = getattr(self, name)
            if not -S_ATOL <= value <= QUANTUM_SVETLICHNY_MAX + S_ATOL:
                raise ValueError(f"{name} = {value} outside [0, 4 sqrt 2]")
        return self


class SweepFailure(BaseModel):
    model_config = {"arbitrary_types_allowed": True}

    channel: Channel
    p: float
    exception: BaseException | None = None
    gap: float | None = None

    def __rich_repr__(self):
        yield "channel", str(self.channel)
        yield "p", self.p
        if self.exception is not None:
            yield "exception", self.exception

    @field_serializer("exception")
    def serialize_exception(self, exc, _info) -> str:
        if exc is None:
            return ""

        msg = "".join(traceback.format_exception_only(exc)).rstrip("\n")
        return msg


class SweepResults(BaseModel):
    run_id: str

    start: datetime | None = None
    finish: datetime | None = None
    precise_start: PerfTime = 0.0
    precise_finish: PerfTime = 0.0

    config: SweepConfig | None = None
    rows: list[SweepRow] = Field(default_factory=list)
    failures: list[SweepFailure] = Field(default_factory=list)
    zero_crossings: dict[Channel, float | None] = Field(default_factory=dict)

    def duration(self) -> PerfTime:
        return self.precise_finish - self.precise_start

    @property
    def ok(self) -> bool:
        return not self.failures

    def __rich_repr__(self):
        yield "run_id", self.run_id
        yield "rows", len(self.rows)
        yield "failures", self.failures
        yield "zero_crossings", self.zero_crossings


class BoundsReport(BaseModel):
    classical_svetlichny: float
    classical_mermin: float
    non_broadcast_svetlichny: float
    quantum_svetlichny: float
    quantum_mermin: float
    svetlichny_settings: SettingsTriple
    mermin_settings: SettingsTriple


class SelftestCase(BaseModel):
    name: str
    expected: float
    primal_value: float
    gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.primal_value - self.expected) <= self.tol and self.gap <= self.tol
