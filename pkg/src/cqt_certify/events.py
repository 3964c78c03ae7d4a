from .event import EventName

RunStarted: EventName = "lab:run:started"
RunFinished: EventName = "lab:run:finished"

# Noise sweep over the (channel, p) grid
SweepStarted: EventName = "sweep:started"
SweepPointFinished: EventName = "sweep:point:finished"
SweepPointFailed: EventName = "sweep:point:failed"
SweepFinished: EventName = "sweep:finished"

# Classical and quantum bounds of the Bell functionals
BoundsComputed: EventName = "bounds:computed"

TeleportReport: EventName = "teleport:report"

PovmSelftestCase: EventName = "povm:selftest:case"

# A CSV, plot data or JSON file has been written
OutputWritten: EventName = "output:written"
