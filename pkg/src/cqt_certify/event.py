"""In-process event bus connecting the computations to the reporter."""
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any, Callable, Iterable
from uuid import uuid1

EventId = str
EventName = str
EventSource = str
# What an event is about, e.g. "total:0.12" for one sweep point
Subject = str


def point_subject(channel: str, p: float) -> Subject:
    return f"{channel}:{p:g}"


@dataclass(frozen=True)
class Event:
    name: EventName
    source: EventSource = ""
    subject: Subject | None = None
    payload: Any | None = None
    id: EventId = ""
    time: datetime | None = None

    def __rich_repr__(self):
        yield "id", self.id
        yield "source", self.source
        yield "name", self.name
        if self.subject is not None:
            yield "subject", self.subject
        if self.time is not None:
            yield "time", self.time
        if self.payload is not None:
            yield "payload", self.payload


EventCallback = Callable[[Event], None]


@dataclass
class Subscription:
    source: EventSource
    func: EventCallback
    # None receives every event
    names: frozenset[EventName] | None = None

    def wants(self, event: Event) -> bool:
        if event.source == self.source:
            return False
        return self.names is None or event.name in self.names


IdGenerator = Callable[[], str]
DatetimeGenerator = Callable[[], datetime]


def CLOCK() -> datetime:
    return datetime.now(tz=timezone.utc)


def EVENT_ID_GENERATOR() -> str:
    return str(uuid1())


def SOURCE_ID_GENERATOR() -> str:
    return str(uuid1())


class EventBus:
    """Stamps, stores and forwards events in publication order.

    Subscribers never receive the events they published themselves.
    """

    def __init__(
        self,
        event_id_generator: IdGenerator = EVENT_ID_GENERATOR,
        clock: DatetimeGenerator = CLOCK,
    ) -> None:
        self.history: list[Event] = []
        self.subscriptions: list[Subscription] = []
        self._by_id: dict[EventId, Event] = {}
        self._event_id_generator = event_id_generator
        self._clock = clock

    def __len__(self) -> int:
        return len(self.history)

    def publish(self, event: Event) -> EventId:
        stamped = replace(event, id=str(self._event_id_generator()), time=self._clock())
        self.history.append(stamped)
        self._by_id[stamped.id] = stamped
        for subscription in self.subscriptions:
            if subscription.wants(stamped):
                subscription.func(stamped)
        return stamped.id

    def get_with_id(self, event_id: EventId) -> Event | None:
        return self._by_id.get(event_id, None)

    def get_from_source(self, source: EventSource) -> list[Event]:
        return [item for item in self.history if item.source == source]

    def get_with_name(self, name: EventName) -> list[Event]:
        return [item for item in self.history if item.name == name]

    def subscribe(
        self,
        source: EventSource,
        func: EventCallback,
        names: Iterable[EventName] | None = None,
    ) -> None:
        selected = frozenset(names) if names is not None else None
        self.subscriptions.append(Subscription(source, func, selected))


@dataclass
class EventPublisher:
    source_id: EventSource
    event_bus: EventBus = field(repr=False)

    def publish(
        self,
        name: EventName,
        subject: Subject | None = None,
        payload: Any | None = None,
    ) -> EventId:
        return self.event_bus.publish(
            Event(name=name, source=self.source_id, subject=subject, payload=payload)
        )
