"""Deterministic discrete-event core: clock, ordered queue, message delivery."""
from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .netmodel import (CONTROL_KINDS, Message, NodeId, NodeKind, NoRoute,
                       Topology, _node_str, message_to_fields,
                       message_from_fields, _node_parse)


class NegativeDelay(ValueError):
    pass


class SimulationError(RuntimeError):
    def __init__(self, event, cause):
        super().__init__(f"handler failed for {event}: {cause}")
        self.event = event
        self.cause = cause


@dataclass(frozen=True)
class Event:
    fire_at: float
    seq: int        # scheduling-order tie-breaker; (fire_at, seq) totally ordered
    target: NodeId
    message: Message

    def sort_key(self):
        return (self.fire_at, self.seq)


Handler = Callable[["Engine", Event], None]


class Engine:
    """Single-threaded event loop over one topology.

    Handlers are registered per node and invoked in (fire_at, seq) order.
    All randomness lives in explicitly seeded generators owned by callers;
    the engine itself only draws from dup_rng when control-message
    duplication is enabled (fault-injection mode, default off).
    """

    def __init__(self, topology: Topology, dup_prob: float = 0.0,
                 dup_seed: int = 0):
        self.topology = topology
        self.now = 0.0
        self._seq = 0
        self._heap: list[tuple[float, int, Event]] = []
        self._cancelled: set[int] = set()
        self.handlers: dict[NodeId, Handler] = {}
        self.trace: list[Event] = []
        self.dup_prob = dup_prob
        self.dup_rng = random.Random(dup_seed)

    def register(self, node: NodeId, handler: Handler) -> None:
        self.handlers[node] = handler

    def schedule(self, delay: float, target: NodeId, message: Message) -> int:
        if delay < 0:
            raise NegativeDelay(f"delay {delay} < 0")
        ev = Event(self.now + delay, self._seq, target, message)
        self._seq += 1
        heapq.heappush(self._heap, (ev.fire_at, ev.seq, ev))
        return ev.seq

    def cancel(self, handle: int) -> None:
        self._cancelled.add(handle)

    def link_latency(self, frm: NodeId, to: NodeId) -> float:
        topo = self.topology
        pair = topo._pair_index.get((frm, to))
        if pair is not None:
            return pair.latency
        if topo.ofconn.get(frm) == to or topo.ofconn.get(to) == frm:
            return topo.ofconn_latency
        if topo.monconn.get(frm) == to or topo.monconn.get(to) == frm:
            return topo.monconn_latency
        if topo.mon_controller.get(frm) == to or topo.mon_controller.get(to) == frm:
            return topo.ofconn_latency
        if to in topo.peer_monitors.get(frm, ()):
            return topo.peer_latency
        raise NoRoute(f"no route {topo.names.get(frm, frm)} -> {topo.names.get(to, to)}")

    def send(self, frm: NodeId, to: NodeId, message: Message) -> None:
        """Reliable, order-preserving delivery after the connection latency."""
        latency = self.link_latency(frm, to)
        self.schedule(latency, to, message)
        if self.dup_prob > 0 and isinstance(message, CONTROL_KINDS):
            if self.dup_rng.random() < self.dup_prob:
                self.schedule(latency, to, message)

    def run_until(self, t_end: float) -> list[Event]:
        if t_end < self.now:
            raise ValueError(f"t_end {t_end} < now {self.now}")
        while self._heap and self._heap[0][0] <= t_end:
            _, _, ev = heapq.heappop(self._heap)
            if ev.seq in self._cancelled:
                self._cancelled.discard(ev.seq)
                continue
            self.now = ev.fire_at
            self.trace.append(ev)
            handler = self.handlers.get(ev.target)
            if handler is not None:
                try:
                    handler(self, ev)
                except Exception as exc:
                    raise SimulationError(ev, exc) from exc
        self.now = t_end
        return self.trace


# ---------------------------------------------------------------------------
# Trace serialization: one delivered event per line.
#   <fire_at!r> <seq> <target> <kind> <k=v> ...
# ---------------------------------------------------------------------------

def event_to_line(ev: Event) -> str:
    kind, fields = message_to_fields(ev.message)
    parts = [repr(ev.fire_at), str(ev.seq), _node_str(ev.target), kind, *fields]
    return " ".join(parts)


def event_from_line(line: str) -> Event:
    parts = line.split(" ")
    fire_at, seq, target, kind = float(parts[0]), int(parts[1]), parts[2], parts[3]
    return Event(fire_at, seq, _node_parse(target), message_from_fields(kind, parts[4:]))


def write_trace(events: list[Event], path: str) -> None:
    with open(path, "w") as fh:
        for ev in events:
            fh.write(event_to_line(ev) + "\n")


def read_trace(path: str) -> list[Event]:
    with open(path) as fh:
        return [event_from_line(line.rstrip("\n")) for line in fh if line.strip()]
