"""Workload generation and trace handling: synthetic legit/attack flows,
CSV packet traces, and conversion of labeled traces into training windows."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .netmodel import ATTACK, LEGIT
from .monitor import FlowKey, WindowStats, features_of
from .svc import Dataset


class InvalidSpec(ValueError):
    pass


class MalformedRow(ValueError):
    pass


class UnsortedTrace(ValueError):
    pass


class UnknownLabel(ValueError):
    pass


class MissingLabel(ValueError):
    pass


@dataclass(frozen=True)
class SizeDist:
    kind: str            # "fixed" or "uniform"
    lo: int
    hi: int = 0

    @classmethod
    def fixed(cls, size: int) -> "SizeDist":
        return cls("fixed", size)

    @classmethod
    def uniform(cls, lo: int, hi: int) -> "SizeDist":
        return cls("uniform", lo, hi)

    def draw(self, rng: random.Random) -> int:
        if self.kind == "fixed":
            return self.lo
        return rng.randint(self.lo, self.hi)


@dataclass(frozen=True)
class FlowSpec:
    src: str
    dst: str
    kind: str                       # "legit" or "attack"
    phases: tuple[tuple[float, float, float], ...]  # (start, stop, rate)
    size_dist: SizeDist = SizeDist.fixed(100)
    arrival: str = "uniform"        # "uniform" or "poisson"

    def __post_init__(self):
        if self.kind not in (LEGIT, ATTACK):
            raise InvalidSpec(f"flow kind {self.kind!r}")
        if self.arrival not in ("uniform", "poisson"):
            raise InvalidSpec(f"arrival {self.arrival!r}")
        if not self.phases:
            raise InvalidSpec("flow has no phases")
        for start, stop, rate in self.phases:
            if start >= stop:
                raise InvalidSpec(f"phase start {start} >= stop {stop}")
            if rate <= 0:
                raise InvalidSpec(f"phase rate {rate} <= 0")


@dataclass
class TrafficSpec:
    flows: list[FlowSpec] = field(default_factory=list)


@dataclass(frozen=True)
class TraceRow:
    timestamp: float
    src: str
    dst: str
    size_bytes: int
    label: Optional[str] = None


def generate_packets(spec: TrafficSpec, seed: int) -> list[TraceRow]:
    """Synthetic arrivals, deterministic per seed, sorted by timestamp.

    Uniform arrivals tick at start + k/rate; Poisson arrivals draw
    exponential gaps.  Each flow consumes its own derived RNG stream so the
    output is invariant to flow-list reordering of unrelated flows.
    """
    rows: list[TraceRow] = []
    for flow_idx, flow in enumerate(spec.flows):
        rng = random.Random(f"{seed}:{flow_idx}")
        for start, stop, rate in flow.phases:
            if flow.arrival == "uniform":
                n = int((stop - start) * rate + 1e-9)
                times = [start + k / rate for k in range(n)]
                times = [t for t in times if t < stop]
            else:
                times = []
                t = start + rng.expovariate(rate)
                while t < stop:
                    times.append(t)
                    t += rng.expovariate(rate)
            for t in times:
                rows.append(TraceRow(t, flow.src, flow.dst,
                                     flow.size_dist.draw(rng), flow.kind))
    rows.sort(key=lambda r: (r.timestamp, r.src, r.dst))
    return rows


# ---------------------------------------------------------------------------
# CSV trace I/O: header `timestamp,src,dst,size_bytes[,label]`
# ---------------------------------------------------------------------------

TRACE_HEADER = "timestamp,src,dst,size_bytes"
TRACE_HEADER_LABELED = TRACE_HEADER + ",label"


def save_trace_csv(rows: list[TraceRow], path: str) -> None:
    labeled = any(r.label is not None for r in rows)
    with open(path, "w") as fh:
        fh.write((TRACE_HEADER_LABELED if labeled else TRACE_HEADER) + "\n")
        for r in rows:
            line = f"{r.timestamp!r},{r.src},{r.dst},{r.size_bytes}"
            if labeled:
                line += f",{r.label if r.label else ''}"
            fh.write(line + "\n")


def load_trace_csv(path: str) -> list[TraceRow]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MalformedRow(f"{path}:1: empty file, header expected")
    header = lines[0]
    if header == TRACE_HEADER_LABELED:
        labeled = True
    elif header == TRACE_HEADER:
        labeled = False
    else:
        raise MalformedRow(f"{path}:1: unexpected header {header!r}")
    rows: list[TraceRow] = []
    prev_t = float("-inf")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != (5 if labeled else 4):
            raise MalformedRow(f"{path}:{lineno}: expected "
                               f"{5 if labeled else 4} fields, got {len(parts)}")
        try:
            t = float(parts[0])
            size = int(parts[3])
        except ValueError as exc:
            raise MalformedRow(f"{path}:{lineno}: {exc}") from exc
        label = None
        if labeled:
            label = parts[4] or None
            if label not in (None, LEGIT, ATTACK):
                raise UnknownLabel(f"{path}:{lineno}: label {label!r}")
        if t < prev_t:
            raise UnsortedTrace(f"{path}:{lineno}: timestamp {t} after {prev_t}")
        prev_t = t
        rows.append(TraceRow(t, parts[1], parts[2], size, label))
    return rows


# ---------------------------------------------------------------------------
# Trace -> labeled training windows.
# ---------------------------------------------------------------------------

def windowize(rows: list[TraceRow], window_len: float = 1.0) -> Dataset:
    """Group by directed flow, apply the monitor's exact windowing, and
    label each window attack iff any constituent packet is attack-labeled.
    Trailing partial windows are flushed."""
    open_windows: dict[tuple[str, str], WindowStats] = {}
    anchors: dict[tuple[str, str], float] = {}
    window_attack: dict[tuple[str, str], bool] = {}
    feats: list[np.ndarray] = []
    labels: list[int] = []

    def close(flow, stats):
        fv = features_of(stats, window_len)
        feats.append(fv.as_array())
        labels.append(1 if window_attack[flow] else -1)

    for r in rows:
        if r.label is None:
            raise MissingLabel(f"unlabeled row at t={r.timestamp}")
        flow = (r.src, r.dst)
        if flow not in anchors:
            anchors[flow] = r.timestamp
        index = int((r.timestamp - anchors[flow]) // window_len)
        stats = open_windows.get(flow)
        if stats is not None and index > stats.window_index:
            close(flow, stats)
            stats = None
        if stats is None:
            stats = WindowStats(flow=flow, window_index=index,
                                start=anchors[flow] + index * window_len)
            open_windows[flow] = stats
            window_attack[flow] = False
        stats.add(r.timestamp, r.size_bytes)
        window_attack[flow] = window_attack[flow] or (r.label == ATTACK)
    for flow, stats in open_windows.items():
        close(flow, stats)
    if not feats:
        return Dataset(np.zeros((0, 4)), np.zeros(0))
    return Dataset(np.array(feats), np.array(labels, dtype=float))
