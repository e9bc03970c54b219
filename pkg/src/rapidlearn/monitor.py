"""Top-of-rack monitor: per-flow tumbling windows over the mirrored packet
stream, feature extraction, SVC classification, belief gossip, controller
reporting, and an optional token-bucket rate limiter."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .netmodel import (BeliefMsg, DdosYes, EndpointAddr, Message, MonPacket,
                       NodeId)
from . import svc


class ModelMissing(RuntimeError):
    pass


class UnknownPeer(ValueError):
    pass


FlowKey = tuple[EndpointAddr, EndpointAddr]  # directed (src, dst)


@dataclass
class WindowStats:
    flow: FlowKey
    window_index: int
    start: float
    pkt_count: int = 0
    byte_sum: int = 0
    sum_iat: float = 0.0
    last_arrival: float = 0.0

    def add(self, t: float, size_bytes: int) -> None:
        if self.pkt_count > 0:
            self.sum_iat += t - self.last_arrival
        self.pkt_count += 1
        self.byte_sum += size_bytes
        self.last_arrival = t


@dataclass(frozen=True)
class FeatureVector:
    pps: float
    mean_iat: float
    mean_size: float
    bps: float

    def as_array(self) -> np.ndarray:
        return np.array([self.pps, self.mean_iat, self.mean_size, self.bps])


FEATURE_NAMES = ("pps", "mean_iat", "mean_size", "bps")


def features_of(stats: WindowStats, window_len: float) -> FeatureVector:
    """Per-window traffic statistics.

    mean_iat of a single-packet window is defined as the window length
    (no gap is observable); documented sentinel, keeps the value finite.
    """
    if stats.pkt_count < 1:
        raise ValueError("window must contain at least one packet")
    if stats.pkt_count == 1:
        mean_iat = window_len
    else:
        mean_iat = stats.sum_iat / (stats.pkt_count - 1)
    return FeatureVector(
        pps=stats.pkt_count / window_len,
        mean_iat=mean_iat,
        mean_size=stats.byte_sum / stats.pkt_count,
        bps=stats.byte_sum / window_len,
    )


@dataclass
class MonitorConfig:
    window_len: float = 1.0
    ewma_alpha: float = 0.5
    report_threshold: float = 0.5   # local belief needed to report alone
    assist_threshold: float = 0.25  # floor for peer-assisted reporting
    peer_confirmations: int = 1
    mode: str = "direct"            # "direct" or "gossip"
    vote_window: float = 10.0
    rate_limit: Optional[float] = None  # packets/second, None disables

    def __post_init__(self):
        if self.mode not in ("direct", "gossip"):
            raise ValueError("mode must be 'direct' or 'gossip'")
        if not (0.0 < self.ewma_alpha <= 1.0):
            raise ValueError("ewma_alpha must be in (0, 1]")
        if self.assist_threshold > self.report_threshold:
            raise ValueError("assist_threshold must not exceed report_threshold")


class TokenBucket:
    """Capacity = refill rate, so sustained throughput is exactly the rate
    with at most one bucket's worth of initial burst."""

    def __init__(self, rate: float, start: float = 0.0):
        self.rate = rate
        self.capacity = rate
        self.tokens = rate
        self.last = start

    def admit(self, now: float) -> bool:
        self.tokens = min(self.capacity, self.tokens + (now - self.last) * self.rate)
        self.last = now
        if self.tokens >= 1.0:
            self.tokens -= 1.0
            return True
        return False


@dataclass
class BeliefState:
    local_score: float = 0.0
    peer_flags: dict[NodeId, tuple[float, float]] = field(default_factory=dict)  # peer -> (score, time)
    reported_at: Optional[float] = None


class Monitor:
    def __init__(self, node: NodeId, switch: NodeId, controller: NodeId,
                 peers: list[NodeId], config: MonitorConfig,
                 model: Optional[svc.SvcModel]):
        self.node = node
        self.switch = switch
        self.controller = controller
        self.peers = list(peers)
        self.config = config
        self.model = model
        self.windows: dict[FlowKey, WindowStats] = {}
        self.flow_start: dict[FlowKey, float] = {}
        self.beliefs: dict[FlowKey, BeliefState] = {}
        self.limiters: dict[FlowKey, TokenBucket] = {}
        self.window_log: list[tuple] = []  # (time, flow, FeatureVector, flag, score)
        self.reports_sent: int = 0

    # -- stream slicing ----------------------------------------------------

    def ingest(self, mp: MonPacket, now: float) -> list[tuple[NodeId, Message]]:
        """Place one mirrored packet into its flow window; a packet landing
        past the open window closes it first (emitting any messages) and
        opens the window that contains the packet.  Empty intermediate
        windows are never materialized."""
        flow = (mp.src, mp.dst)
        w = self.config.window_len
        if flow not in self.flow_start:
            self.flow_start[flow] = now
        anchor = self.flow_start[flow]
        index = int((now - anchor) // w)
        open_window = self.windows.get(flow)
        emitted: list[tuple[NodeId, Message]] = []
        if open_window is not None and index > open_window.window_index:
            emitted = self.close_window(open_window, now)
            open_window = None
        if open_window is None:
            open_window = WindowStats(flow=flow, window_index=index,
                                      start=anchor + index * w)
            self.windows[flow] = open_window
        open_window.add(now, mp.size_bytes)
        return emitted

    def close_window(self, stats: WindowStats, now: float) -> list[tuple[NodeId, Message]]:
        """Classify a finished window and fold the verdict into the flow's
        belief; gossip the flag to peers when in gossip mode."""
        if self.model is None:
            raise ModelMissing("no classifier model loaded")
        fv = features_of(stats, self.config.window_len)
        flag = svc.predict(self.model, fv.as_array()) == 1
        belief = self.beliefs.setdefault(stats.flow, BeliefState())
        a = self.config.ewma_alpha
        belief.local_score = a * (1.0 if flag else 0.0) + (1.0 - a) * belief.local_score
        self.window_log.append((now, stats.flow, fv, flag, belief.local_score))
        if self.windows.get(stats.flow) is stats:
            del self.windows[stats.flow]
        out: list[tuple[NodeId, Message]] = []
        if flag and self.config.mode == "gossip":
            for peer in self.peers:
                out.append((peer, BeliefMsg(stats.flow[0], stats.flow[1],
                                            belief.local_score,
                                            stats.window_index, self.node)))
        report = self.local_decision(stats.flow, now)
        if report is not None:
            out.append((self.controller, report))
        return out

    # -- decisions ----------------------------------------------------------

    def _live_peer_flags(self, belief: BeliefState, now: float) -> int:
        cutoff = now - self.config.vote_window
        return sum(1 for (_, t) in belief.peer_flags.values() if t >= cutoff)

    def local_decision(self, flow: FlowKey, now: float) -> Optional[DdosYes]:
        belief = self.beliefs.get(flow)
        if belief is None:
            return None
        cfg = self.config
        suspicious = belief.local_score >= cfg.report_threshold
        if not suspicious and cfg.mode == "gossip":
            suspicious = (belief.local_score >= cfg.assist_threshold
                          and self._live_peer_flags(belief, now) >= cfg.peer_confirmations)
        if cfg.rate_limit is not None and belief.local_score >= cfg.assist_threshold:
            self.limiters.setdefault(flow, TokenBucket(cfg.rate_limit, now))
        if not suspicious:
            return None
        if belief.reported_at is not None and now - belief.reported_at < cfg.vote_window:
            return None
        belief.reported_at = now
        self.reports_sent += 1
        return DdosYes(switch=self.switch, src=flow[0], dst=flow[1], monitor=self.node)

    def receive_belief(self, b: BeliefMsg, now: float) -> Optional[DdosYes]:
        if b.origin_monitor not in self.peers:
            raise UnknownPeer(f"{b.origin_monitor} is not a peer of {self.node}")
        flow = (b.flow_src, b.flow_dst)
        belief = self.beliefs.setdefault(flow, BeliefState())
        belief.peer_flags[b.origin_monitor] = (b.score, now)
        return self.local_decision(flow, now)

    # -- rate limiting --------------------------------------------------

    def rate_limit_admit(self, flow: FlowKey, now: float) -> bool:
        """True unless a limiter is engaged for the flow and out of tokens."""
        limiter = self.limiters.get(flow)
        if limiter is None:
            return True
        return limiter.admit(now)

    def release_limiter(self, flow: FlowKey) -> None:
        self.limiters.pop(flow, None)
