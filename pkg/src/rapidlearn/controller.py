"""Per-domain controller: reverse-path learning, broadcast orders, and
quorum voting over monitor attack reports (rc1-rc3 plus the global-decision
phase)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .netmodel import (Block, Broadcast, DdosYes, EndpointAddr, FlowMod,
                       Message, NodeId, PortId)


class UnknownSwitch(ValueError):
    pass


class ForeignMonitor(ValueError):
    pass


BLOCK_SCOPES = ("reporting_switches", "all_switches")


@dataclass
class ControllerConfig:
    quorum: Optional[int] = None      # None -> ceil(M/2) over domain monitors
    vote_window: float = 10.0         # seconds a vote stays live
    block_scope: str = "all_switches"

    def __post_init__(self):
        if self.block_scope not in BLOCK_SCOPES:
            raise ValueError(f"block_scope must be one of {BLOCK_SCOPES}")
        if self.quorum is not None and self.quorum < 1:
            raise ValueError("quorum must be >= 1")


@dataclass(frozen=True)
class BlockDecision:
    src: EndpointAddr
    dst: EndpointAddr
    time: float
    voters: tuple[NodeId, ...]
    targets: tuple[NodeId, ...]


@dataclass
class VoteLedger:
    # (src, dst) -> {monitor: (first report time, reporting switch)}
    votes: dict[tuple[EndpointAddr, EndpointAddr],
                dict[NodeId, tuple[float, NodeId]]] = field(default_factory=dict)
    decided: set[tuple[EndpointAddr, EndpointAddr]] = field(default_factory=set)


class Controller:
    """One instance per administrative domain."""

    def __init__(self, node: NodeId, switches: list[NodeId], monitors: list[NodeId],
                 config: ControllerConfig):
        self.node = node
        self.switches = list(switches)
        self.monitors = set(monitors)
        self.config = config
        self.ledger = VoteLedger()
        if config.quorum is not None:
            self.quorum = config.quorum
        else:
            self.quorum = max(1, math.ceil(len(self.monitors) / 2))
        if self.monitors and self.quorum > len(self.monitors):
            raise ValueError("quorum exceeds number of domain monitors")

    def handle_of_packet(self, switch: NodeId, in_port: PortId,
                         src: EndpointAddr, dst: EndpointAddr) -> list[tuple[NodeId, Message]]:
        """rc1 + rc2: learn the source location, then order a broadcast."""
        if switch not in self.switches:
            raise UnknownSwitch(f"{switch} is not in this controller's domain")
        return [(switch, FlowMod(dst_addr=src, out_port=in_port)),
                (switch, Broadcast(in_port=in_port, src=src, dst=dst))]

    def expire_votes(self, now: float) -> int:
        cutoff = now - self.config.vote_window
        removed = 0
        for flow in list(self.ledger.votes):
            live = {m: rec for m, rec in self.ledger.votes[flow].items()
                    if rec[0] >= cutoff}
            removed += len(self.ledger.votes[flow]) - len(live)
            if live:
                self.ledger.votes[flow] = live
            else:
                del self.ledger.votes[flow]
        return removed

    def handle_ddos_report(self, report: DdosYes, now: float) -> Optional[BlockDecision]:
        """rc3 + majority vote: tally distinct-monitor reports, block on quorum."""
        if report.monitor not in self.monitors:
            raise ForeignMonitor(f"{report.monitor} is not a domain monitor")
        self.expire_votes(now)
        flow = (report.src, report.dst)
        if flow in self.ledger.decided:
            return None
        voters = self.ledger.votes.setdefault(flow, {})
        voters.setdefault(report.monitor, (now, report.switch))
        if len(voters) < self.quorum:
            return None
        self.ledger.decided.add(flow)
        if self.config.block_scope == "all_switches":
            targets = tuple(self.switches)
        else:
            targets = tuple(sorted({rec[1] for rec in voters.values()}))
        return BlockDecision(src=report.src, dst=report.dst, time=now,
                             voters=tuple(sorted(voters)), targets=targets)
