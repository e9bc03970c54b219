"""MAC-learning switch state machine (rules rs1-rs9).

Priority matching is implemented as a first-match scan over the table in
descending priority order, which is semantically identical to the
countdown recursion of rs1/rs2 (tested against a literal transcription of
that recursion) but O(table size) without re-deriving intermediate tuples.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .netmodel import EndpointAddr, NodeId, PacketView, PortId


class InvalidPort(ValueError):
    pass


@dataclass(frozen=True)
class FlowEntry:
    dst: EndpointAddr
    out_port: PortId
    priority: int


@dataclass(frozen=True)
class Forward:
    out_port: PortId


@dataclass(frozen=True)
class PuntToController:
    pass


@dataclass(frozen=True)
class BroadcastAction:
    except_port: PortId


@dataclass(frozen=True)
class Drop:
    reason: str


SwitchAction = Union[Forward, PuntToController, BroadcastAction, Drop]


@dataclass
class SwitchState:
    id: NodeId
    ports: list[PortId]
    # port -> directly attached host address; used for the trunk-protection
    # rule in apply_block (never block an inter-switch port)
    host_ports: dict[PortId, EndpointAddr] = field(default_factory=dict)
    flow_table: list[FlowEntry] = field(default_factory=list)  # descending priority
    max_priority: int = 0
    blocked: set[tuple[EndpointAddr, EndpointAddr]] = field(default_factory=set)
    blocked_ports: set[PortId] = field(default_factory=set)

    def lookup(self, dst: EndpointAddr) -> Optional[FlowEntry]:
        for entry in self.flow_table:  # descending priority, first match wins
            if entry.dst == dst:
                return entry
        return None


def handle_packet(state: SwitchState, packet: PacketView, in_port: PortId) -> SwitchAction:
    """Classify one ingress packet into exactly one forwarding action.

    Blocked flows and blocked ingress ports drop; otherwise the highest
    priority entry for the destination forwards (rs2/rs3) and a full table
    miss punts to the controller (rs4).  Mirroring to the monitor (rs8) is a
    node-level side effect and applies to every invocation, drops included.
    """
    if in_port not in state.ports:
        raise InvalidPort(f"port {in_port} not on switch {state.id}")
    if (packet.src, packet.dst) in state.blocked or in_port in state.blocked_ports:
        return Drop("blocked")
    entry = state.lookup(packet.dst)
    if entry is not None:
        return Forward(entry.out_port)
    return PuntToController()


def install_flow(state: SwitchState, dst: EndpointAddr, out_port: PortId) -> None:
    """Insert a flow entry at max_priority+1 (rs5/rs6).

    Re-installing the entry that is already the best match for dst is a
    no-op, so retried/duplicated FlowMods cannot grow the table.
    """
    if out_port not in state.ports:
        raise InvalidPort(f"port {out_port} not on switch {state.id}")
    current = state.lookup(dst)
    if current is not None and current.out_port == out_port:
        return
    state.max_priority += 1
    state.flow_table.insert(0, FlowEntry(dst, out_port, state.max_priority))


def handle_broadcast(state: SwitchState, in_port: PortId,
                     packet: PacketView) -> list[tuple[PortId, PacketView]]:
    """One copy per port except the ingress port and blocked ports (rs7)."""
    if in_port not in state.ports:
        raise InvalidPort(f"port {in_port} not on switch {state.id}")
    return [(p, packet) for p in state.ports
            if p != in_port and p not in state.blocked_ports]


def apply_block(state: SwitchState, src: EndpointAddr, dst: EndpointAddr) -> None:
    """Enforce a controller block (rs9); idempotent.

    The learned ingress port for src (its reverse-path flow entry) is added
    to blocked_ports only when that port attaches src directly; trunks are
    never blocked so other hosts behind them keep connectivity.
    """
    state.blocked.add((src, dst))
    entry = state.lookup(src)
    if entry is not None and state.host_ports.get(entry.out_port) == src:
        state.blocked_ports.add(entry.out_port)
