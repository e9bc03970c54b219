"""Engine-facing node behaviors: hosts, switches, monitors, controllers.

Each node owns its module-level state machine and translates delivered
messages into state transitions plus outgoing sends.  Decision logic only
ever sees label-free packet views; ground-truth labels surface again only
in the host delivery log used for metrics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import switch as sw
from .controller import BlockDecision, Controller
from .engine import Engine, Event
from .monitor import Monitor
from .netmodel import (BeliefMsg, Block, Broadcast, DdosYes, FlowMod,
                       MonPacket, NodeId, OfPacket, Packet, PacketMsg,
                       Topology, resolve_port)


@dataclass
class Delivery:
    time: float
    src: int
    dst: int
    label: Optional[str]


class HostNode:
    def __init__(self, node: NodeId, addr: int, attached_switch: NodeId):
        self.node = node
        self.addr = addr
        self.switch = attached_switch
        self.deliveries: list[Delivery] = []

    def handle(self, engine: Engine, event: Event) -> None:
        msg = event.message
        if not isinstance(msg, PacketMsg):
            return
        if msg.from_node == self.node:
            # rh1: scheduled origination, hand the packet to our switch
            engine.send(self.node, self.switch, PacketMsg(msg.packet, self.node))
        elif msg.packet.dst == self.addr:
            # rh2: deliveries addressed to us; flood copies for others are dropped
            self.deliveries.append(Delivery(engine.now, msg.packet.src,
                                            msg.packet.dst, msg.packet.label))


class SwitchNode:
    def __init__(self, node: NodeId, topology: Topology,
                 controller: NodeId, monitor: Optional[NodeId] = None,
                 colocated_monitor: Optional[Monitor] = None):
        ports = topology.ports_of(node)
        host_ports = {}
        for p in ports:
            nei = topology.link_at(node, p).other(node)
            if nei in topology.addr_of:
                host_ports[p] = topology.addr_of[nei]
        self.node = node
        self.state = sw.SwitchState(id=node, ports=ports, host_ports=host_ports)
        self.controller = controller
        self.monitor = monitor
        self.colocated_monitor = colocated_monitor
        # punted packets awaiting the controller's broadcast order
        self.pending: dict[tuple[int, int, int], list[Packet]] = {}
        self.block_applied_at: dict[tuple[int, int], float] = {}
        self.mirrored = 0
        self.dropped = 0

    def _forward(self, engine: Engine, packet: Packet, out_port: int) -> None:
        link = engine.topology.link_at(self.node, out_port)
        engine.send(self.node, link.other(self.node), PacketMsg(packet, self.node))

    def handle(self, engine: Engine, event: Event) -> None:
        msg = event.message
        if isinstance(msg, PacketMsg):
            self._handle_packet(engine, msg)
        elif isinstance(msg, FlowMod):
            sw.install_flow(self.state, msg.dst_addr, msg.out_port)
        elif isinstance(msg, Broadcast):
            self._handle_broadcast_order(engine, msg)
        elif isinstance(msg, Block):
            flow = (msg.src, msg.dst)
            sw.apply_block(self.state, msg.src, msg.dst)
            self.block_applied_at.setdefault(flow, engine.now)
            if self.colocated_monitor is not None:
                self.colocated_monitor.release_limiter(flow)

    def _handle_packet(self, engine: Engine, msg: PacketMsg) -> None:
        packet = msg.packet
        in_port = resolve_port(engine.topology, self.node, msg.from_node)
        action = sw.handle_packet(self.state, packet.view(), in_port)
        if self.monitor is not None:
            # rs8: every ingress packet is mirrored, drops included
            engine.send(self.node, self.monitor,
                        MonPacket(self.controller, self.node, packet.src,
                                  packet.dst, packet.size_bytes))
            self.mirrored += 1
        if isinstance(action, sw.Drop):
            self.dropped += 1
            return
        if self.colocated_monitor is not None:
            flow = (packet.src, packet.dst)
            if not self.colocated_monitor.rate_limit_admit(flow, engine.now):
                self.dropped += 1
                return
        if isinstance(action, sw.Forward):
            self._forward(engine, packet, action.out_port)
        elif isinstance(action, sw.PuntToController):
            key = (packet.src, packet.dst, in_port)
            self.pending.setdefault(key, []).append(packet)
            engine.send(self.node, self.controller,
                        OfPacket(self.node, in_port, packet.src, packet.dst))

    def _handle_broadcast_order(self, engine: Engine, msg: Broadcast) -> None:
        key = (msg.src, msg.dst, msg.in_port)
        packets = self.pending.pop(key, [])
        if (msg.src, msg.dst) in self.state.blocked:
            self.dropped += len(packets)
            return
        for packet in packets:  # duplicate orders find an empty buffer: no-op
            for out_port, _ in sw.handle_broadcast(self.state, msg.in_port,
                                                   packet.view()):
                self._forward(engine, packet, out_port)


class MonitorNode:
    def __init__(self, monitor: Monitor):
        self.monitor = monitor
        self.node = monitor.node

    def handle(self, engine: Engine, event: Event) -> None:
        msg = event.message
        if isinstance(msg, MonPacket):
            for target, out in self.monitor.ingest(msg, engine.now):
                engine.send(self.node, target, out)
        elif isinstance(msg, BeliefMsg):
            report = self.monitor.receive_belief(msg, engine.now)
            if report is not None:
                engine.send(self.node, self.monitor.controller, report)


class ControllerNode:
    def __init__(self, controller: Controller):
        self.controller = controller
        self.node = controller.node
        self.decisions: list[BlockDecision] = []

    def handle(self, engine: Engine, event: Event) -> None:
        msg = event.message
        if isinstance(msg, OfPacket):
            for target, out in self.controller.handle_of_packet(
                    msg.switch, msg.in_port, msg.src, msg.dst):
                engine.send(self.node, target, out)
        elif isinstance(msg, DdosYes):
            decision = self.controller.handle_ddos_report(msg, engine.now)
            if decision is not None:
                self.decisions.append(decision)
                for target in decision.targets:
                    engine.send(self.node, target,
                                Block(decision.src, decision.dst))
