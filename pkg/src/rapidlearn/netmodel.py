"""Core vocabulary: nodes, links, packets, topology, and inter-node messages."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union


class NodeKind(Enum):
    HOST = "host"
    SWITCH = "switch"
    MONITOR = "monitor"
    CONTROLLER = "controller"


@dataclass(frozen=True, order=True)
class NodeId:
    id: int
    kind: NodeKind = field(compare=False)


# Opaque endpoint address; one per host.  Used both as the forwarding-table
# match key and as the flow key for monitoring.
EndpointAddr = int
PortId = int

LEGIT = "legit"
ATTACK = "attack"


class TopologyError(ValueError):
    pass


class DuplicatePort(TopologyError):
    pass


class NoSuchLink(TopologyError):
    pass


class NoRoute(TopologyError):
    pass


@dataclass(frozen=True)
class Link:
    a: NodeId
    b: NodeId
    port_at_a: PortId
    port_at_b: PortId
    latency: float  # seconds, symmetric

    def endpoint_port(self, node: NodeId) -> PortId:
        if node == self.a:
            return self.port_at_a
        if node == self.b:
            return self.port_at_b
        raise NoSuchLink(f"{node} is not an endpoint of this link")

    def other(self, node: NodeId) -> NodeId:
        if node == self.a:
            return self.b
        if node == self.b:
            return self.a
        raise NoSuchLink(f"{node} is not an endpoint of this link")


@dataclass(frozen=True)
class PacketView:
    """Label-free projection of a Packet.

    This is the only packet shape the switch/monitor/controller logic ever
    sees; ground-truth labels stay on the simulator side by construction.
    """
    src: EndpointAddr
    dst: EndpointAddr
    size_bytes: int
    created_at: float


@dataclass(frozen=True)
class Packet:
    src: EndpointAddr
    dst: EndpointAddr
    size_bytes: int
    created_at: float
    label: Optional[str] = None  # simulator-only ground truth, never in view()

    def __post_init__(self):
        if self.size_bytes < 1:
            raise ValueError("size_bytes must be >= 1")
        if self.label not in (None, LEGIT, ATTACK):
            raise ValueError(f"unknown label {self.label!r}")

    def view(self) -> PacketView:
        return PacketView(self.src, self.dst, self.size_bytes, self.created_at)


# ---------------------------------------------------------------------------
# Messages.  Each variant corresponds to one tuple of the declarative rule
# set; the mapping is tabulated in docs/protocol-rules.md.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PacketMsg:
    packet: Packet
    from_node: NodeId


@dataclass(frozen=True)
class OfPacket:
    switch: NodeId
    in_port: PortId
    src: EndpointAddr
    dst: EndpointAddr


@dataclass(frozen=True)
class FlowMod:
    dst_addr: EndpointAddr
    out_port: PortId


@dataclass(frozen=True)
class Broadcast:
    in_port: PortId
    src: EndpointAddr
    dst: EndpointAddr


@dataclass(frozen=True)
class MonPacket:
    controller: NodeId
    switch: NodeId
    src: EndpointAddr
    dst: EndpointAddr
    size_bytes: int


@dataclass(frozen=True)
class BeliefMsg:
    flow_src: EndpointAddr
    flow_dst: EndpointAddr
    score: float
    window_index: int
    origin_monitor: NodeId


@dataclass(frozen=True)
class DdosYes:
    switch: NodeId
    src: EndpointAddr
    dst: EndpointAddr
    monitor: NodeId


@dataclass(frozen=True)
class Block:
    src: EndpointAddr
    dst: EndpointAddr


Message = Union[PacketMsg, OfPacket, FlowMod, Broadcast, MonPacket,
                BeliefMsg, DdosYes, Block]

MESSAGE_KINDS = {
    "PacketMsg": PacketMsg, "OfPacket": OfPacket, "FlowMod": FlowMod,
    "Broadcast": Broadcast, "MonPacket": MonPacket, "BeliefMsg": BeliefMsg,
    "DdosYes": DdosYes, "Block": Block,
}

# Control-plane kinds: subject to optional duplicate injection and required
# to be idempotent at the receiver.
CONTROL_KINDS = (OfPacket, FlowMod, Broadcast, BeliefMsg, DdosYes, Block)


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------

@dataclass
class TopologySpec:
    """Declarative topology description (the [topology] scenario section).

    Node names are strings; ports are assigned per node in link declaration
    order (0, 1, 2, ...).
    """
    hosts: list[str]
    switches: list[str]
    monitors: list[str]
    controllers: list[str]
    links: list[tuple[str, str, float]]          # (a, b, latency)
    ofconn: dict[str, str]                       # switch -> controller
    monconn: dict[str, str]                      # switch -> monitor
    peers: dict[str, list[str]] = field(default_factory=dict)
    ofconn_latency: float = 0.0
    monconn_latency: float = 0.0
    peer_latency: float = 0.0


@dataclass
class Topology:
    nodes: list[NodeId]
    links: list[Link]
    ofconn: dict[NodeId, NodeId]
    monconn: dict[NodeId, NodeId]
    peer_monitors: dict[NodeId, tuple[NodeId, ...]]
    names: dict[NodeId, str]
    by_name: dict[str, NodeId]
    addr_of: dict[NodeId, EndpointAddr]          # host node -> address
    host_of: dict[EndpointAddr, NodeId]
    ofconn_latency: float = 0.0
    monconn_latency: float = 0.0
    peer_latency: float = 0.0
    # derived: monitor -> its domain controller (via its switch's ofconn)
    mon_controller: dict[NodeId, NodeId] = field(default_factory=dict)
    _port_index: dict[tuple[NodeId, PortId], Link] = field(default_factory=dict)
    _pair_index: dict[tuple[NodeId, NodeId], Link] = field(default_factory=dict)

    def link_between(self, a: NodeId, b: NodeId) -> Link:
        try:
            return self._pair_index[(a, b)]
        except KeyError:
            raise NoSuchLink(f"no link between {self.names.get(a, a)} "
                             f"and {self.names.get(b, b)}") from None

    def link_at(self, node: NodeId, port: PortId) -> Link:
        try:
            return self._port_index[(node, port)]
        except KeyError:
            raise NoSuchLink(f"{self.names.get(node, node)} has no port {port}") from None

    def ports_of(self, node: NodeId) -> list[PortId]:
        return sorted(p for (n, p) in self._port_index if n == node)

    def degree(self, node: NodeId) -> int:
        return len(self.ports_of(node))


def resolve_port(topology: Topology, node: NodeId, neighbor: NodeId) -> PortId:
    """Node-local port of the link between node and neighbor."""
    return topology.link_between(node, neighbor).endpoint_port(node)


def build_topology(spec: TopologySpec) -> Topology:
    all_names = spec.hosts + spec.switches + spec.monitors + spec.controllers
    if len(set(all_names)) != len(all_names):
        raise TopologyError("duplicate node name")

    by_name: dict[str, NodeId] = {}
    names: dict[NodeId, str] = {}
    next_id = 0
    for group, kind in ((spec.hosts, NodeKind.HOST), (spec.switches, NodeKind.SWITCH),
                        (spec.monitors, NodeKind.MONITOR), (spec.controllers, NodeKind.CONTROLLER)):
        for name in group:
            node = NodeId(next_id, kind)
            next_id += 1
            by_name[name] = node
            names[node] = name

    addr_of = {by_name[h]: i for i, h in enumerate(spec.hosts)}
    host_of = {a: n for n, a in addr_of.items()}

    next_port: dict[NodeId, int] = {}
    links: list[Link] = []
    port_index: dict[tuple[NodeId, PortId], Link] = {}
    pair_index: dict[tuple[NodeId, NodeId], Link] = {}
    for a_name, b_name, latency in spec.links:
        if a_name not in by_name or b_name not in by_name:
            raise TopologyError(f"link references unknown node: {a_name}-{b_name}")
        if latency < 0:
            raise TopologyError("link latency must be >= 0")
        a, b = by_name[a_name], by_name[b_name]
        if (a, b) in pair_index or (b, a) in pair_index:
            raise TopologyError(f"duplicate link {a_name}-{b_name}")
        pa = next_port.get(a, 0)
        pb = next_port.get(b, 0)
        next_port[a] = pa + 1
        next_port[b] = pb + 1
        link = Link(a, b, pa, pb, latency)
        if (a, pa) in port_index or (b, pb) in port_index:
            raise DuplicatePort(f"(node, port) reused on link {a_name}-{b_name}")
        links.append(link)
        port_index[(a, pa)] = link
        port_index[(b, pb)] = link
        pair_index[(a, b)] = link
        pair_index[(b, a)] = link

    ofconn: dict[NodeId, NodeId] = {}
    for sw_name in spec.switches:
        ctl_name = spec.ofconn.get(sw_name)
        if ctl_name is None:
            raise TopologyError(f"switch {sw_name} has no controller")
        if ctl_name not in spec.controllers:
            raise TopologyError(f"{sw_name}: {ctl_name} is not a controller")
        ofconn[by_name[sw_name]] = by_name[ctl_name]

    monconn: dict[NodeId, NodeId] = {}
    seen_monitors: set[str] = set()
    for sw_name, mon_name in spec.monconn.items():
        if sw_name not in spec.switches or mon_name not in spec.monitors:
            raise TopologyError(f"bad monitor attachment {sw_name}->{mon_name}")
        if mon_name in seen_monitors:
            raise TopologyError(f"monitor {mon_name} attached twice")
        seen_monitors.add(mon_name)
        monconn[by_name[sw_name]] = by_name[mon_name]

    peer_monitors: dict[NodeId, tuple[NodeId, ...]] = {}
    for mon_name, peer_names in spec.peers.items():
        if mon_name not in spec.monitors:
            raise TopologyError(f"{mon_name} is not a monitor")
        peers = []
        for p in peer_names:
            if p not in spec.monitors:
                raise TopologyError(f"peer {p} is not a monitor")
            peers.append(by_name[p])
        peer_monitors[by_name[mon_name]] = tuple(peers)

    mon_controller = {mon: ofconn[sw] for sw, mon in monconn.items()}

    topo = Topology(
        nodes=list(names), links=links, ofconn=ofconn, monconn=monconn,
        mon_controller=mon_controller,
        peer_monitors=peer_monitors, names=names, by_name=by_name,
        addr_of=addr_of, host_of=host_of,
        ofconn_latency=spec.ofconn_latency, monconn_latency=spec.monconn_latency,
        peer_latency=spec.peer_latency,
        _port_index=port_index, _pair_index=pair_index,
    )

    # monitor attachment latency must not exceed any switch-switch latency
    ss = [l.latency for l in links
          if l.a.kind == NodeKind.SWITCH and l.b.kind == NodeKind.SWITCH]
    if ss and topo.monconn and topo.monconn_latency > min(ss):
        raise TopologyError("monitor attachment latency exceeds a trunk latency")

    # hosts+switches must form a connected graph
    hs = [n for n in names if n.kind in (NodeKind.HOST, NodeKind.SWITCH)]
    if hs:
        adj: dict[NodeId, list[NodeId]] = {n: [] for n in hs}
        for l in links:
            if l.a in adj and l.b in adj:
                adj[l.a].append(l.b)
                adj[l.b].append(l.a)
        seen = {hs[0]}
        stack = [hs[0]]
        while stack:
            for m in adj[stack.pop()]:
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        if len(seen) != len(hs):
            missing = sorted(names[n] for n in hs if n not in seen)
            raise TopologyError(f"disconnected nodes: {missing}")

    return topo


# ---------------------------------------------------------------------------
# Message (de)serialization for the line-oriented event trace.
# ---------------------------------------------------------------------------

def _node_str(n: NodeId) -> str:
    return f"{n.kind.value}:{n.id}"


def _node_parse(s: str) -> NodeId:
    kind, _, ident = s.partition(":")
    return NodeId(int(ident), NodeKind(kind))


def message_to_fields(msg: Message) -> tuple[str, list[str]]:
    """(kind tag, ordered key=value fields) for one trace line."""
    if isinstance(msg, PacketMsg):
        p = msg.packet
        return "PacketMsg", [f"from={_node_str(msg.from_node)}", f"src={p.src}",
                             f"dst={p.dst}", f"size={p.size_bytes}",
                             f"created={p.created_at!r}",
                             f"label={p.label if p.label else '-'}"]
    if isinstance(msg, OfPacket):
        return "OfPacket", [f"switch={_node_str(msg.switch)}", f"in_port={msg.in_port}",
                            f"src={msg.src}", f"dst={msg.dst}"]
    if isinstance(msg, FlowMod):
        return "FlowMod", [f"dst_addr={msg.dst_addr}", f"out_port={msg.out_port}"]
    if isinstance(msg, Broadcast):
        return "Broadcast", [f"in_port={msg.in_port}", f"src={msg.src}", f"dst={msg.dst}"]
    if isinstance(msg, MonPacket):
        return "MonPacket", [f"controller={_node_str(msg.controller)}",
                             f"switch={_node_str(msg.switch)}", f"src={msg.src}",
                             f"dst={msg.dst}", f"size={msg.size_bytes}"]
    if isinstance(msg, BeliefMsg):
        return "BeliefMsg", [f"src={msg.flow_src}", f"dst={msg.flow_dst}",
                             f"score={msg.score!r}", f"window={msg.window_index}",
                             f"origin={_node_str(msg.origin_monitor)}"]
    if isinstance(msg, DdosYes):
        return "DdosYes", [f"switch={_node_str(msg.switch)}", f"src={msg.src}",
                           f"dst={msg.dst}", f"monitor={_node_str(msg.monitor)}"]
    if isinstance(msg, Block):
        return "Block", [f"src={msg.src}", f"dst={msg.dst}"]
    raise TypeError(f"not a Message: {msg!r}")


def message_from_fields(kind: str, fields: list[str]) -> Message:
    kv = dict(f.split("=", 1) for f in fields)
    if kind == "PacketMsg":
        label = None if kv["label"] == "-" else kv["label"]
        pkt = Packet(int(kv["src"]), int(kv["dst"]), int(kv["size"]),
                     float(kv["created"]), label)
        return PacketMsg(pkt, _node_parse(kv["from"]))
    if kind == "OfPacket":
        return OfPacket(_node_parse(kv["switch"]), int(kv["in_port"]),
                        int(kv["src"]), int(kv["dst"]))
    if kind == "FlowMod":
        return FlowMod(int(kv["dst_addr"]), int(kv["out_port"]))
    if kind == "Broadcast":
        return Broadcast(int(kv["in_port"]), int(kv["src"]), int(kv["dst"]))
    if kind == "MonPacket":
        return MonPacket(_node_parse(kv["controller"]), _node_parse(kv["switch"]),
                         int(kv["src"]), int(kv["dst"]), int(kv["size"]))
    if kind == "BeliefMsg":
        return BeliefMsg(int(kv["src"]), int(kv["dst"]), float(kv["score"]),
                         int(kv["window"]), _node_parse(kv["origin"]))
    if kind == "DdosYes":
        return DdosYes(_node_parse(kv["switch"]), int(kv["src"]), int(kv["dst"]),
                       _node_parse(kv["monitor"]))
    if kind == "Block":
        return Block(int(kv["src"]), int(kv["dst"]))
    raise ValueError(f"unknown message kind {kind!r}")
