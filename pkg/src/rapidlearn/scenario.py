"""Scenario configuration (TOML), simulation assembly, and metrics."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from . import svc
from .controller import Controller, ControllerConfig
from .engine import Engine, Event
from .monitor import Monitor, MonitorConfig
from .netmodel import (ATTACK, LEGIT, NodeId, NodeKind, Packet, PacketMsg,
                       Topology, TopologySpec, build_topology)
from .nodes import ControllerNode, HostNode, MonitorNode, SwitchNode
from .traffic import (FlowSpec, SizeDist, TraceRow, TrafficSpec,
                      generate_packets)

METRICS_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Scenario validation failure; message carries the offending field path."""


@dataclass
class Latencies:
    host_link: float = 0.0
    switch_link: float = 0.001
    monitor_link: float = 0.0001
    controller_link: float = 0.002


@dataclass
class ScenarioConfig:
    topology: TopologySpec
    traffic: TrafficSpec
    monitor: MonitorConfig
    controller: ControllerConfig
    model_path: str
    seed: int = 0
    t_end: float = 30.0
    latencies: Latencies = field(default_factory=Latencies)
    dup_prob: float = 0.0


def _require(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigError(f"{path}.{key}: missing")
    return table[key]


def _parse_topology(t: dict, lat: Latencies) -> TopologySpec:
    hosts = _require(t, "hosts", "topology")
    switches = _require(t, "switches", "topology")
    monitors = t.get("monitors", [])
    controllers = _require(t, "controllers", "topology")
    kind_of = {}
    for group, kind in ((hosts, "host"), (switches, "switch"),
                        (monitors, "monitor"), (controllers, "controller")):
        for name in group:
            kind_of[name] = kind
    links = []
    for i, pair in enumerate(_require(t, "links", "topology")):
        if len(pair) != 2:
            raise ConfigError(f"topology.links[{i}]: expected [a, b]")
        a, b = pair
        ka, kb = kind_of.get(a), kind_of.get(b)
        if ka is None or kb is None:
            raise ConfigError(f"topology.links[{i}]: unknown node {a if ka is None else b!r}")
        kinds = {ka, kb}
        if kinds == {"host", "switch"}:
            latency = lat.host_link
        elif kinds == {"switch"}:
            latency = lat.switch_link
        else:
            raise ConfigError(f"topology.links[{i}]: links join host-switch or switch-switch only")
        links.append((a, b, latency))
    return TopologySpec(
        hosts=hosts, switches=switches, monitors=monitors, controllers=controllers,
        links=links, ofconn=dict(t.get("ofconn", {})), monconn=dict(t.get("monconn", {})),
        peers={k: list(v) for k, v in t.get("peers", {}).items()},
        ofconn_latency=lat.controller_link, monconn_latency=lat.monitor_link,
        peer_latency=lat.switch_link,
    )


def _parse_size(d, path: str) -> SizeDist:
    if isinstance(d, int):
        return SizeDist.fixed(d)
    dist = _require(d, "dist", path)
    if dist == "fixed":
        return SizeDist.fixed(_require(d, "bytes", path))
    if dist == "uniform":
        return SizeDist.uniform(_require(d, "lo", path), _require(d, "hi", path))
    raise ConfigError(f"{path}.dist: unknown distribution {dist!r}")


def _parse_flow(f: dict, path: str) -> FlowSpec:
    if "phases" in f:
        phases = tuple(tuple(p) for p in f["phases"])
    else:
        phases = ((_require(f, "start", path), _require(f, "stop", path),
                   _require(f, "rate", path)),)
    return FlowSpec(
        src=_require(f, "src", path), dst=_require(f, "dst", path),
        kind=f.get("kind", LEGIT), phases=phases,
        size_dist=_parse_size(f.get("size", 100), f"{path}.size"),
        arrival=f.get("arrival", "uniform"),
    )


def parse_traffic(t: dict) -> TrafficSpec:
    flows = [_parse_flow(f, f"traffic.flow[{i}]")
             for i, f in enumerate(t.get("flow", []))]
    return TrafficSpec(flows=flows)


def load_scenario(path: str) -> ScenarioConfig:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    sim = doc.get("sim", {})
    lat = Latencies(**sim.get("latencies", {}))
    if lat.monitor_link > lat.switch_link:
        raise ConfigError("sim.latencies.monitor_link: exceeds switch_link")
    topo_spec = _parse_topology(_require(doc, "topology", "scenario"), lat)
    traffic = parse_traffic(doc.get("traffic", {}))
    for i, f in enumerate(traffic.flows):
        for endpoint in (f.src, f.dst):
            if endpoint not in topo_spec.hosts:
                raise ConfigError(f"traffic.flow[{i}]: {endpoint!r} is not a host")
    mon_cfg = MonitorConfig(**doc.get("monitor", {}))
    ctl_table = dict(doc.get("controller", {}))
    ctl_cfg = ControllerConfig(**ctl_table)
    cfg = ScenarioConfig(
        topology=topo_spec, traffic=traffic, monitor=mon_cfg, controller=ctl_cfg,
        model_path=sim.get("model", ""), seed=int(sim.get("seed", 0)),
        t_end=float(sim.get("t_end", 30.0)), latencies=lat,
        dup_prob=float(sim.get("dup_prob", 0.0)),
    )
    _validate_quorum(cfg)
    return cfg


def _validate_quorum(cfg: ScenarioConfig) -> None:
    if cfg.controller.quorum is None:
        return
    per_ctl: dict[str, int] = {c: 0 for c in cfg.topology.controllers}
    for sw_name, mon_name in cfg.topology.monconn.items():
        ctl = cfg.topology.ofconn.get(sw_name)
        if ctl is not None:
            per_ctl[ctl] += 1
    for ctl, count in per_ctl.items():
        if count and cfg.controller.quorum > count:
            raise ConfigError(
                f"controller.quorum: {cfg.controller.quorum} exceeds the "
                f"{count} monitors in {ctl}'s domain")


# ---------------------------------------------------------------------------
# Simulation assembly and run
# ---------------------------------------------------------------------------

@dataclass
class Simulation:
    config: ScenarioConfig
    topology: Topology
    engine: Engine
    hosts: dict[NodeId, HostNode]
    switches: dict[NodeId, SwitchNode]
    monitors: dict[NodeId, MonitorNode]
    controllers: dict[NodeId, ControllerNode]
    rows: list[TraceRow]


def build_simulation(cfg: ScenarioConfig,
                     model: Optional[svc.SvcModel] = None) -> Simulation:
    topo = build_topology(cfg.topology)
    if model is None and cfg.model_path:
        model = svc.load_model(cfg.model_path)
    engine = Engine(topo, dup_prob=cfg.dup_prob, dup_seed=cfg.seed + 1)

    mon_cfg = cfg.monitor
    mon_cfg.vote_window = cfg.controller.vote_window

    # domain membership from ofconn
    ctl_switches: dict[NodeId, list[NodeId]] = {}
    for sw_node, ctl_node in topo.ofconn.items():
        ctl_switches.setdefault(ctl_node, []).append(sw_node)
    ctl_monitors: dict[NodeId, list[NodeId]] = {}
    for sw_node, mon_node in topo.monconn.items():
        ctl = topo.ofconn[sw_node]
        ctl_monitors.setdefault(ctl, []).append(mon_node)

    monitors: dict[NodeId, MonitorNode] = {}
    mon_by_switch: dict[NodeId, Monitor] = {}
    for sw_node, mon_node in sorted(topo.monconn.items()):
        mon = Monitor(node=mon_node, switch=sw_node, controller=topo.ofconn[sw_node],
                      peers=list(topo.peer_monitors.get(mon_node, ())),
                      config=mon_cfg, model=model)
        monitors[mon_node] = MonitorNode(mon)
        mon_by_switch[sw_node] = mon

    switches: dict[NodeId, SwitchNode] = {}
    for node in topo.nodes:
        if node.kind is NodeKind.SWITCH:
            switches[node] = SwitchNode(
                node, topo, controller=topo.ofconn[node],
                monitor=topo.monconn.get(node),
                colocated_monitor=mon_by_switch.get(node))

    controllers: dict[NodeId, ControllerNode] = {}
    for node in topo.nodes:
        if node.kind is NodeKind.CONTROLLER:
            ctl = Controller(node, switches=sorted(ctl_switches.get(node, [])),
                             monitors=sorted(ctl_monitors.get(node, [])),
                             config=cfg.controller)
            controllers[node] = ControllerNode(ctl)

    hosts: dict[NodeId, HostNode] = {}
    for node in topo.nodes:
        if node.kind is NodeKind.HOST:
            attached = [l.other(node) for l in topo.links if node in (l.a, l.b)]
            hosts[node] = HostNode(node, topo.addr_of[node], attached[0])

    for group in (hosts, switches, monitors, controllers):
        for node, behavior in group.items():
            engine.register(node, behavior.handle)

    # schedule packet originations (rh1 inputs)
    rows = generate_packets(cfg.traffic, cfg.seed)
    for row in rows:
        host = topo.by_name[row.src]
        pkt = Packet(src=topo.addr_of[host], dst=topo.addr_of[topo.by_name[row.dst]],
                     size_bytes=row.size_bytes, created_at=row.timestamp,
                     label=row.label)
        engine.schedule(row.timestamp, host, PacketMsg(pkt, host))
    return Simulation(config=cfg, topology=topo, engine=engine, hosts=hosts,
                      switches=switches, monitors=monitors,
                      controllers=controllers, rows=rows)


def run_simulation(sim: Simulation) -> list[Event]:
    return sim.engine.run_until(sim.config.t_end)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def compute_metrics(sim: Simulation) -> dict:
    topo = sim.topology
    cfg = sim.config
    addr_name = {a: topo.names[n] for a, n in topo.host_of.items()}

    attack_start: dict[tuple[int, int], float] = {}
    attack_flows: set[tuple[int, int]] = set()
    legit_generated = 0
    attack_generated: dict[tuple[int, int], int] = {}
    for flow in cfg.traffic.flows:
        key = (topo.addr_of[topo.by_name[flow.src]],
               topo.addr_of[topo.by_name[flow.dst]])
        if flow.kind == ATTACK:
            attack_flows.add(key)
            start = min(p[0] for p in flow.phases)
            attack_start[key] = min(attack_start.get(key, math.inf), start)
    for row in sim.rows:
        key = (topo.addr_of[topo.by_name[row.src]],
               topo.addr_of[topo.by_name[row.dst]])
        if row.label == ATTACK:
            attack_generated[key] = attack_generated.get(key, 0) + 1
        else:
            legit_generated += 1

    decisions = []
    first_decision: dict[tuple[int, int], float] = {}
    false_blocks = 0
    for ctl in sim.controllers.values():
        for d in ctl.decisions:
            flow = (d.src, d.dst)
            decisions.append({
                "time": d.time, "src": addr_name[d.src], "dst": addr_name[d.dst],
                "controller": topo.names[ctl.node],
                "voters": [topo.names[v] for v in d.voters],
                "targets": [topo.names[t] for t in d.targets],
            })
            if flow not in attack_flows:
                false_blocks += 1
            if flow not in first_decision or d.time < first_decision[flow]:
                first_decision[flow] = d.time
    decisions.sort(key=lambda d: (d["time"], d["src"], d["dst"]))

    detection_latency = {}
    for flow in sorted(attack_flows):
        name = f"{addr_name[flow[0]]}->{addr_name[flow[1]]}"
        if flow in first_decision:
            detection_latency[name] = first_decision[flow] - attack_start[flow]
        else:
            detection_latency[name] = None

    # block enforcement time at the destination's attached switch, per flow
    enforce_at_dst: dict[tuple[int, int], float] = {}
    for flow in attack_flows:
        dst_host = topo.host_of[flow[1]]
        edge_switch = sim.hosts[dst_host].switch
        t = sim.switches[edge_switch].block_applied_at.get(flow)
        if t is not None:
            enforce_at_dst[flow] = t

    attacker_total = 0
    attacker_post_block = 0
    legit_delivered = 0
    for host in sim.hosts.values():
        for d in host.deliveries:
            flow = (d.src, d.dst)
            if flow in attack_flows:
                attacker_total += 1
                t_block = enforce_at_dst.get(flow)
                if t_block is not None and d.time > t_block:
                    attacker_post_block += 1
            elif d.label != ATTACK:
                legit_delivered += 1

    report_counts = {topo.names[m.node]: m.monitor.reports_sent
                     for m in sim.monitors.values()}

    return {
        "schema_version": METRICS_SCHEMA_VERSION,
        "seed": cfg.seed,
        "t_end": cfg.t_end,
        "detection_latency": detection_latency,
        "attacker_pkts_generated": sum(attack_generated.values()),
        "attacker_pkts_delivered_total": attacker_total,
        "attacker_pkts_delivered_post_block": attacker_post_block,
        "legit_pkts_generated": legit_generated,
        "legit_pkts_delivered": legit_delivered,
        "legit_delivery_ratio": (legit_delivered / legit_generated
                                 if legit_generated else None),
        "false_blocks": false_blocks,
        "monitor_report_counts": dict(sorted(report_counts.items())),
        "decisions": decisions,
    }


def metrics_to_json(metrics: dict) -> str:
    return json.dumps(metrics, sort_keys=True, indent=2) + "\n"


def window_log_csv(sim: Simulation) -> str:
    topo = sim.topology
    addr_name = {a: topo.names[n] for a, n in topo.host_of.items()}
    lines = ["time,monitor,flow_src,flow_dst,pps,mean_iat,mean_size,bps,flag,score"]
    entries = []
    for mnode in sim.monitors.values():
        mname = topo.names[mnode.node]
        for (t, flow, fv, flag, score) in mnode.monitor.window_log:
            entries.append((t, mname, addr_name[flow[0]], addr_name[flow[1]],
                            fv, flag, score))
    entries.sort(key=lambda e: (e[0], e[1], e[2], e[3]))
    for (t, mname, src, dst, fv, flag, score) in entries:
        lines.append(f"{t!r},{mname},{src},{dst},{fv.pps!r},{fv.mean_iat!r},"
                     f"{fv.mean_size!r},{fv.bps!r},{int(flag)},{score!r}")
    return "\n".join(lines) + "\n"
