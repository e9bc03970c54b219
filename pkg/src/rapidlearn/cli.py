"""Command-line frontend: train, simulate, evaluate, gen-trace, inspect.

Exit codes: 0 success, 1 runtime failure, 2 usage/validation error.
Seed precedence: --seed flag > RAPIDLEARN_SEED env var > scenario file.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from importlib import resources

import numpy as np

from . import engine as eng
from . import svc, traffic
from .controller import BlockDecision
from .netmodel import (ATTACK, Block, DdosYes, FlowMod, NodeKind)
from .scenario import (ConfigError, build_simulation, compute_metrics,
                       load_scenario, metrics_to_json, run_simulation,
                       window_log_csv)
from .switch import FlowEntry, SwitchState, apply_block, install_flow
from .traffic import FlowSpec, SizeDist, TrafficSpec


class UsageError(ValueError):
    pass


class InvalidSplit(UsageError):
    pass


PRESET_SCENARIOS = ("two-domain", "one-switch")
PRESET_TRAFFIC = ("default-ddos",)


def preset_path(name: str) -> str:
    if name not in PRESET_SCENARIOS:
        raise UsageError(f"unknown scenario preset {name!r}; "
                         f"choose from {PRESET_SCENARIOS}")
    return str(resources.files("rapidlearn").joinpath("presets", f"{name}.toml"))


def default_ddos_spec() -> TrafficSpec:
    """Built-in labeled workload for training: 21 background client flows
    and 21 flood flows over 50 s, ~2100 one-second windows at ~50/50."""
    flows = []
    for i in range(21):
        flows.append(FlowSpec(
            src=f"client{i}", dst=f"server{i}", kind="legit",
            phases=((0.0, 50.0, 20.0),),
            size_dist=SizeDist.uniform(400, 1200), arrival="poisson"))
    for i in range(21):
        flows.append(FlowSpec(
            src=f"bot{i}", dst=f"victim{i % 3}", kind="attack",
            phases=((0.0, 50.0, 1000.0),),
            size_dist=SizeDist.fixed(100), arrival="uniform"))
    return TrafficSpec(flows=flows)


def _resolve_seed(flag_seed, file_seed):
    if flag_seed is not None:
        return int(flag_seed)
    env = os.environ.get("RAPIDLEARN_SEED")
    if env is not None:
        return int(env)
    return file_seed


# ---------------------------------------------------------------------------
# train / evaluate
# ---------------------------------------------------------------------------

def _split_dataset(ds: svc.Dataset, split: float, seed: int):
    if not (0.0 < split <= 1.0):
        raise InvalidSplit(f"--split must be in (0, 1], got {split}")
    if split == 1.0:
        return ds, ds
    idx = list(range(len(ds)))
    random.Random(seed).shuffle(idx)
    cut = int(len(idx) * split)
    if cut == 0 or cut == len(idx):
        raise InvalidSplit(f"--split {split} leaves an empty train or test set")
    tr, te = idx[:cut], idx[cut:]
    return (svc.Dataset(ds.features[tr], ds.labels[tr]),
            svc.Dataset(ds.features[te], ds.labels[te]))


def cmd_train(args) -> int:
    rows = traffic.load_trace_csv(args.trace)
    ds = traffic.windowize(rows, args.window)
    seed = _resolve_seed(args.seed, 0)
    train_ds, test_ds = _split_dataset(ds, args.split, seed)
    model = svc.fit(train_ds, C=args.c, gamma=args.gamma, seed=seed)
    svc.save_model(model, args.out)
    report = svc.evaluate(model, test_ds)
    out = {"windows": len(ds), "train_windows": len(train_ds),
           "test_windows": len(test_ds), "C": args.c, "gamma": args.gamma,
           "window_len": args.window, "seed": seed, "model": args.out}
    out.update(report.as_dict())
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_evaluate(args) -> int:
    model = svc.load_model(args.model)
    rows = traffic.load_trace_csv(args.trace)
    ds = traffic.windowize(rows, args.window)
    report = svc.evaluate(model, ds)
    out = {"windows": len(ds), "window_len": args.window, "model": args.model}
    out.update(report.as_dict())
    print(json.dumps(out, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.scenario and args.preset:
        raise UsageError("--scenario and --preset are mutually exclusive")
    path = args.scenario or preset_path(args.preset or "two-domain")
    cfg = load_scenario(path)
    cfg.seed = _resolve_seed(args.seed, cfg.seed)
    if args.model:
        cfg.model_path = args.model
    if args.dup_prob is not None:
        cfg.dup_prob = args.dup_prob
    sim = build_simulation(cfg)
    run_simulation(sim)
    metrics = compute_metrics(sim)
    text = metrics_to_json(metrics)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.trace_out:
        eng.write_trace(sim.engine.trace, args.trace_out)
    if args.window_log:
        with open(args.window_log, "w") as fh:
            fh.write(window_log_csv(sim))
    return 0


# ---------------------------------------------------------------------------
# gen-trace
# ---------------------------------------------------------------------------

def _spec_from_toml(path: str) -> TrafficSpec:
    from .scenario import parse_traffic
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return parse_traffic(doc.get("traffic", doc))


def cmd_gen_trace(args) -> int:
    if bool(args.spec) == bool(args.preset):
        raise UsageError("exactly one of --spec and --preset is required")
    if args.preset:
        if args.preset not in PRESET_TRAFFIC:
            raise UsageError(f"unknown traffic preset {args.preset!r}; "
                             f"choose from {PRESET_TRAFFIC}")
        spec = default_ddos_spec()
    else:
        spec = _spec_from_toml(args.spec)
    seed = _resolve_seed(args.seed, 42)
    rows = traffic.generate_packets(spec, seed)
    traffic.save_trace_csv(rows, args.out)
    print(json.dumps({"rows": len(rows), "seed": seed, "out": args.out},
                     sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# inspect: rebuild switch flow tables and the vote ledger from a saved trace
# ---------------------------------------------------------------------------

def cmd_inspect(args) -> int:
    events = eng.read_trace(args.trace)
    tables: dict = {}
    blocked: dict = {}
    tally: dict = {}
    for ev in events:
        msg = ev.message
        if isinstance(msg, FlowMod) and ev.target.kind is NodeKind.SWITCH:
            state = tables.setdefault(ev.target, SwitchState(
                id=ev.target, ports=list(range(4096))))
            install_flow(state, msg.dst_addr, msg.out_port)
        elif isinstance(msg, Block) and ev.target.kind is NodeKind.SWITCH:
            state = tables.setdefault(ev.target, SwitchState(
                id=ev.target, ports=list(range(4096))))
            apply_block(state, msg.src, msg.dst)
            blocked.setdefault(ev.target, set()).add((msg.src, msg.dst))
        elif isinstance(msg, DdosYes):
            tally.setdefault((msg.src, msg.dst), set()).add(msg.monitor)
    print("priority,switch,dst,out_port")
    for node in sorted(tables):
        for entry in sorted(tables[node].flow_table, key=lambda e: -e.priority):
            print(f"{entry.priority},{node.kind.value}:{node.id},{entry.dst},{entry.out_port}")
    print()
    print("switch,blocked_src,blocked_dst")
    for node in sorted(blocked):
        for (s, d) in sorted(blocked[node]):
            print(f"{node.kind.value}:{node.id},{s},{d}")
    print()
    print("flow_src,flow_dst,reporting_monitors")
    for (s, d) in sorted(tally):
        mons = ";".join(f"{m.kind.value}:{m.id}" for m in sorted(tally[(s, d)]))
        print(f"{s},{d},{mons}")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rapidlearn",
                                description="Distributed DDoS detection simulator")
    sub = p.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train an SVC model from a labeled trace")
    tr.add_argument("--trace", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--c", type=float, default=10.0)
    tr.add_argument("--gamma", type=float, default=0.5)
    tr.add_argument("--window", type=float, default=1.0)
    tr.add_argument("--split", type=float, default=0.7)
    tr.add_argument("--seed", type=int, default=None)
    tr.set_defaults(func=cmd_train)

    si = sub.add_parser("simulate", help="run a scenario end to end")
    si.add_argument("--scenario")
    si.add_argument("--preset", choices=PRESET_SCENARIOS)
    si.add_argument("--model")
    si.add_argument("--seed", type=int, default=None)
    si.add_argument("--dup-prob", type=float, default=None)
    si.add_argument("--out", help="metrics JSON path (default: stdout)")
    si.add_argument("--trace-out", help="event trace output path")
    si.add_argument("--window-log", help="per-monitor window log CSV path")
    si.set_defaults(func=cmd_simulate)

    ev = sub.add_parser("evaluate", help="evaluate a model on a labeled trace")
    ev.add_argument("--trace", required=True)
    ev.add_argument("--model", required=True)
    ev.add_argument("--window", type=float, default=1.0)
    ev.set_defaults(func=cmd_evaluate)

    gt = sub.add_parser("gen-trace", help="write a synthetic packet trace CSV")
    gt.add_argument("--spec", help="TOML file with [[traffic.flow]] entries")
    gt.add_argument("--preset", help="built-in workload (default-ddos)")
    gt.add_argument("--seed", type=int, default=None)
    gt.add_argument("--out", required=True)
    gt.set_defaults(func=cmd_gen_trace)

    ins = sub.add_parser("inspect",
                         help="dump flow tables and vote ledger from a saved event trace")
    ins.add_argument("--trace", required=True)
    ins.set_defaults(func=cmd_inspect)
    return p


USAGE_ERRORS = (UsageError, ConfigError, traffic.InvalidSpec, traffic.MissingLabel,
                traffic.MalformedRow, traffic.UnsortedTrace, traffic.UnknownLabel,
                svc.MalformedModelFile, FileNotFoundError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
