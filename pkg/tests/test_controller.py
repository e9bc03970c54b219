import random

import pytest

from rapidlearn.controller import (Controller, ControllerConfig, ForeignMonitor,
                                   UnknownSwitch)
from rapidlearn.netmodel import Broadcast, DdosYes, FlowMod, NodeId, NodeKind

from oracles import brute_force_decisions


def ids(kind, n, base=0):
    return [NodeId(base + i, kind) for i in range(n)]


def make_controller(n_switches=2, n_monitors=3, **cfg):
    switches = ids(NodeKind.SWITCH, n_switches)
    monitors = ids(NodeKind.MONITOR, n_monitors, base=100)
    ctl = Controller(NodeId(0, NodeKind.CONTROLLER), switches, monitors,
                     ControllerConfig(**cfg))
    return ctl, switches, monitors


def report(monitor, switch, src=1, dst=2):
    return DdosYes(switch=switch, src=src, dst=dst, monitor=monitor)


def test_punt_produces_learn_then_broadcast():
    ctl, switches, _ = make_controller()
    out = ctl.handle_of_packet(switches[0], in_port=3, src=7, dst=9)
    assert out == [(switches[0], FlowMod(dst_addr=7, out_port=3)),
                   (switches[0], Broadcast(in_port=3, src=7, dst=9))]


def test_punt_from_foreign_switch_rejected():
    ctl, _, _ = make_controller()
    stranger = NodeId(999, NodeKind.SWITCH)
    with pytest.raises(UnknownSwitch):
        ctl.handle_of_packet(stranger, 0, 1, 2)


def test_default_quorum_is_majority():
    for monitors, expected in ((1, 1), (2, 1), (3, 2), (4, 2), (5, 3)):
        ctl, _, _ = make_controller(n_monitors=monitors)
        assert ctl.quorum == expected


def test_explicit_quorum_bounds():
    ctl, _, _ = make_controller(n_monitors=3, quorum=3)
    assert ctl.quorum == 3
    with pytest.raises(ValueError):
        make_controller(n_monitors=3, quorum=4)
    with pytest.raises(ValueError):
        ControllerConfig(quorum=0)


def test_report_below_quorum_no_decision():
    ctl, switches, monitors = make_controller(n_monitors=3)  # quorum 2
    assert ctl.handle_ddos_report(report(monitors[0], switches[0]), 1.0) is None


def test_quorum_triggers_block_decision():
    ctl, switches, monitors = make_controller(n_monitors=3)  # quorum 2
    assert ctl.handle_ddos_report(report(monitors[0], switches[0]), 1.0) is None
    d = ctl.handle_ddos_report(report(monitors[1], switches[1]), 1.5)
    assert d is not None
    assert (d.src, d.dst, d.time) == (1, 2, 1.5)
    assert set(d.voters) == {monitors[0], monitors[1]}
    assert set(d.targets) == set(switches)  # all_switches scope


def test_reporting_switches_scope_limits_targets():
    ctl, switches, monitors = make_controller(n_monitors=3,
                                              block_scope="reporting_switches")
    ctl.handle_ddos_report(report(monitors[0], switches[0]), 1.0)
    d = ctl.handle_ddos_report(report(monitors[1], switches[0]), 1.5)
    assert set(d.targets) == {switches[0]}


def test_duplicate_report_from_same_monitor_counts_once():
    ctl, switches, monitors = make_controller(n_monitors=3)  # quorum 2
    for t in (1.0, 1.1, 1.2):
        assert ctl.handle_ddos_report(report(monitors[0], switches[0]), t) is None


def test_decision_is_monotone():
    ctl, switches, monitors = make_controller(n_monitors=3)  # quorum 2
    ctl.handle_ddos_report(report(monitors[0], switches[0]), 1.0)
    assert ctl.handle_ddos_report(report(monitors[1], switches[0]), 1.5) is not None
    # later reports for a decided flow never produce a second decision
    assert ctl.handle_ddos_report(report(monitors[2], switches[0]), 2.0) is None
    assert ctl.handle_ddos_report(report(monitors[0], switches[0]), 50.0) is None


def test_votes_expire_after_window():
    ctl, switches, monitors = make_controller(n_monitors=3, vote_window=10.0)
    ctl.handle_ddos_report(report(monitors[0], switches[0]), 1.0)
    # second vote lands after the first expired: still below quorum
    assert ctl.handle_ddos_report(report(monitors[1], switches[0]), 12.0) is None
    # a fresh vote while the second is live completes the quorum
    d = ctl.handle_ddos_report(report(monitors[2], switches[0]), 13.0)
    assert d is not None
    assert set(d.voters) == {monitors[1], monitors[2]}


def test_foreign_monitor_report_rejected():
    ctl, switches, _ = make_controller()
    outsider = NodeId(999, NodeKind.MONITOR)
    with pytest.raises(ForeignMonitor):
        ctl.handle_ddos_report(report(outsider, switches[0]), 1.0)


def test_flows_are_tallied_independently():
    ctl, switches, monitors = make_controller(n_monitors=3)  # quorum 2
    assert ctl.handle_ddos_report(report(monitors[0], switches[0], src=1, dst=2), 1.0) is None
    assert ctl.handle_ddos_report(report(monitors[1], switches[0], src=3, dst=2), 1.1) is None
    assert ctl.handle_ddos_report(report(monitors[1], switches[0], src=1, dst=2), 1.2) is not None


def test_random_report_sequences_match_brute_force_tally():
    rng = random.Random(99)
    for trial in range(500):
        n_mon = rng.randrange(1, 6)
        quorum = rng.randrange(1, n_mon + 1)
        vote_window = rng.choice([1.0, 5.0, 10.0])
        ctl, switches, monitors = make_controller(
            n_monitors=n_mon, quorum=quorum, vote_window=vote_window)
        flows = [(rng.randrange(4), rng.randrange(4, 8)) for _ in range(3)]
        t = 0.0
        reports = []
        for _ in range(rng.randrange(1, 40)):
            t += rng.random() * vote_window
            reports.append((t, rng.choice(monitors), rng.choice(flows)))

        got = {}
        for (when, mon, flow) in reports:
            d = ctl.handle_ddos_report(
                DdosYes(switch=switches[0], src=flow[0], dst=flow[1], monitor=mon),
                when)
            if d is not None:
                assert (d.src, d.dst) not in got, "second decision for one flow"
                got[(d.src, d.dst)] = d.time
        expected = brute_force_decisions(reports, quorum, vote_window)
        assert got == expected, f"trial {trial}"
