import random

import pytest
from hypothesis import given, settings, strategies as st

from rapidlearn import switch as sw
from rapidlearn.netmodel import NodeId, NodeKind, PacketView

from oracles import countdown_match

SW = NodeId(0, NodeKind.SWITCH)


def make_state(n_ports=4, **kw):
    return sw.SwitchState(id=SW, ports=list(range(n_ports)), **kw)


def pv(src=0, dst=1, size=100, t=0.0):
    return PacketView(src, dst, size, t)


def test_empty_table_punts():
    state = make_state()
    assert sw.handle_packet(state, pv(), 0) == sw.PuntToController()


def test_learned_destination_forwards():
    state = make_state()
    sw.install_flow(state, dst=1, out_port=3)
    assert sw.handle_packet(state, pv(dst=1), 0) == sw.Forward(3)
    assert sw.handle_packet(state, pv(dst=2), 0) == sw.PuntToController()


def test_newer_entry_shadows_older():
    state = make_state()
    sw.install_flow(state, dst=1, out_port=2)
    sw.install_flow(state, dst=1, out_port=3)
    assert state.lookup(1).out_port == 3
    assert state.lookup(1).priority == 2
    assert sw.handle_packet(state, pv(dst=1), 0) == sw.Forward(3)


def test_reinstall_same_route_is_noop():
    state = make_state()
    sw.install_flow(state, dst=1, out_port=2)
    before = list(state.flow_table)
    sw.install_flow(state, dst=1, out_port=2)
    assert state.flow_table == before
    assert state.max_priority == 1


def test_install_on_unknown_port_rejected():
    state = make_state(n_ports=2)
    with pytest.raises(sw.InvalidPort):
        sw.install_flow(state, dst=1, out_port=9)


def test_invalid_ingress_port_rejected():
    state = make_state(n_ports=2)
    with pytest.raises(sw.InvalidPort):
        sw.handle_packet(state, pv(), 7)


def test_priorities_strictly_increase():
    state = make_state(n_ports=8)
    for dst in range(5):
        sw.install_flow(state, dst=dst, out_port=dst)
    priorities = [e.priority for e in state.flow_table]
    assert priorities == [5, 4, 3, 2, 1]


def test_broadcast_excludes_ingress_and_blocked_ports():
    state = make_state(n_ports=4)
    state.blocked_ports.add(3)
    out = sw.handle_broadcast(state, 1, pv())
    assert [p for p, _ in out] == [0, 2]


def test_blocked_flow_drops_even_if_learned():
    state = make_state()
    sw.install_flow(state, dst=1, out_port=2)
    sw.apply_block(state, src=0, dst=1)
    assert sw.handle_packet(state, pv(src=0, dst=1), 0) == sw.Drop("blocked")
    # other traffic to the same destination still forwards
    assert sw.handle_packet(state, pv(src=5, dst=1), 0) == sw.Forward(2)


def test_block_disables_attacker_access_port():
    state = make_state(host_ports={1: 7})
    sw.install_flow(state, dst=7, out_port=1)  # learned reverse path to src 7
    sw.apply_block(state, src=7, dst=9)
    assert 1 in state.blocked_ports
    # everything arriving on the attacker's port now drops
    assert sw.handle_packet(state, pv(src=7, dst=3), 1) == sw.Drop("blocked")


def test_block_never_disables_trunk_port():
    state = make_state(host_ports={})  # port 1 is an inter-switch trunk
    sw.install_flow(state, dst=7, out_port=1)
    sw.apply_block(state, src=7, dst=9)
    assert state.blocked_ports == set()
    assert sw.handle_packet(state, pv(src=8, dst=7), 0) == sw.Forward(1)


def test_apply_block_idempotent():
    state = make_state(host_ports={1: 7})
    sw.install_flow(state, dst=7, out_port=1)
    sw.apply_block(state, src=7, dst=9)
    snapshot = (set(state.blocked), set(state.blocked_ports), list(state.flow_table))
    sw.apply_block(state, src=7, dst=9)
    assert (set(state.blocked), set(state.blocked_ports), list(state.flow_table)) == snapshot


# -- equivalence with the literal priority-countdown matcher -----------------

def random_table(rng, max_entries=64):
    state = make_state(n_ports=16)
    for _ in range(rng.randrange(max_entries + 1)):
        sw.install_flow(state, dst=rng.randrange(12), out_port=rng.randrange(16))
    return state


def assert_matches_oracle(state, dst):
    expected = countdown_match(state.flow_table, state.max_priority, dst)
    got = sw.handle_packet(state, pv(dst=dst), 0)
    assert got == expected


def test_scan_equals_countdown_on_random_tables():
    rng = random.Random(2024)
    for _ in range(1000):
        state = random_table(rng)
        assert_matches_oracle(state, rng.randrange(14))


@settings(max_examples=200)
@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 15)), max_size=64),
       st.integers(0, 11))
def test_scan_equals_countdown_property(installs, probe_dst):
    state = make_state(n_ports=16)
    for dst, port in installs:
        sw.install_flow(state, dst=dst, out_port=port)
    assert_matches_oracle(state, probe_dst)
