"""The two hand-written example networks: a firewall hand-over and a ring reversal."""
from __future__ import annotations

import json
from importlib import resources

from .model import NetworkPolicy, PacketSpace, Rule, SwitchPolicy, Topology
from .netio import Network, network_from_json, read_spec

FIREWALL_SPEC = ("G (purpose = Other & src = Guest -> F port = DROP) & "
                 "((src = Auth | src = Guest & purpose = Web) -> F port = WORLD)")
RING_SPEC = "F port = WORLD"

BUNDLED = ("firewall", "ring")


def _sp(switch, *rules) -> SwitchPolicy:
    return SwitchPolicy(switch, tuple(rules))


def firewall() -> tuple[Network, str]:
    """Ingress I in front of filters F1..F3; guests move from F3 alone to F2 and F3."""
    space = PacketSpace([("src", ("Auth", "Guest")), ("purpose", ("Web", "Other"))])
    topo = Topology.build(
        switches=["I", "F1", "F2", "F3"],
        ports=["I_0", "F1_0", "F2_0", "F3_0"],
        ingress=["I_0"],
        inport=[("I_0", "I"), ("F1_0", "F1"), ("F2_0", "F2"), ("F3_0", "F3")],
        outport=[("I", "F1_0"), ("I", "F2_0"), ("I", "F3_0")],
    )
    f1 = _sp("F1", Rule.make("F1_0", "WORLD", key="f1"))
    f3 = _sp("F3",
             Rule.make("F3_0", "WORLD", {"purpose": "Web"}, key="web"),
             Rule.make("F3_0", "DROP", {"purpose": "Other"}, key="other"))
    initial = NetworkPolicy(topo, {
        "I": _sp("I",
                 Rule.make("I_0", "F2_0", {"src": "Auth"}, key="auth"),
                 Rule.make("I_0", "F3_0", {"src": "Guest"}, key="guest")),
        "F1": f1,
        "F2": _sp("F2", Rule.make("F2_0", "WORLD", key="f2")),
        "F3": f3,
    })
    final = NetworkPolicy(topo, {
        "I": _sp("I",
                 Rule.make("I_0", "F1_0", {"src": "Auth"}, key="auth"),
                 Rule.make("I_0", "F2_0", {"src": "Guest"}, key="guest")),
        "F1": f1,
        "F2": _sp("F2", Rule.make("F2_0", "WORLD", {"purpose": "Web"}, key="f2")),
        "F3": f3,
    })
    return Network(topo, space, {"initial": initial, "final": final}), FIREWALL_SPEC


RING = ("A", "B", "C")
HOSTS = {"A": "N1", "B": "N2", "C": "N3"}


def _ring_policy(topo, clockwise: bool) -> NetworkPolicy:
    n = len(RING)
    table = {}
    for i, sw in enumerate(RING):
        nxt = RING[(i + 1) % n] if clockwise else RING[(i - 1) % n]
        prev_cw, prev_ccw = RING[(i - 1) % n], RING[(i + 1) % n]
        in_ports = [f"{sw}_in", f"{prev_cw}_{sw}", f"{prev_ccw}_{sw}"]
        rules = []
        for p in in_ports:
            for owner, host in HOSTS.items():
                out = "WORLD" if owner == sw else f"{sw}_{nxt}"
                rules.append(Rule.make(p, out, {"dst": host}, key=f"d{host}"))
        table[sw] = SwitchPolicy(sw, tuple(rules))
    return NetworkPolicy(topo, table)


def ring() -> tuple[Network, str]:
    """Three switches in a ring, each with a host network; traffic reverses direction."""
    space = PacketSpace([("dst", tuple(HOSTS.values()))])
    n = len(RING)
    links = [(RING[i], RING[(i + 1) % n]) for i in range(n)]
    links += [(b, a) for a, b in links]
    topo = Topology.build(
        switches=RING,
        ports=[f"{s}_in" for s in RING] + [f"{a}_{b}" for a, b in links],
        ingress=[f"{s}_in" for s in RING],
        inport=[(f"{s}_in", s) for s in RING] + [(f"{a}_{b}", b) for a, b in links],
        outport=[(a, f"{a}_{b}") for a, b in links],
    )
    policies = {"initial": _ring_policy(topo, True), "final": _ring_policy(topo, False)}
    return Network(topo, space, policies), RING_SPEC


BUILDERS = {"firewall": firewall, "ring": ring}


def bundled(name: str) -> tuple[Network, str]:
    """Load a bundled example from the package data files."""
    if name not in BUILDERS:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(BUNDLED)}")
    base = resources.files("netsynth") / "data"
    net = network_from_json(json.loads((base / f"{name}.json").read_text()))
    return net, read_spec((base / f"{name}.ltl").read_text()).strip()
