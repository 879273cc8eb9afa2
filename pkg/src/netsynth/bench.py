"""Parameterized benchmark family: sparse core, two-hop fringes, shortest-path routing."""
from __future__ import annotations

import random
from dataclasses import dataclass

import networkx as nx

from .checker import follow, has_loops, validate_plan
from .ltl import Formula, parse_ltl
from .model import (
    WAIT, LocatedPacket, NetworkPolicy, PacketSpace, Rule, SwitchPolicy, Topology, Update,
    diff_switches,
)

WORLD, DROP = "WORLD", "DROP"


class BenchError(ValueError):
    """The requested parameters cannot be realized."""


@dataclass(frozen=True)
class BenchParams:
    total_nodes: int
    updating_nodes: int
    ingress_count: int = 3
    impossible: bool = False
    seed: int = 0
    max_attempts: int = 200

    def check(self) -> None:
        n, m, k = self.total_nodes, self.updating_nodes, self.ingress_count
        if k < 2:
            raise BenchError("ingress_count must be at least 2")
        if m < 1 or m >= n:
            raise BenchError("need 1 <= updating_nodes < total_nodes")
        if self.impossible and m < k:
            raise BenchError(f"the impossible variant updates every ingress switch, so M >= {k}")
        if n < core_size(n) + 2 * k:
            raise BenchError(f"total_nodes={n} is too small for {k} ingress regions")


@dataclass
class BenchInstance:
    params: BenchParams
    topology: Topology
    space: PacketSpace
    initial: NetworkPolicy
    final: NetworkPolicy
    spec: Formula
    spec_text: str
    removed: tuple
    anchors: tuple


def core_size(n: int) -> int:
    return max(5, n // 4)


def _core_graph(rng: random.Random, size: int) -> nx.Graph:
    """Random spanning tree plus extra edges up to average degree about 3."""
    names = [f"c{i:03d}" for i in range(size)]
    g = nx.Graph()
    g.add_nodes_from(names)
    for i in range(1, size):
        g.add_edge(names[i], names[rng.randrange(i)])
    target = (3 * size) // 2
    tries = 0
    while g.number_of_edges() < target and tries < 50 * size:
        tries += 1
        a, b = rng.sample(names, 2)
        g.add_edge(a, b)
    return g


def _next_hops(g: nx.Graph, dest: str, allowed) -> dict:
    """Next hop towards ``dest`` for every allowed node; ties go to the smallest neighbor name."""
    sub = g.subgraph(allowed)
    dist = nx.single_source_shortest_path_length(sub, dest)
    hops = {}
    for u, du in dist.items():
        if u == dest:
            continue
        hops[u] = min(v for v in sub.neighbors(u) if dist.get(v) == du - 1)
    return hops


def _switch_policy(g, u, hops_by_dst, dsts, regions, ingress_of, drop_own=False) -> SwitchPolicy:
    in_ports = sorted(f"{v}.{u}" for v in g.neighbors(u))
    if u in ingress_of:
        in_ports.insert(0, ingress_of[u])
    rules = []
    for p in in_ports:
        for d in dsts:
            if regions[d] == u:
                out = DROP if drop_own else WORLD
            else:
                out = f"{u}.{hops_by_dst[d][u]}"
            rules.append(Rule.make(p, out, {"dst": d}, key=d))
    return SwitchPolicy(u, tuple(rules))


def _order_candidates(diff, dsts, g_final_dist):
    """A few dependency-flavoured update orders to prove an instance solvable."""
    orders = []
    for d in dsts:
        orders.append(sorted(diff, key=lambda s: (g_final_dist[d].get(s, 0), s)))
    orders.append(sorted(diff, key=lambda s: (min(g_final_dist[d].get(s, 0) for d in dsts), s)))
    orders.append(sorted(diff, key=lambda s: (sum(g_final_dist[d].get(s, 0) for d in dsts), s)))
    out, seen = [], set()
    for o in orders:
        if tuple(o) not in seen:
            seen.add(tuple(o))
            out.append(o)
    return out


def generate(params: BenchParams) -> BenchInstance:
    params.check()
    rng = random.Random(params.seed)
    n, m, k = params.total_nodes, params.updating_nodes, params.ingress_count
    csize = core_size(n)
    fringe_total = n - csize - k
    dsts = [f"r{i}" for i in range(k)]
    ingress_sw = [f"in{i}" for i in range(k)]
    regions = dict(zip(dsts, ingress_sw))
    ingress_of = {s: f"ext{i}" for i, s in enumerate(ingress_sw)}
    target_core = m - k if params.impossible else m

    last_error = "no attempt made"
    for _ in range(params.max_attempts):
        core = _core_graph(rng, csize)
        core_names = sorted(core.nodes)
        anchors = tuple(rng.sample(core_names, k))
        g = core.copy()
        for i, s in enumerate(ingress_sw):
            count = fringe_total // k + (1 if i < fringe_total % k else 0)
            for j in range(count):
                fnode = f"f{i}_{j:03d}"
                g.add_edge(s, fnode)
                g.add_edge(fnode, anchors[i])

        everyone = set(g.nodes)
        hops_init = {d: _next_hops(g, regions[d], everyone) for d in dsts}

        # grow a removal set until exactly target_core routing tables change
        removed: list[str] = []
        changed: set = set()
        candidates = [c for c in core_names if c not in anchors]
        rng.shuffle(candidates)
        hops_final = hops_init
        if target_core > 0:
            for c in candidates:
                trial = set(removed) | {c}
                keep = everyone - trial
                if not nx.is_connected(g.subgraph(keep)):
                    continue
                hf = {d: _next_hops(g, regions[d], keep) for d in dsts}
                ch = {u for u in keep if any(hf[d].get(u) != hops_init[d].get(u) for d in dsts)}
                if len(ch) > target_core:
                    continue
                removed.append(c)
                changed, hops_final = ch, hf
                if len(changed) == target_core:
                    break
        if len(changed) != target_core:
            last_error = f"could not find a removal set changing exactly {target_core} switches"
            continue

        inst = _assemble(params, g, dsts, regions, ingress_of, hops_init, hops_final,
                         set(removed), tuple(sorted(removed)), anchors)
        if len(diff_switches(inst.initial, inst.final)) != m:
            last_error = "policy difference does not match M"
            continue
        if not has_loops(inst.topology, inst.initial, inst.space).ok or \
                not has_loops(inst.topology, inst.final, inst.space).ok:
            last_error = "generated routing has a loop"
            continue
        if not params.impossible and not _provably_solvable(inst, dsts, g, regions, removed):
            last_error = "no dependency-ordered plan validates"
            continue
        return inst
    raise BenchError(f"N={n}, M={m}, seed={params.seed}: {last_error} "
                     f"after {params.max_attempts} attempts")


def _assemble(params, g, dsts, regions, ingress_of, hops_init, hops_final, removed, removed_t, anchors):
    switches = sorted(g.nodes)
    ports, inport, outport = [], [], []
    for u, v in g.edges:
        for a, b in ((u, v), (v, u)):
            ports.append(f"{a}.{b}")
            inport.append((f"{a}.{b}", b))
            outport.append((a, f"{a}.{b}"))
    for s, p in ingress_of.items():
        ports.append(p)
        inport.append((p, s))
    topo = Topology.build(switches, ports, ingress_of.values(), inport, outport, WORLD, DROP)
    space = PacketSpace([("dst", tuple(dsts))])
    init_t, final_t = {}, {}
    for u in switches:
        init_t[u] = _switch_policy(g, u, hops_init, dsts, regions, ingress_of)
        if u in removed:
            final_t[u] = init_t[u]
        else:
            final_t[u] = _switch_policy(g, u, hops_final, dsts, regions, ingress_of,
                                        drop_own=params.impossible)
    spec_text = " & ".join(f"(dst = {d} -> F port = {WORLD})" for d in dsts)
    spec = parse_ltl(spec_text)
    return BenchInstance(params, topo, space, NetworkPolicy(topo, init_t), NetworkPolicy(topo, final_t),
                         spec, spec_text, removed_t, anchors)


def _provably_solvable(inst: BenchInstance, dsts, g, regions, removed) -> bool:
    keep = set(g.nodes) - set(removed)
    dist = {d: nx.single_source_shortest_path_length(g.subgraph(keep), regions[d]) for d in dsts}
    diff = diff_switches(inst.initial, inst.final)
    for order in _order_candidates(diff, dsts, dist):
        seq = []
        for i, s in enumerate(order):
            if i:
                seq.append(WAIT)
            seq.append(Update(s, inst.final[s]))
        if validate_plan(inst.topology, inst.initial, seq, inst.spec, inst.space, final=inst.final).ok:
            return True
    return False


def delivery_ok(inst: BenchInstance, policy: NetworkPolicy) -> bool:
    """Every packet injected at an ingress and destined for another region ends at WORLD."""
    own = {f"ext{i}": f"r{i}" for i in range(inst.params.ingress_count)}
    for port in inst.topology.sorted_ingress:
        for pkt in inst.space.packets():
            if pkt["dst"] == own[port]:
                continue
            if follow(inst.topology, policy, LocatedPacket(port, pkt))[-1].port != WORLD:
                return False
    return True
