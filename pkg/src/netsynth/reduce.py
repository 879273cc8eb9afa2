"""Rule-granularity reduction: one pseudo-switch per rule key."""
from __future__ import annotations

import heapq

from .model import ModelError, NetworkPolicy, Rule, SwitchPolicy, Topology


class ReductionError(ModelError):
    pass


def _keyed(switch: str, rules, all_same: bool) -> list[tuple[str, Rule]]:
    out = []
    seen = set()
    for i, r in enumerate(rules):
        key = r.key
        if key is None:
            if not all_same:
                raise ReductionError(f"switch {switch!r}: rules need keys to be aligned across policies")
            key = f"r{i}"
        if (key, r.in_port) in seen:
            raise ReductionError(f"switch {switch!r}: key {key!r} used twice for in_port {r.in_port!r}")
        seen.add((key, r.in_port))
        out.append((key, r))
    return out


def _merge_orders(switch: str, orders: list[list[str]]) -> list[str]:
    """Linear extension of several key orders; ties go to the earliest-seen key."""
    rank: dict[str, int] = {}
    succ: dict[str, set] = {}
    indeg: dict[str, int] = {}
    for order in orders:
        for k in order:
            if k not in rank:
                rank[k] = len(rank)
                succ[k] = set()
                indeg[k] = 0
        for a, b in zip(order, order[1:]):
            if b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1
    heap = [(rank[k], k) for k in rank if indeg[k] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, k = heapq.heappop(heap)
        out.append(k)
        for b in succ[k]:
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(heap, (rank[b], b))
    if len(out) != len(rank):
        raise ReductionError(f"switch {switch!r}: rule orders cannot be aligned across policies")
    return out


def rule_granularity_reduce(topo: Topology, policies: list[NetworkPolicy]):
    """Split every multi-rule switch into a chain of single-rule pseudo-switches.

    Pseudo-switch ``S#key`` holds the rule with that key (for each in_port it
    appears on) and passes unmatched packets to the next chain element. The
    original input port stays the head of its chain, so one-packet traces
    projected onto the original ports are unchanged.
    """
    switches, inport, outport, origin = set(), set(), set(), {}
    ports = set(topo.ports)
    new_tables: list[dict] = [{} for _ in policies]

    for s in sorted(topo.switches):
        rule_lists = [list(p[s].rules) for p in policies]
        all_same = all(rl == rule_lists[0] for rl in rule_lists)
        keyed = [_keyed(s, rl, all_same) for rl in rule_lists]
        keys = set(k for kl in keyed for k, _ in kl)
        if len(keys) <= 1:
            switches.add(s)
            inport.update((p, s) for p in topo.inports_of.get(s, ()))
            outport.update((s, q) for q in topo.outports_of.get(s, ()))
            for table, pol in zip(new_tables, policies):
                table[s] = pol[s]
            continue

        in_ports = sorted(set(topo.inports_of.get(s, ())) | {r.in_port for kl in keyed for _, r in kl})
        chains: dict[str, list[str]] = {}
        for p in in_ports:
            chains[p] = _merge_orders(s, [[k for k, r in kl if r.in_port == p] for kl in keyed])
        all_keys = sorted(keys)
        pseudo = {k: f"{s}#{k}" for k in all_keys}
        for name in pseudo.values():
            if name in topo.switches:
                raise ReductionError(f"pseudo-switch name {name!r} collides with an existing switch")

        chain_port: dict[tuple, str] = {}
        for p, chain in chains.items():
            if not chain:
                # no rule ever reads this port: the first pseudo-switch owns it and drops
                inport.add((p, pseudo[all_keys[0]]))
                continue
            for i, k in enumerate(chain):
                name = p if i == 0 else f"{p}~{k}"
                if i > 0 and name in topo.ports:
                    raise ReductionError(f"chain port name {name!r} collides with an existing port")
                chain_port[(p, k)] = name
                ports.add(name)
                inport.add((name, pseudo[k]))
        for k, ps in pseudo.items():
            switches.add(ps)
            origin[ps] = topo.physical(s)
            outport.update((ps, q) for q in topo.outports_of.get(s, ()))
        for p, chain in chains.items():
            for k, nxt in zip(chain, chain[1:]):
                outport.add((pseudo[k], chain_port[(p, nxt)]))

        for table, kl in zip(new_tables, keyed):
            by_key: dict[str, dict[str, Rule]] = {}
            for k, r in kl:
                by_key.setdefault(k, {})[r.in_port] = r
            for k, ps in pseudo.items():
                rules = []
                for p, chain in chains.items():
                    if k not in chain:
                        continue
                    here = chain_port[(p, k)]
                    r = by_key.get(k, {}).get(p)
                    if r is not None:
                        rules.append(Rule(here, r.out_port, r.guard, r.rewrites, k))
                    i = chain.index(k)
                    if i + 1 < len(chain):
                        rules.append(Rule(here, chain_port[(p, chain[i + 1])], key=f"{k}>pass"))
                table[ps] = SwitchPolicy(ps, tuple(rules))

    new_topo = Topology.build(switches, ports, topo.ingress, inport, outport,
                              topo.world, topo.drop, origin={**topo.origin, **origin})
    return new_topo, [NetworkPolicy(new_topo, t) for t in new_tables]


def project_trace(original: Topology, trace) -> tuple:
    """Drop the located packets sitting on ports introduced by the reduction."""
    return tuple(lp for lp in trace if lp.port in original.ports)
