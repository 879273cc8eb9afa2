"""Independent reference implementations used as test oracles.

These deliberately avoid the library's evaluation and lookup code: formulas
are evaluated by direct recursive unfolding, packets are forwarded by scanning
the raw relations and rule lists, and update orders are searched by trying
every permutation.
"""
from __future__ import annotations

import itertools

from netsynth import ltl
from netsynth.model import LocatedPacket


def naive_holds(f, trace, i: int = 0) -> bool:
    """Does position ``i`` of the lasso (last state repeated forever) satisfy ``f``?

    Trace items are (port, packet) pairs; packets may be any mapping.
    """
    n = len(trace)
    last = n - 1
    i = min(i, last)
    t = type(f)
    if t is ltl.Const:
        return f.value
    if t is ltl.PortIs:
        return trace[i][0] == f.port
    if t is ltl.FieldIs:
        return trace[i][1][f.field] == f.value
    if t is ltl.Not:
        return not naive_holds(f.arg, trace, i)
    if t is ltl.And:
        return naive_holds(f.left, trace, i) and naive_holds(f.right, trace, i)
    if t is ltl.Or:
        return naive_holds(f.left, trace, i) or naive_holds(f.right, trace, i)
    if t is ltl.Implies:
        return (not naive_holds(f.left, trace, i)) or naive_holds(f.right, trace, i)
    if t is ltl.Next:
        return naive_holds(f.arg, trace, i + 1)
    # positions >= last all look the same, so quantifying up to last suffices
    if t is ltl.Finally:
        return any(naive_holds(f.arg, trace, j) for j in range(i, n))
    if t is ltl.Globally:
        return all(naive_holds(f.arg, trace, j) for j in range(i, n))
    if t is ltl.Until:
        for j in range(i, n):
            if naive_holds(f.right, trace, j):
                return all(naive_holds(f.left, trace, k) for k in range(i, j))
        return False
    raise TypeError(f)


def all_packets(space):
    names = [name for name, _ in space.fields]
    for combo in itertools.product(*(vals for _, vals in space.fields)):
        yield dict(zip(names, combo))


_OWNERS: dict = {}


def owner_of(topo, port):
    table = _OWNERS.get(id(topo))
    if table is None or table[0] is not topo:
        rel: dict = {}
        for p, s in topo.inport:
            rel.setdefault(p, []).append(s)
        table = _OWNERS[id(topo)] = (topo, rel)
    owners = table[1].get(port, [])
    assert len(owners) == 1, f"port {port} has owners {owners}"
    return owners[0]


def raw_step(topo, policy, port, pkt: dict):
    """One forwarding step computed straight from the relations and rule lists."""
    if port in (topo.world, topo.drop):
        return port, pkt
    for rule in policy[owner_of(topo, port)].rules:
        if rule.in_port == port and all(pkt[k] == v for k, v in rule.guard):
            new = dict(pkt)
            new.update(dict(rule.rewrites))
            return rule.out_port, new
    return topo.drop, pkt


def raw_trace(topo, policy, port, pkt, limit=None):
    """Follow a packet; returns (trace of (port, packet dict), looped)."""
    limit = limit or 4 * len(topo.ports) + 4
    trace = [(port, dict(pkt))]
    seen_ports, seen_switches = set(), set()
    looped = False
    while port not in (topo.world, topo.drop):
        sw = owner_of(topo, port)
        if port in seen_ports or sw in seen_switches:
            looped = True
        seen_ports.add(port)
        seen_switches.add(sw)
        if len(trace) > limit:
            return trace, True
        port, pkt = raw_step(topo, policy, port, pkt)
        trace.append((port, dict(pkt)))
    return trace, looped


def to_located(space, trace):
    return tuple(LocatedPacket(p, space.packet(**pkt)) for p, pkt in trace)


def brute_loop_free(topo, policy, space) -> bool:
    for port in topo.ingress:
        for pkt in all_packets(space):
            if raw_trace(topo, policy, port, pkt)[1]:
                return False
    return True


def brute_model_check(topo, policy, f, space) -> bool:
    for port in sorted(topo.ingress):
        for pkt in all_packets(space):
            trace, looped = raw_trace(topo, policy, port, pkt)
            if looped:
                raise AssertionError("brute_model_check needs a loop-free policy")
            if not naive_holds(f, trace):
                return False
    return True


def apply_switches(initial, final, switches):
    from netsynth.model import NetworkPolicy
    table = {s: initial[s] for s in initial}
    for s in switches:
        table[s] = final[s]
    return NetworkPolicy(initial.topology, table)


def brute_valid_orders(topo, initial, final, f, space, limit=None):
    """Every permutation of the differing switches whose every prefix is loop-free and satisfies f."""
    diff = sorted(s for s in topo.switches if initial[s] != final[s])
    good: dict = {}

    def ok(subset):
        key = frozenset(subset)
        if key not in good:
            cfg = apply_switches(initial, final, key)
            good[key] = brute_loop_free(topo, cfg, space) and brute_model_check(topo, cfg, f, space)
        return good[key]

    out = []
    for perm in itertools.permutations(diff):
        if all(ok(perm[:i]) for i in range(len(perm) + 1)):
            out.append(list(perm))
            if limit is not None and len(out) >= limit:
                break
    return out


def brute_transition_ok(topo, before, after, switch, f, space) -> bool:
    """Every flip point of ``switch`` along every packet path visits no port or switch twice and satisfies f."""
    bound = len(topo.ports) + 1
    for port in sorted(topo.ingress):
        for pkt in all_packets(space):
            for k in range(bound + 2):
                p, cur, trace, steps = port, dict(pkt), [(port, dict(pkt))], 0
                vports, vswitches = set(), set()
                while p not in (topo.world, topo.drop):
                    sw = owner_of(topo, p)
                    if p in vports or sw in vswitches:
                        return False
                    vports.add(p)
                    vswitches.add(sw)
                    pol = after if (sw == switch and steps >= k) else before
                    p, cur = raw_step(topo, pol, p, cur)
                    trace.append((p, dict(cur)))
                    steps += 1
                if not naive_holds(f, trace):
                    return False
    return True


def brute_transition_orders(topo, initial, final, f, space):
    """Permutations accepted step by step under in-flight flips (no waits)."""
    diff = sorted(s for s in topo.switches if initial[s] != final[s])
    if not (brute_loop_free(topo, initial, space) and brute_model_check(topo, initial, f, space)):
        return []
    memo: dict = {}
    out = []
    for perm in itertools.permutations(diff):
        good = True
        for i, s in enumerate(perm):
            key = (frozenset(perm[:i]), s)
            if key not in memo:
                memo[key] = brute_transition_ok(topo, apply_switches(initial, final, perm[:i]),
                                                apply_switches(initial, final, perm[:i + 1]), s, f, space)
            if not memo[key]:
                good = False
                break
        if good:
            out.append(list(perm))
    return out
