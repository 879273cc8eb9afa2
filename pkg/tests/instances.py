"""Seeded random small instances: at most 6 differing switches, 20 ports and 16 packets."""
from __future__ import annotations

import random
from dataclasses import dataclass

from netsynth import ltl
from netsynth.model import NetworkPolicy, PacketSpace, Rule, SwitchPolicy, Topology

from oracles import brute_loop_free, brute_model_check, brute_valid_orders


@dataclass
class Instance:
    seed: int
    topology: Topology
    space: PacketSpace
    initial: NetworkPolicy
    final: NetworkPolicy
    spec: object


FIELD_SHAPES = [((2,),), ((4,),), ((2, 2),), ((2, 4),), ((4, 4),), ((2, 2, 2),), ((2, 2, 4),)]


def random_space(rng: random.Random) -> PacketSpace:
    sizes = rng.choice(FIELD_SHAPES)[0]
    names = ["a", "b", "c"]
    return PacketSpace([(names[i], tuple(f"v{j}" for j in range(n))) for i, n in enumerate(sizes)])


def random_topology(rng: random.Random):
    n_sw = rng.randint(2, 6)
    switches = [f"s{i}" for i in range(n_sw)]
    n_ports = rng.randint(n_sw, min(20, 3 * n_sw))
    ports = [f"p{i}" for i in range(n_ports)]
    owner = {}
    for i, p in enumerate(ports):
        owner[p] = switches[i] if i < n_sw else rng.choice(switches)
    n_ing = rng.randint(1, min(3, n_ports - 1)) if n_ports > 1 else 1
    ingress = rng.sample(ports, n_ing)
    outport = []
    for p in ports:
        if p not in ingress:
            outport.append((rng.choice(switches), p))
    topo = Topology.build(switches, ports, ingress, [(p, s) for p, s in owner.items()], outport)
    return topo


def random_switch_policy(rng, topo, space, s) -> SwitchPolicy:
    internal = sorted(topo.outports_of.get(s, ()))
    outs = internal * 2 + [topo.world, topo.world, topo.drop]
    rules = []
    for p in sorted(topo.inports_of.get(s, ())):
        for _ in range(rng.randint(0, 3)):
            guard = {}
            for name, vals in space.fields:
                if rng.random() < 0.4:
                    guard[name] = rng.choice(vals)
            rewrites = {}
            if rng.random() < 0.15:
                name, vals = rng.choice(space.fields)
                rewrites[name] = rng.choice(vals)
            rules.append(Rule.make(p, rng.choice(outs), guard, rewrites))
    return SwitchPolicy(s, tuple(rules))


def random_policy(rng, topo, space) -> NetworkPolicy:
    return NetworkPolicy(topo, {s: random_switch_policy(rng, topo, space, s) for s in sorted(topo.switches)})


def random_formula(rng, topo, space, depth: int):
    def atom():
        if rng.random() < 0.5:
            return ltl.PortIs(rng.choice(sorted(topo.ports)))
        name, vals = rng.choice(space.fields)
        return ltl.FieldIs(name, rng.choice(vals))

    def go(d):
        if d == 0 or rng.random() < 0.25:
            return atom() if rng.random() < 0.92 else rng.choice([ltl.TRUE, ltl.FALSE])
        k = rng.randrange(9)
        if k < 4:
            return [ltl.Not, ltl.Next, ltl.Finally, ltl.Globally][k](go(d - 1))
        return [ltl.And, ltl.Or, ltl.Implies, ltl.Until, ltl.And][k - 4](go(d - 1), go(d - 1))
    return go(depth)


SPEC_TEMPLATES = [
    lambda rng, t, sp: ltl.Finally(ltl.PortIs(t.world)),
    lambda rng, t, sp: ltl.Globally(ltl.Not(ltl.PortIs(rng.choice(sorted(t.ports - {t.world, t.drop}))))),
    lambda rng, t, sp: ltl.Implies(_field_atom(rng, sp), ltl.Finally(ltl.PortIs(rng.choice([t.world, t.drop])))),
    lambda rng, t, sp: ltl.Globally(ltl.Implies(ltl.PortIs(rng.choice(sorted(t.ports))),
                                                ltl.Finally(ltl.PortIs(t.world)))),
    lambda rng, t, sp: ltl.Implies(_field_atom(rng, sp),
                                   ltl.Globally(ltl.Not(ltl.PortIs(rng.choice(sorted(t.ports)))))),
]


def _field_atom(rng, space):
    name, vals = rng.choice(space.fields)
    return ltl.FieldIs(name, rng.choice(vals))


def _pick_spec(rng, topo, space, initial, final):
    """Prefer a property that both endpoints satisfy but some mixed configuration breaks."""
    diff = sorted(x for x in topo.switches if initial[x] != final[x])
    fallback = None
    for _ in range(25):
        if rng.random() < 0.6:
            f = rng.choice(SPEC_TEMPLATES)(rng, topo, space)
        else:
            f = random_formula(rng, topo, space, rng.randint(1, 3))
        if fallback is None:
            fallback = f
        if not (brute_model_check(topo, initial, f, space) and brute_model_check(topo, final, f, space)):
            continue
        fallback = f
        for _ in range(4):
            subset = [x for x in diff if rng.random() < 0.5]
            table = {x: (final[x] if x in subset else initial[x]) for x in topo.switches}
            mixed = NetworkPolicy(topo, table)
            if brute_loop_free(topo, mixed, space) and not brute_model_check(topo, mixed, f, space):
                return f
    return fallback


def random_instance(seed: int, max_diff: int = 6) -> Instance:
    """Loop-free initial and final policies differing on 1..max_diff switches.

    Every third seed keeps drawing (up to a bound) until the brute-force
    permutation oracle finds no valid order, so impossible updates are well
    represented; the label comes from the oracle, not from the code under test.
    """
    rng = random.Random(seed)
    want_impossible = seed % 3 == 0
    for attempt in range(200):
        inst = _draw(rng, seed, max_diff)
        if not want_impossible or attempt == 199:
            return inst
        if not brute_valid_orders(inst.topology, inst.initial, inst.final, inst.spec, inst.space, limit=1):
            return inst
    raise AssertionError("unreachable")


def _draw(rng, seed, max_diff) -> Instance:
    while True:
        space = random_space(rng)
        topo = random_topology(rng)
        initial = None
        for _ in range(30):
            cand = random_policy(rng, topo, space)
            if brute_loop_free(topo, cand, space):
                initial = cand
                break
        if initial is None:
            continue
        final = None
        for _ in range(30):
            k = rng.randint(1, min(max_diff, len(topo.switches)))
            changed = rng.sample(sorted(topo.switches), k)
            table = {s: initial[s] for s in topo.switches}
            for s in changed:
                table[s] = random_switch_policy(rng, topo, space, s)
            cand = NetworkPolicy(topo, table)
            if cand != initial and brute_loop_free(topo, cand, space):
                final = cand
                break
        if final is None:
            continue
        spec = _pick_spec(rng, topo, space, initial, final)
        return Instance(seed, topo, space, initial, final, spec)


def loopfree_update_instance(seed: int):
    """A loop-free policy plus a one-switch update of it (the result may loop)."""
    rng = random.Random(seed)
    while True:
        space = random_space(rng)
        topo = random_topology(rng)
        for _ in range(30):
            before = random_policy(rng, topo, space)
            if brute_loop_free(topo, before, space):
                break
        else:
            continue
        s = rng.choice(sorted(topo.switches))
        table = {x: before[x] for x in topo.switches}
        table[s] = random_switch_policy(rng, topo, space, s)
        return topo, space, before, NetworkPolicy(topo, table), s


INSTANCE_SEEDS = range(100)
_CACHE: dict = {}


def instance(seed: int) -> Instance:
    if seed not in _CACHE:
        _CACHE[seed] = random_instance(seed)
    return _CACHE[seed]
