"""Explicit-state exploration of the network transition system.

This is an oracle for cross-checking plan validation on tiny instances. It
does not rely on carefulness: it interleaves packet moves, update, wait and
new-packet transitions and checks every complete one-packet trace contained
in the explored network traces.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .checker import Counterexample, trace_switches
from .ltl import Formula, eval_lasso, resolve
from .model import LocatedPacket, NetworkPolicy, PacketSpace, Topology, apply_update, is_wait, policy_lookup


class SimulationBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationReport:
    ok: bool
    reason: str = ""
    cex: Counterexample | None = None
    states: int = 0

    def __bool__(self):
        return self.ok


def simulate_semantics(topo: Topology, initial: NetworkPolicy, seq, f: Formula, space: PacketSpace,
                       max_packets: int | None = None, max_states: int = 2_000_000) -> SimulationReport:
    """Explore every network trace of ``seq`` from ``initial`` with at most ``max_packets`` new packets.

    A state is (packet position, commands consumed, wait flag, in-flight path).
    The in-flight path records the located packets since the packet entered
    together with the command index at each step; it is cleared once the
    packet reaches WORLD or DROP, at which point the completed trace (and each
    of its suffixes starting on an ingress port) is checked against ``f``.
    A packet that revisits a located position without any command firing in
    between can stay in the network forever, which violates wait-correctness.
    """
    resolve(f, topo, space)
    seq = list(seq)
    n = len(seq)
    if max_packets is None:
        max_packets = n + 1
    configs = [initial]
    for cmd in seq:
        configs.append(configs[-1] if is_wait(cmd) else apply_update(configs[-1], cmd))
    packets = list(space.packets())
    starts = [LocatedPacket(p, pkt) for p in topo.sorted_ingress for pkt in packets]

    checked: set = set()

    def check_complete(path) -> SimulationReport | None:
        trace = tuple(lp for lp, _ in path)
        for i, lp in enumerate(trace):
            if lp.port not in topo.ingress:
                continue
            sub = trace[i:]
            if sub in checked:
                continue
            checked.add(sub)
            if not eval_lasso(f, sub):
                cex = Counterexample("property", sub, trace_switches(topo, sub))
                return SimulationReport(False, "contained one-packet trace violates the specification", cex)
        return None

    best: dict = {}
    queue: deque = deque()

    def push(state, gens, front):
        old = best.get(state)
        if old is not None and old <= gens:
            return
        best[state] = gens
        if len(best) > max_states:
            raise SimulationBudgetExceeded(f"explored more than {max_states} states")
        (queue.appendleft if front else queue.append)((state, gens))

    for lp in starts:
        for w in (False, True):
            push((lp, 0, w, ((lp, 0),)), 0, False)

    while queue:
        state, gens = queue.popleft()
        if best.get(state, gens) < gens:
            continue
        lp, pos, w, path = state

        # packet move
        if not topo.is_terminal(lp.port):
            nxt = policy_lookup(configs[pos], lp)
            if topo.is_terminal(nxt.port):
                bad = check_complete(path + ((nxt, pos),))
                if bad is not None:
                    return SimulationReport(False, bad.reason, bad.cex, len(best))
                push((nxt, pos, w, None), gens, True)
            elif (nxt, pos) in path:
                trace = tuple(x for x, _ in path) + (nxt,)
                cex = Counterexample("loop", trace, trace_switches(topo, trace))
                return SimulationReport(False, "packet can stay in the network forever", cex, len(best))
            else:
                push((nxt, pos, w, path + ((nxt, pos),)), gens, True)

        # update / wait
        if pos < n:
            cmd = seq[pos]
            if is_wait(cmd):
                push((lp, pos + 1, True, path), gens, True)
            elif not w:
                push((lp, pos + 1, False, path), gens, True)

        # new packet
        if gens < max_packets:
            for start in starts:
                push((start, pos, False, ((start, pos),)), gens + 1, False)

    return SimulationReport(True, states=len(best))
