"""Per-configuration verification: loops, traces, LTL model checking, plans."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterator

from .ltl import Formula, eval_lasso, resolve
from .model import (
    LocatedPacket, ModelError, NetworkPolicy, PacketSpace, Topology, Update,
    apply_update, is_wait, policy_lookup,
)

PACKET = "packet"
EXISTENTIAL = "existential"
LOOP_MODES = (PACKET, EXISTENTIAL)


class LoopInvariantError(RuntimeError):
    """A trace ran longer than the port count allows for a loop-free policy."""


@dataclass(frozen=True)
class Counterexample:
    kind: str  # "property" or "loop"
    trace: tuple
    switches: tuple

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "trace": [{"port": lp.port,
                       "packet": None if lp.packet is None else dict(lp.packet)}
                      for lp in self.trace],
            "switches": list(self.switches),
        }

    def describe(self) -> str:
        def show(lp):
            if lp.packet is None:
                return lp.port
            return f"{lp.port}[" + ",".join(f"{k}={v}" for k, v in lp.packet.items()) + "]"
        return f"{self.kind} counterexample: " + " -> ".join(show(lp) for lp in self.trace)


@dataclass(frozen=True)
class Verdict:
    ok: bool
    cex: Counterexample | None = None

    def __post_init__(self):
        if self.ok != (self.cex is None):
            raise ValueError("a verdict carries a counterexample iff it is negative")

    def __bool__(self):
        return self.ok


OK = Verdict(True)


def trace_switches(topo: Topology, trace) -> tuple:
    """Switches the trace is processed by, in order (the owners of its non-terminal ports)."""
    return tuple(topo.switch_of(lp.port) for lp in trace if not topo.is_terminal(lp.port))


def _cex(kind: str, topo: Topology, trace) -> Verdict:
    trace = tuple(trace)
    return Verdict(False, Counterexample(kind, trace, trace_switches(topo, trace)))


def seeds(topo: Topology, space: PacketSpace) -> Iterator[LocatedPacket]:
    """Every (ingress port, packet) start, ingress-major in sorted port order."""
    packets = list(space.packets())
    for port in topo.sorted_ingress:
        for pkt in packets:
            yield LocatedPacket(port, pkt)


# -- loops -------------------------------------------------------------------

def _first_repeat(topo, policy, start, cs=None):
    """Follow ``start``; return the trace up to the first repeated port or switch, else None."""
    seen_ports, seen_switches = set(), set()
    trace = [start]
    cur = start
    while not topo.is_terminal(cur.port):
        sw = topo.switch_of(cur.port)
        if cur.port in seen_ports or sw in seen_switches:
            if cs is None or cs in seen_switches:
                return trace
            return None
        seen_ports.add(cur.port)
        seen_switches.add(sw)
        cur = policy_lookup(policy, cur)
        trace.append(cur)
    return None


def has_loops(topo: Topology, policy: NetworkPolicy, space: PacketSpace) -> Verdict:
    """Negative iff some packet entering at an ingress port meets a port or switch twice."""
    for start in seeds(topo, space):
        trace = _first_repeat(topo, policy, start)
        if trace is not None:
            return _cex("loop", topo, trace)
    return OK


def has_new_loops(topo: Topology, policy: NetworkPolicy, cs: str, space: PacketSpace) -> Verdict:
    """Like has_loops, restricted to packet paths through the just-updated switch ``cs``.

    Paths avoiding ``cs`` are unchanged by the update, so for a policy that was
    loop-free before the update this agrees with has_loops.
    """
    for start in seeds(topo, space):
        trace = _first_repeat(topo, policy, start, cs)
        if trace is not None:
            return _cex("loop", topo, trace)
    return OK


def forwarding_graph(topo: Topology, policy: NetworkPolicy) -> dict:
    """Port -> ports some packet can be forwarded to (rules only; terminal ports omitted)."""
    graph: dict[str, set] = {p: set() for p in topo.ports if not topo.is_terminal(p)}
    for s in topo.switches:
        for r in policy[s].rules:
            if not topo.is_terminal(r.out_port):
                graph[r.in_port].add(r.out_port)
    return graph


def _bfs(graph, sources, stop=None):
    """Multi-source BFS over paths of length >= 1; returns (parents, hit)."""
    parent: dict = {}
    queue = deque()
    for src in sources:
        for nxt in sorted(graph.get(src, ())):
            if nxt not in parent:
                parent[nxt] = src
                if stop is not None and stop(nxt):
                    return parent, nxt
                queue.append(nxt)
    while queue:
        cur = queue.popleft()
        for nxt in sorted(graph.get(cur, ())):
            if nxt not in parent:
                parent[nxt] = cur
                if stop is not None and stop(nxt):
                    return parent, nxt
                queue.append(nxt)
    return parent, None


def _path(parent, sources, end) -> list:
    path = [end]
    while True:
        prev = parent[path[-1]]
        path.append(prev)
        if prev in sources:
            break
    path.reverse()
    return path


def _walk_cex(topo, ports) -> Verdict:
    return _cex("loop", topo, [LocatedPacket(p, None) for p in ports])


def has_loops_existential(topo: Topology, policy: NetworkPolicy) -> Verdict:
    """Negative iff some port walk (any packet per hop) repeats a switch or port."""
    graph = forwarding_graph(topo, policy)
    for s in sorted(topo.switches):
        own = set(topo.inports_of.get(s, ()))
        if not own:
            continue
        for src in sorted(own):
            parent, hit = _bfs(graph, [src], stop=own.__contains__)
            if hit is not None:
                return _walk_cex(topo, _path(parent, {src}, hit))
    return OK


def _reverse(graph) -> dict:
    rev: dict[str, set] = {p: set() for p in graph}
    for p, outs in graph.items():
        for q in outs:
            rev.setdefault(q, set()).add(p)
    return rev


def has_new_loops_existential(topo: Topology, policy: NetworkPolicy, cs: str) -> Verdict:
    """Existential loops through ``cs``: a walk a ->* c ->* b with a, b inports of one switch."""
    graph = forwarding_graph(topo, policy)
    rev = _reverse(graph)
    own = topo.inports_of.get(cs, ())
    for c in own:
        fwd, _ = _bfs(graph, [c])
        back, _ = _bfs(rev, [c])
        if c in fwd:
            path = _path(fwd, {c}, c)
            return _walk_cex(topo, path)
        reach_fwd: dict[str, str] = {}
        for q in sorted(fwd):
            reach_fwd.setdefault(topo.switch_of(q), q)
        for a in sorted(back):
            sw = topo.switch_of(a)
            if sw in reach_fwd:
                b = reach_fwd[sw]
                head = list(reversed(_path(back, {c}, a)))  # a ... c
                tail = _path(fwd, {c}, b)  # c ... b
                return _walk_cex(topo, head + tail[1:])
        for q in own:
            if q in fwd:
                return _walk_cex(topo, _path(fwd, {c}, q))
    return OK


def loop_check(topo, policy, space, mode: str = PACKET) -> Verdict:
    if mode == PACKET:
        return has_loops(topo, policy, space)
    if mode == EXISTENTIAL:
        return has_loops_existential(topo, policy)
    raise ValueError(f"unknown loop mode {mode!r}")


def new_loop_check(topo, policy, cs, space, mode: str = PACKET) -> Verdict:
    if mode == PACKET:
        return has_new_loops(topo, policy, cs, space)
    if mode == EXISTENTIAL:
        return has_new_loops_existential(topo, policy, cs)
    raise ValueError(f"unknown loop mode {mode!r}")


# -- traces and model checking ----------------------------------------------

def follow(topo: Topology, policy: NetworkPolicy, start: LocatedPacket) -> tuple:
    """The complete one-packet trace from ``start``; requires a terminating path."""
    bound = len(topo.ports) + 1
    trace = [start]
    cur = start
    while not topo.is_terminal(cur.port):
        if len(trace) > bound:
            raise LoopInvariantError(f"trace from {start.port} exceeded {bound} steps")
        cur = policy_lookup(policy, cur)
        trace.append(cur)
    return tuple(trace)


def enumerate_traces(topo: Topology, policy: NetworkPolicy, space: PacketSpace):
    for start in seeds(topo, space):
        yield follow(topo, policy, start)


def model_check(topo: Topology, policy: NetworkPolicy, f: Formula, space: PacketSpace) -> Verdict:
    resolve(f, topo, space)
    for trace in enumerate_traces(topo, policy, space):
        if not eval_lasso(f, trace):
            return _cex("property", topo, trace)
    return OK


# -- transitions between two configurations ---------------------------------

def hybrid_traces(topo, before: NetworkPolicy, after: NetworkPolicy, switch: str, start):
    """Traces of one packet when ``switch`` flips from ``before`` to ``after`` at step k.

    Yields ``(trace, terminated)`` for every distinct flip point. A trace is
    cut and reported as not terminated at its first repeated port or switch,
    the same notion of loop the per-configuration check uses.
    """
    seen = set()
    k = 0
    while True:
        trace = [start]
        cur = start
        step = 0
        terminated = True
        ports_seen, switches_seen = set(), set()
        while not topo.is_terminal(cur.port):
            sw = topo.switch_of(cur.port)
            if cur.port in ports_seen or sw in switches_seen:
                terminated = False
                break
            ports_seen.add(cur.port)
            switches_seen.add(sw)
            pol = after if (sw == switch and step >= k) else before
            cur = policy_lookup(pol, cur)
            trace.append(cur)
            step += 1
        key = tuple(trace)
        if key not in seen:
            seen.add(key)
            yield key, terminated
        if step <= k:
            break  # every step already used the old policy; larger k change nothing
        k += 1


def check_transition(topo, before, after, switch, f, space) -> Verdict:
    """Every hybrid trace of the single-switch update satisfies ``f`` and is loop-free."""
    resolve(f, topo, space)
    for start in seeds(topo, space):
        for trace, terminated in hybrid_traces(topo, before, after, switch, start):
            if not terminated:
                return _cex("loop", topo, trace)
            if not eval_lasso(f, trace):
                return _cex("property", topo, trace)
    return OK


# -- plans -------------------------------------------------------------------

@dataclass(frozen=True)
class PlanReport:
    ok: bool
    reason: str = ""
    step: int | None = None
    cex: Counterexample | None = None

    def __bool__(self):
        return self.ok

    def describe(self) -> str:
        if self.ok:
            return "plan is valid"
        where = "" if self.step is None else f" (at configuration {self.step})"
        text = f"{self.reason}{where}"
        if self.cex is not None:
            text += "\n  " + self.cex.describe()
        return text


def _simple(seq) -> PlanReport | None:
    seen = set()
    for i, cmd in enumerate(seq):
        if is_wait(cmd):
            continue
        if not isinstance(cmd, Update):
            return PlanReport(False, f"command {i} is neither an update nor a wait", i)
        if cmd.switch in seen:
            return PlanReport(False, f"not simple: switch {cmd.switch!r} is updated twice", i)
        seen.add(cmd.switch)
    return None


def validate_plan(topo, initial: NetworkPolicy, seq, f: Formula, space: PacketSpace,
                  final: NetworkPolicy | None = None, loop_mode: str = PACKET) -> PlanReport:
    """Check that ``seq`` is simple and careful, hence correct, from ``initial``."""
    seq = list(seq)
    bad = _simple(seq)
    if bad is not None:
        return bad
    for i, cmd in enumerate(seq):
        if i % 2 == 1 and not is_wait(cmd):
            return PlanReport(False, f"careful shape: command {i} must be a wait", i)
    try:
        configs = [initial]
        for cmd in seq:
            configs.append(configs[-1] if is_wait(cmd) else apply_update(configs[-1], cmd))
    except ModelError as exc:
        return PlanReport(False, f"invalid update: {exc}")
    resolve(f, topo, space)
    for i, cfg in enumerate(configs):
        if i > 0 and is_wait(seq[i - 1]):
            continue  # same configuration as before the wait
        v = loop_check(topo, cfg, space, loop_mode)
        if not v.ok:
            return PlanReport(False, "configuration has a forwarding loop", i, v.cex)
        v = model_check(topo, cfg, f, space)
        if not v.ok:
            return PlanReport(False, "configuration violates the specification", i, v.cex)
    if final is not None and configs[-1] != final:
        return PlanReport(False, "plan does not reach the final configuration", len(configs) - 1)
    return PlanReport(True)


def validate_transitions(topo, initial: NetworkPolicy, seq, f: Formula, space: PacketSpace,
                         final: NetworkPolicy | None = None, loop_mode: str = PACKET) -> PlanReport:
    """Check a plan by transition checking: every packet may see any single update mid-flight.

    Waits are ignored; each update step is verified with all of its hybrid traces.
    """
    seq = list(seq)
    bad = _simple(seq)
    if bad is not None:
        return bad
    resolve(f, topo, space)
    v = loop_check(topo, initial, space, loop_mode)
    if not v.ok:
        return PlanReport(False, "initial configuration has a forwarding loop", 0, v.cex)
    v = model_check(topo, initial, f, space)
    if not v.ok:
        return PlanReport(False, "initial configuration violates the specification", 0, v.cex)
    cur = initial
    for i, cmd in enumerate(seq):
        if is_wait(cmd):
            continue
        try:
            nxt = apply_update(cur, cmd)
        except ModelError as exc:
            return PlanReport(False, f"invalid update: {exc}", i)
        v = check_transition(topo, cur, nxt, cmd.switch, f, space)
        if not v.ok:
            return PlanReport(False, f"updating {cmd.switch!r} admits a violating in-flight trace", i + 1, v.cex)
        cur = nxt
    if final is not None and cur != final:
        return PlanReport(False, "plan does not reach the final configuration", len(seq))
    return PlanReport(True)
