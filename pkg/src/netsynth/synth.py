"""Update synthesis: OrderUpdate (careful, per-configuration checking), ConfigPairs, Refine."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Union

from .checker import (
    PACKET, Counterexample, check_transition, loop_check, model_check, new_loop_check,
)
from .ltl import Formula, resolve
from .model import WAIT, NetworkPolicy, PacketSpace, Topology, Update, apply_update, diff_switches


class SearchBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class UpdateStatus:
    """Which of the differing switches already carry their final policy."""

    diff: tuple
    updated: frozenset = frozenset()

    def __getitem__(self, switch: str) -> bool:
        if switch not in self.diff:
            raise KeyError(switch)
        return switch in self.updated

    def with_updated(self, switch: str) -> "UpdateStatus":
        return UpdateStatus(self.diff, self.updated | {switch})

    @property
    def complete(self) -> bool:
        return len(self.updated) == len(self.diff)

    def bits(self) -> str:
        return "".join("1" if s in self.updated else "0" for s in self.diff)

    def as_dict(self) -> dict:
        return {s: s in self.updated for s in self.diff}


@dataclass(frozen=True)
class CexCube:
    """Required update statuses for a set of switches; every matching configuration is bad."""

    constraints: tuple  # sorted (switch, bool) pairs

    @classmethod
    def of(cls, mapping) -> "CexCube":
        if not mapping:
            raise ValueError("a counterexample cube needs at least one constraint")
        return cls(tuple(sorted(mapping.items())))

    def matches(self, status: UpdateStatus) -> bool:
        return all((s in status.updated) == v for s, v in self.constraints)


@dataclass(frozen=True)
class Plan:
    commands: tuple


@dataclass(frozen=True)
class Infeasible:
    reason: str


@dataclass(frozen=True)
class PreconditionFailure:
    reason: str


SynthResult = Union[Plan, Infeasible, PreconditionFailure]

NO_SEQUENCE = "No simple and careful update sequence exists."
LOOPY_ENDPOINTS = "Loops in initial or final configuration."


@dataclass
class SynthStats:
    model_check_calls: int = 0
    loop_check_calls: int = 0
    configs_visited: int = 0
    configs_pruned_by_cex: int = 0
    wall_time: float = 0.0
    cubes_learned: int = 0
    # visited configurations that were rejected or led to a dead end
    backtracks: int = 0

    def to_json(self) -> dict:
        return {
            "model_check_calls": self.model_check_calls,
            "loop_check_calls": self.loop_check_calls,
            "configs_visited": self.configs_visited,
            "configs_pruned_by_cex": self.configs_pruned_by_cex,
            "backtracks": self.backtracks,
            "wall_time_ms": round(self.wall_time * 1000, 3),
        }


@dataclass(frozen=True)
class SynthOptions:
    cex_learning: bool = True
    max_visited: int | None = None
    loop_mode: str = PACKET


def next_policies(current: NetworkPolicy, status: UpdateStatus, final: NetworkPolicy) -> list:
    return [(apply_update(current, Update(s, final[s])), s)
            for s in status.diff if s not in status.updated]


def analyze_cex(cex: Counterexample, status: UpdateStatus) -> CexCube:
    """Project the status onto the differing switches the counterexample went through.

    If it touched none of them only the exact current configuration is excluded.
    """
    touched = [s for s in cex.switches if s in status.diff]
    if not touched:
        return CexCube.of(status.as_dict())
    return CexCube.of({s: s in status.updated for s in touched})


def matches_wrong(status: UpdateStatus, cubes) -> bool:
    return any(c.matches(status) for c in cubes)


def _plan_from_order(order, final: NetworkPolicy, waits: bool) -> Plan:
    cmds = []
    for i, s in enumerate(order):
        if waits and i > 0:
            cmds.append(WAIT)
        cmds.append(Update(s, final[s]))
    return Plan(tuple(cmds))


def _check_endpoints(topo, initial, final, space, opts, stats):
    if initial.topology != final.topology or initial.topology != topo:
        raise ValueError("initial and final policies must share the given topology")
    stats.loop_check_calls += 2
    if not loop_check(topo, initial, space, opts.loop_mode).ok or \
            not loop_check(topo, final, space, opts.loop_mode).ok:
        return PreconditionFailure(LOOPY_ENDPOINTS)
    return None


def order_update(topo: Topology, initial: NetworkPolicy, final: NetworkPolicy, f: Formula,
                 space: PacketSpace, opts: SynthOptions = SynthOptions()):
    """Depth-first search for a simple, careful update order.

    Each visited configuration is checked on its own (new loops through the
    switch just updated, then the LTL property); learned counterexample cubes
    prune configurations without a model-checker call. The final
    configuration is checked like any other before it is accepted.
    """
    t0 = time.perf_counter()
    stats = SynthStats()
    resolve(f, topo, space)
    bad = _check_endpoints(topo, initial, final, space, opts, stats)
    if bad is not None:
        stats.wall_time = time.perf_counter() - t0
        return bad, stats

    diff = tuple(diff_switches(initial, final))
    visited: set = set()
    wrong: list[CexCube] = []

    def learn(cex, status):
        if opts.cex_learning:
            wrong.append(analyze_cex(cex, status))
            stats.cubes_learned += 1

    def dfs(policy: NetworkPolicy, status: UpdateStatus, cs):
        found = visit(policy, status, cs)
        if found is None:
            stats.backtracks += 1
        return found

    def visit(policy: NetworkPolicy, status: UpdateStatus, cs):
        if status.updated in visited:
            return None  # already visited
        visited.add(status.updated)
        stats.configs_visited += 1
        if opts.max_visited is not None and stats.configs_visited > opts.max_visited:
            raise SearchBudgetExceeded(f"visited more than {opts.max_visited} configurations")
        if matches_wrong(status, wrong):
            stats.configs_pruned_by_cex += 1
            return None  # previous counterexample applies
        if cs is not None:
            stats.loop_check_calls += 1
            v = new_loop_check(topo, policy, cs, space, opts.loop_mode)
            if not v.ok:
                learn(v.cex, status)
                return None
        stats.model_check_calls += 1
        v = model_check(topo, policy, f, space)
        if not v.ok:
            learn(v.cex, status)
            return None
        if status.complete:
            return []  # reached final configuration
        for nxt, s in next_policies(policy, status, final):
            rest = dfs(nxt, status.with_updated(s), s)
            if rest is not None:
                return [s] + rest
        return None

    try:
        order = dfs(initial, UpdateStatus(diff), None)
    except SearchBudgetExceeded as exc:
        stats.wall_time = time.perf_counter() - t0
        return PreconditionFailure(str(exc)), stats
    stats.wall_time = time.perf_counter() - t0
    if order is None:
        return Infeasible(NO_SEQUENCE), stats
    return _plan_from_order(order, final, waits=True), stats


@dataclass(frozen=True)
class EdgeCube:
    """A learned bad transition: updating ``switch`` whenever ``constraints`` hold."""

    switch: str
    constraints: tuple

    def matches(self, status: UpdateStatus, switch: str) -> bool:
        return switch == self.switch and all((s in status.updated) == v for s, v in self.constraints)


def _edge_cube(cex: Counterexample, status: UpdateStatus, switch: str) -> EdgeCube:
    touched = {s for s in cex.switches if s in status.diff and s != switch}
    if not touched:
        touched = set(status.diff) - {switch}
    return EdgeCube(switch, tuple(sorted((s, s in status.updated) for s in touched)))


def config_pairs(topo: Topology, initial: NetworkPolicy, final: NetworkPolicy, f: Formula,
                 space: PacketSpace, opts: SynthOptions = SynthOptions()):
    """Same search skeleton, but each step is verified on the pair of configurations.

    The switch being updated may flip at any point of a packet's path, so a
    step is accepted only if every such hybrid trace terminates and satisfies
    ``f``. Plans carry no waits.
    """
    t0 = time.perf_counter()
    stats = SynthStats()
    resolve(f, topo, space)
    bad = _check_endpoints(topo, initial, final, space, opts, stats)
    if bad is not None:
        stats.wall_time = time.perf_counter() - t0
        return bad, stats
    diff = tuple(diff_switches(initial, final))
    visited: set = set()
    wrong: list[EdgeCube] = []

    stats.model_check_calls += 1
    if not model_check(topo, initial, f, space).ok:
        stats.wall_time = time.perf_counter() - t0
        return Infeasible(NO_SEQUENCE), stats

    def dfs(policy, status):
        if status.complete:
            return []
        if status.updated in visited:
            return None
        visited.add(status.updated)
        stats.configs_visited += 1
        if opts.max_visited is not None and stats.configs_visited > opts.max_visited:
            raise SearchBudgetExceeded(f"visited more than {opts.max_visited} configurations")
        for nxt, s in next_policies(policy, status, final):
            if any(c.matches(status, s) for c in wrong):
                stats.configs_pruned_by_cex += 1
                continue
            stats.model_check_calls += 1
            v = check_transition(topo, policy, nxt, s, f, space)
            if not v.ok:
                if opts.cex_learning:
                    wrong.append(_edge_cube(v.cex, status, s))
                    stats.cubes_learned += 1
                continue
            rest = dfs(nxt, status.with_updated(s))
            if rest is not None:
                return [s] + rest
        return None

    try:
        order = dfs(initial, UpdateStatus(diff))
    except SearchBudgetExceeded as exc:
        stats.wall_time = time.perf_counter() - t0
        return PreconditionFailure(str(exc)), stats
    stats.wall_time = time.perf_counter() - t0
    if order is None:
        return Infeasible("No simple update sequence passes transition checking."), stats
    return _plan_from_order(order, final, waits=False), stats


def refine(topo: Topology, initial: NetworkPolicy, final: NetworkPolicy, f: Formula,
           space: PacketSpace, opts: SynthOptions = SynthOptions()):
    """Counterexample-guided refinement over update orders.

    The model lets at most one switch flip per tracked packet, at any point of
    its path. Each violating run yields the update order that led to it; that
    exact order prefix is forbidden and the model re-checked, until no
    permitted order violates the specification. The surviving complete order
    (if any) becomes a wait-separated plan.
    """
    t0 = time.perf_counter()
    stats = SynthStats()
    resolve(f, topo, space)
    bad = _check_endpoints(topo, initial, final, space, opts, stats)
    if bad is not None:
        stats.wall_time = time.perf_counter() - t0
        return bad, stats
    diff = tuple(diff_switches(initial, final))
    stats.model_check_calls += 1
    if not model_check(topo, initial, f, space).ok:
        stats.wall_time = time.perf_counter() - t0
        return Infeasible("Initial configuration violates the specification."), stats

    forbidden: set = set()
    edge_ok: dict = {}
    budget = opts.max_visited

    def safe(policy, status, s, nxt) -> bool:
        key = (status.updated, s)
        if key not in edge_ok:
            stats.model_check_calls += 1
            edge_ok[key] = check_transition(topo, policy, nxt, s, f, space).ok
        return edge_ok[key]

    def explore():
        """Walk the permitted order prefixes, forbidding each one that ends in a violation.

        Re-checking after a refinement would retrace the same safe prefixes in
        the same order, so the walk simply resumes after the forbidden prefix.
        """
        stack = [((), initial, UpdateStatus(diff))]
        while stack:
            prefix, policy, status = stack.pop()
            stats.configs_visited += 1
            if budget is not None and stats.configs_visited > budget:
                raise SearchBudgetExceeded(f"explored more than {budget} order prefixes")
            succ = []
            for nxt, s in next_policies(policy, status, final):
                p2 = prefix + (s,)
                if not safe(policy, status, s, nxt):
                    forbidden.add(p2)
                    stats.cubes_learned += 1
                    continue
                succ.append((p2, nxt, status.with_updated(s)))
            stack.extend(reversed(succ))

    def surviving_order():
        def go(prefix, policy, status):
            if status.complete:
                return list(prefix)
            for nxt, s in next_policies(policy, status, final):
                p2 = prefix + (s,)
                if p2 in forbidden:
                    continue
                found = go(p2, nxt, status.with_updated(s))
                if found is not None:
                    return found
            return None
        return go((), initial, UpdateStatus(diff))

    try:
        explore()
    except SearchBudgetExceeded as exc:
        stats.wall_time = time.perf_counter() - t0
        return PreconditionFailure(str(exc)), stats
    order = surviving_order()
    stats.wall_time = time.perf_counter() - t0
    if order is None:
        return Infeasible("Final configuration cannot be reached in the refined model."), stats
    return _plan_from_order(order, final, waits=True), stats


ALGORITHMS = {"order": order_update, "configpairs": config_pairs, "refine": refine}
