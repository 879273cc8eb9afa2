"""Network model: topologies, packets, rule-based switch policies, updates."""
from __future__ import annotations

import itertools
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import NamedTuple, Union


class ModelError(Exception):
    """Raised when a topology or policy violates the network model."""


class CompatibilityError(ModelError):
    pass


@dataclass(frozen=True, eq=False)
class Topology:
    switches: frozenset
    ports: frozenset
    ingress: frozenset
    inport: frozenset  # of (port, switch)
    outport: frozenset  # of (switch, port)
    world: str = "WORLD"
    drop: str = "DROP"
    # pseudo-switch -> physical switch, filled in by rule_granularity_reduce
    origin: Mapping = field(default_factory=dict)

    @classmethod
    def build(cls, switches, ports, ingress, inport, outport, world="WORLD",
              drop="DROP", origin=None) -> "Topology":
        ports = set(ports) | {world, drop}
        return cls(frozenset(switches), frozenset(ports), frozenset(ingress),
                   frozenset(map(tuple, inport)), frozenset(map(tuple, outport)),
                   world, drop, MappingProxyType(dict(origin or {})))

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (self.switches, self.ports, self.ingress, self.inport,
                self.outport, self.world, self.drop) == (
            other.switches, other.ports, other.ingress, other.inport,
            other.outport, other.world, other.drop)

    __hash__ = None

    def is_terminal(self, port: str) -> bool:
        return port == self.world or port == self.drop

    @cached_property
    def owner(self) -> Mapping:
        """Port -> the switch it is an input of (only for uniquely owned ports)."""
        counts: dict[str, list[str]] = {}
        for p, s in self.inport:
            counts.setdefault(p, []).append(s)
        return MappingProxyType({p: ss[0] for p, ss in counts.items() if len(ss) == 1})

    @cached_property
    def inports_of(self) -> Mapping:
        acc: dict[str, list[str]] = {s: [] for s in self.switches}
        for p, s in self.inport:
            acc.setdefault(s, []).append(p)
        return MappingProxyType({s: tuple(sorted(ps)) for s, ps in acc.items()})

    @cached_property
    def outports_of(self) -> Mapping:
        acc: dict[str, set[str]] = {s: set() for s in self.switches}
        for s, p in self.outport:
            acc.setdefault(s, set()).add(p)
        return MappingProxyType({s: frozenset(ps) for s, ps in acc.items()})

    def switch_of(self, port: str) -> str:
        try:
            return self.owner[port]
        except KeyError:
            raise ModelError(f"port {port!r} is not the input of exactly one switch") from None

    def physical(self, switch: str) -> str:
        return self.origin.get(switch, switch)

    @cached_property
    def sorted_ingress(self) -> tuple:
        return tuple(sorted(self.ingress))


class PacketSpace:
    """Ordered header fields, each with a finite enumerated domain."""

    def __init__(self, fields):
        if isinstance(fields, Mapping):
            fields = fields.items()
        self.fields: tuple = tuple((name, tuple(values)) for name, values in fields)
        self._domains = {name: values for name, values in self.fields}

    def __repr__(self):
        return f"PacketSpace({dict(self.fields)!r})"

    def __eq__(self, other):
        return isinstance(other, PacketSpace) and self.fields == other.fields

    def __hash__(self):
        return hash(self.fields)

    @property
    def names(self) -> tuple:
        return tuple(name for name, _ in self.fields)

    def domain(self, name: str) -> tuple:
        return self._domains[name]

    def __contains__(self, name) -> bool:
        return name in self._domains

    @property
    def size(self) -> int:
        n = 1
        for _, values in self.fields:
            n *= len(values)
        return n

    def violations(self) -> list[str]:
        out = []
        if len(self._domains) != len(self.fields):
            out.append("duplicate field names")
        for name, values in self.fields:
            if not values:
                out.append(f"field {name!r} has an empty domain")
            if len(set(values)) != len(values):
                out.append(f"field {name!r} has duplicate values")
        return out

    def packet(self, **values) -> "Packet":
        return Packet(self, values)

    def packets(self) -> Iterator["Packet"]:
        """All packets, in field order with each domain in its listed order."""
        names = self.names
        for combo in itertools.product(*(values for _, values in self.fields)):
            yield Packet(self, dict(zip(names, combo)))


class Packet(Mapping):
    """An immutable total assignment of header values."""

    __slots__ = ("_values", "_key")

    def __init__(self, space: PacketSpace, values: Mapping):
        if set(values) != set(space.names):
            raise ModelError(f"packet fields {sorted(values)} do not match {list(space.names)}")
        for name, value in values.items():
            if value not in space.domain(name):
                raise ModelError(f"value {value!r} not in domain of field {name!r}")
        self._values = dict(values)
        self._key = tuple((name, self._values[name]) for name in space.names)

    @classmethod
    def _trusted(cls, key: tuple) -> "Packet":
        pkt = object.__new__(cls)
        pkt._key = key
        pkt._values = dict(key)
        return pkt

    def __getitem__(self, name):
        return self._values[name]

    def __iter__(self):
        return (name for name, _ in self._key)

    def __len__(self):
        return len(self._key)

    def __hash__(self):
        return hash(self._key)

    def __eq__(self, other):
        if isinstance(other, Packet):
            return self._key == other._key
        return NotImplemented

    def __lt__(self, other):
        return self._key < other._key

    def __repr__(self):
        return "Packet(" + ", ".join(f"{k}={v}" for k, v in self._key) + ")"

    def replace(self, changes) -> "Packet":
        if not changes:
            return self
        return Packet._trusted(tuple((k, changes.get(k, v)) for k, v in self._key))


class LocatedPacket(NamedTuple):
    port: str
    packet: Packet


def _frozen_items(mapping) -> tuple:
    return tuple(sorted(dict(mapping or {}).items()))


@dataclass(frozen=True)
class Rule:
    in_port: str
    out_port: str
    guard: tuple = ()
    rewrites: tuple = ()
    # alignment key for the rule-granularity reduction; not part of rule identity
    key: str | None = field(default=None, compare=False)

    @classmethod
    def make(cls, in_port, out_port, guard=None, rewrites=None, key=None) -> "Rule":
        return cls(in_port, out_port, _frozen_items(guard), _frozen_items(rewrites), key)

    def matches(self, port: str, pkt: Packet) -> bool:
        if port != self.in_port:
            return False
        for name, value in self.guard:
            if pkt[name] != value:
                return False
        return True

    def fire(self, pkt: Packet) -> LocatedPacket:
        return LocatedPacket(self.out_port, pkt.replace(dict(self.rewrites)))


@dataclass(frozen=True)
class SwitchPolicy:
    """First-match rule table of one switch."""

    switch: str
    rules: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    @cached_property
    def _by_port(self) -> dict:
        acc: dict[str, list[Rule]] = {}
        for r in self.rules:
            acc.setdefault(r.in_port, []).append(r)
        return acc

    def rules_for(self, port: str) -> list:
        return self._by_port.get(port, [])

    def lookup(self, port: str, pkt: Packet) -> LocatedPacket | None:
        for r in self._by_port.get(port, ()):
            if r.matches(port, pkt):
                return r.fire(pkt)
        return None


def compatibility_problems(topo: Topology, sp: SwitchPolicy, space: PacketSpace | None = None) -> list[str]:
    out = []
    if sp.switch not in topo.switches:
        return [f"unknown switch {sp.switch!r}"]
    for i, r in enumerate(sp.rules):
        where = f"switch {sp.switch!r} rule {r.key or i}"
        if (r.in_port, sp.switch) not in topo.inport:
            out.append(f"{where}: in_port {r.in_port!r} is not an input of the switch")
        if not topo.is_terminal(r.out_port) and (sp.switch, r.out_port) not in topo.outport:
            out.append(f"{where}: out_port {r.out_port!r} is not an output of the switch")
        if space is not None:
            for name, value in r.guard + r.rewrites:
                if name not in space or value not in space.domain(name):
                    out.append(f"{where}: {name}={value} outside the packet space")
    return out


class NetworkPolicy(Mapping):
    """Total map from switches to compatible switch policies."""

    def __init__(self, topology: Topology, table: Mapping, *, check: bool = True):
        self.topology = topology
        full = {s: SwitchPolicy(s) for s in topology.switches}
        full.update(table)
        if check:
            extra = set(full) - topology.switches
            if extra:
                raise ModelError(f"policy mentions unknown switches {sorted(extra)}")
            problems = [p for sp in full.values() for p in compatibility_problems(topology, sp)]
            if problems:
                raise CompatibilityError("; ".join(problems))
        self._table = full

    def __getitem__(self, switch) -> SwitchPolicy:
        return self._table[switch]

    def __iter__(self):
        return iter(self._table)

    def __len__(self):
        return len(self._table)

    def __eq__(self, other):
        if isinstance(other, NetworkPolicy):
            return self._table == other._table
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        return f"NetworkPolicy({len(self._table)} switches)"

    def lookup(self, lp: LocatedPacket) -> LocatedPacket:
        return policy_lookup(self, lp)


@dataclass(frozen=True)
class Update:
    switch: str
    policy: SwitchPolicy

    def __str__(self):
        return f"update {self.switch}"


class _Wait:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "WAIT"

    __str__ = __repr__

    def __reduce__(self):
        return (_Wait, ())


WAIT = _Wait()
Command = Union[Update, _Wait]


def is_wait(cmd) -> bool:
    return cmd is WAIT


def validate_topology(topo: Topology, space: PacketSpace | None = None) -> list[str]:
    """Return human-readable descriptions of every well-formedness violation."""
    out = []
    special = {topo.world, topo.drop}
    if topo.world == topo.drop:
        out.append("WORLD and DROP must be distinct ports")
    for p in sorted(special):
        if p not in topo.ports:
            out.append(f"special port {p!r} missing from ports")
        if p in topo.ingress:
            out.append(f"special port {p!r} may not be an ingress port")
    for p in sorted(topo.ingress - topo.ports):
        out.append(f"ingress port {p!r} is not a declared port")
    for p, s in sorted(topo.inport):
        if s not in topo.switches:
            out.append(f"inport ({p!r}, {s!r}) names an unknown switch")
        if p not in topo.ports:
            out.append(f"inport ({p!r}, {s!r}) names an unknown port")
    for s, p in sorted(topo.outport):
        if s not in topo.switches:
            out.append(f"outport ({s!r}, {p!r}) names an unknown switch")
        if p not in topo.ports:
            out.append(f"outport ({s!r}, {p!r}) names an unknown port")

    owners: dict[str, set] = {}
    for p, s in topo.inport:
        owners.setdefault(p, set()).add(s)
    feeders: dict[str, set] = {}
    for s, p in topo.outport:
        # pseudo-switches of one physical switch share its output links
        feeders.setdefault(p, set()).add(topo.physical(s))
    for p in sorted(topo.ports - special):
        n = len(owners.get(p, ()))
        if n != 1:
            out.append(f"port {p!r} is the input of {n} switches (expected exactly 1)")
        if p not in topo.ingress:
            m = len(feeders.get(p, ()))
            if m != 1:
                out.append(f"port {p!r} is the output of {m} switches (expected exactly 1)")
    for p in sorted(special):
        if owners.get(p):
            out.append(f"special port {p!r} may not be a switch input")
    if space is not None:
        out.extend(space.violations())
    return out


def policy_lookup(policy: NetworkPolicy, lp: LocatedPacket) -> LocatedPacket:
    """One packet move. Unmatched packets go to DROP; WORLD and DROP self-loop."""
    topo = policy.topology
    if topo.is_terminal(lp.port):
        return lp
    switch = topo.switch_of(lp.port)
    nxt = policy[switch].lookup(lp.port, lp.packet)
    if nxt is None:
        return LocatedPacket(topo.drop, lp.packet)
    return nxt


def apply_update(policy: NetworkPolicy, upd: Update) -> NetworkPolicy:
    topo = policy.topology
    if upd.switch != upd.policy.switch:
        raise CompatibilityError(f"update for {upd.switch!r} carries a policy for {upd.policy.switch!r}")
    problems = compatibility_problems(topo, upd.policy)
    if problems:
        raise CompatibilityError("; ".join(problems))
    table = dict(policy._table)
    table[upd.switch] = upd.policy
    return NetworkPolicy(topo, table, check=False)


def diff_switches(initial: NetworkPolicy, final: NetworkPolicy) -> list[str]:
    if initial.topology != final.topology:
        raise ModelError("policies are defined over different topologies")
    return sorted(s for s in initial.topology.switches if initial[s] != final[s])


def induced_policies(initial: NetworkPolicy, commands) -> list[NetworkPolicy]:
    seq = [initial]
    for cmd in commands:
        seq.append(seq[-1] if is_wait(cmd) else apply_update(seq[-1], cmd))
    return seq
