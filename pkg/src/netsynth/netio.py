"""JSON network descriptions and plan files."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .model import (
    WAIT, ModelError, NetworkPolicy, PacketSpace, Rule, SwitchPolicy, Topology, Update,
    is_wait, validate_topology,
)

NETWORK_KEYS = {"fields", "ports", "switches", "inport", "outport", "ingress", "world", "drop", "policies"}
RULE_KEYS = {"key", "in_port", "guard", "rewrites", "out_port"}
REQUIRED_RULE_KEYS = {"in_port", "out_port"}


class FormatError(ValueError):
    pass


@dataclass
class Network:
    topology: Topology
    space: PacketSpace
    policies: dict  # name -> NetworkPolicy

    def policy(self, name: str) -> NetworkPolicy:
        try:
            return self.policies[name]
        except KeyError:
            raise FormatError(f"no policy named {name!r} (have {sorted(self.policies)})") from None


def _rule_from_json(obj, where: str) -> Rule:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: rule must be an object")
    unknown = set(obj) - RULE_KEYS
    if unknown:
        raise FormatError(f"{where}: unknown rule keys {sorted(unknown)}")
    missing = REQUIRED_RULE_KEYS - set(obj)
    if missing:
        raise FormatError(f"{where}: missing rule keys {sorted(missing)}")
    for part in ("guard", "rewrites"):
        if not isinstance(obj.get(part, {}), dict):
            raise FormatError(f"{where}: {part} must be an object")
    key = obj.get("key")
    return Rule.make(obj["in_port"], obj["out_port"], obj.get("guard"), obj.get("rewrites"),
                     None if key is None else str(key))


def network_from_json(data: dict) -> Network:
    if not isinstance(data, dict):
        raise FormatError("network description must be a JSON object")
    unknown = set(data) - NETWORK_KEYS
    if unknown:
        raise FormatError(f"unknown top-level keys {sorted(unknown)}")
    missing = {"fields", "ports", "switches", "inport", "outport", "ingress", "policies"} - set(data)
    if missing:
        raise FormatError(f"missing top-level keys {sorted(missing)}")
    fields = data["fields"]
    if not isinstance(fields, dict):
        raise FormatError("'fields' must map field names to value lists")
    space = PacketSpace([(k, [str(v) for v in vals]) for k, vals in fields.items()])
    world = data.get("world", "WORLD")
    drop = data.get("drop", "DROP")
    topo = Topology.build(data["switches"], data["ports"], data["ingress"],
                          [tuple(x) for x in data["inport"]], [tuple(x) for x in data["outport"]],
                          world, drop)
    problems = validate_topology(topo, space)
    if problems:
        raise FormatError("invalid topology: " + "; ".join(problems))
    policies = {}
    for name, table in data["policies"].items():
        if not isinstance(table, dict):
            raise FormatError(f"policy {name!r} must map switches to rule lists")
        sw_pols = {}
        for sw, rules in table.items():
            sw_pols[sw] = SwitchPolicy(sw, tuple(
                _rule_from_json(r, f"policy {name!r} switch {sw!r} rule {i}") for i, r in enumerate(rules)))
        try:
            policies[name] = NetworkPolicy(topo, sw_pols)
        except ModelError as exc:
            raise FormatError(f"policy {name!r}: {exc}") from None
        for sp in sw_pols.values():
            for r in sp.rules:
                for f_name, value in r.guard + r.rewrites:
                    if f_name not in space or value not in space.domain(f_name):
                        raise FormatError(f"policy {name!r} switch {sp.switch!r}: {f_name}={value} "
                                          "is outside the packet space")
    return Network(topo, space, policies)


def _rule_to_json(r: Rule) -> dict:
    out = {}
    if r.key is not None:
        out["key"] = r.key
    out["in_port"] = r.in_port
    out["guard"] = dict(r.guard)
    out["rewrites"] = dict(r.rewrites)
    out["out_port"] = r.out_port
    return out


def network_to_json(net: Network) -> dict:
    topo = net.topology
    special = {topo.world, topo.drop}
    return {
        "fields": {name: list(values) for name, values in net.space.fields},
        "switches": sorted(topo.switches),
        "ports": sorted(topo.ports - special),
        "ingress": sorted(topo.ingress),
        "inport": sorted([p, s] for p, s in topo.inport),
        "outport": sorted([s, p] for s, p in topo.outport),
        "world": topo.world,
        "drop": topo.drop,
        "policies": {
            name: {s: [_rule_to_json(r) for r in pol[s].rules] for s in sorted(pol)}
            for name, pol in net.policies.items()
        },
    }


def load_network(path) -> Network:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON ({exc})") from None
    return network_from_json(data)


def dump_network(net: Network, path) -> None:
    Path(path).write_text(json.dumps(network_to_json(net), indent=2, sort_keys=False) + "\n")


def read_spec(path_or_text: str) -> str:
    p = Path(path_or_text)
    if p.exists():
        return p.read_text()
    return path_or_text


# -- plans ---------------------------------------------------------------------

def plan_to_json(algorithm: str, commands, stats: dict, *, initial: str, final: str,
                 rule_granularity: bool) -> dict:
    cmds = []
    for cmd in commands:
        if is_wait(cmd):
            cmds.append({"type": "wait"})
        else:
            cmds.append({"type": "update", "switch": cmd.switch, "policy-ref": final})
    return {
        "algorithm": algorithm,
        "result": "plan",
        "initial": initial,
        "final": final,
        "rule_granularity": rule_granularity,
        "commands": cmds,
        "stats": stats,
    }


def plan_commands(data: dict, policies: dict) -> list:
    """Rebuild commands; ``policies`` maps policy names to (possibly reduced) NetworkPolicies."""
    if data.get("result", "plan") != "plan":
        raise FormatError("file does not contain a plan")
    out = []
    for i, c in enumerate(data.get("commands", [])):
        kind = c.get("type")
        if kind == "wait":
            out.append(WAIT)
        elif kind == "update":
            ref = c.get("policy-ref")
            if ref not in policies:
                raise FormatError(f"command {i}: unknown policy-ref {ref!r}")
            pol = policies[ref]
            sw = c.get("switch")
            if sw not in pol:
                raise FormatError(f"command {i}: unknown switch {sw!r}")
            out.append(Update(sw, pol[sw]))
        else:
            raise FormatError(f"command {i}: unknown command type {kind!r}")
    return out
