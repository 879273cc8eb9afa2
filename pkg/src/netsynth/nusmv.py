"""NuSMV model emission and an optional bridge to an external NuSMV binary."""
from __future__ import annotations

import os
import re
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .checker import Counterexample, Verdict, trace_switches
from .ltl import Formula, Next, format_ltl, resolve
from .model import LocatedPacket, NetworkPolicy, PacketSpace, Topology

ENV_VAR = "NETSYNTH_NUSMV"
START = "START"

RESERVED = {
    "MODULE", "VAR", "IVAR", "FROZENVAR", "DEFINE", "ASSIGN", "INIT", "INVAR", "TRANS",
    "SPEC", "CTLSPEC", "LTLSPEC", "PSLSPEC", "INVARSPEC", "COMPUTE", "FAIRNESS", "JUSTICE",
    "COMPASSION", "CONSTANTS", "ISA", "PRED", "MIRROR", "case", "esac", "next", "init",
    "self", "process", "array", "of", "boolean", "integer", "real", "word", "signed",
    "unsigned", "union", "in", "mod", "xor", "xnor", "TRUE", "FALSE", "X", "F", "G", "U",
    "V", "Y", "Z", "H", "O", "S", "T", "A", "E", "AX", "AF", "AG", "AU", "EX", "EF", "EG",
    "EU", "ABF", "ABG", "EBF", "EBG", "BU", "count", "abs", "max", "min", "toint", "bool",
    "swconst", "uwconst", "sizeof", "floor", "extend", "resize", "signed", "unsigned",
    "word1", "READ", "WRITE", "CONSTARRAY", "typeof", "main", "running",
}

_PLAIN = re.compile(r"[A-Za-z0-9_]")


class NusmvError(RuntimeError):
    pass


class NusmvUnavailable(NusmvError):
    """No NuSMV binary could be found."""


class NusmvFailed(NusmvError):
    """The binary exited with a nonzero status."""


class NusmvOutputError(NusmvError):
    """The binary's output could not be understood."""


class MangleError(ValueError):
    pass


def mangle(name: str) -> str:
    """Reversible mapping into NuSMV identifiers: other characters become ``$XX`` escapes."""
    if not name:
        raise MangleError("empty names cannot be mangled")
    out = []
    for i, ch in enumerate(name):
        escape = not _PLAIN.match(ch) or (i == 0 and ch.isdigit())
        if escape:
            for b in ch.encode("utf-8"):
                out.append(f"${b:02X}")
        else:
            out.append(ch)
    text = "".join(out)
    if text in RESERVED:
        text = f"${ord(text[0]):02X}" + text[1:]
    return text


def demangle(text: str) -> str:
    raw = bytearray()
    i = 0
    while i < len(text):
        if text[i] == "$":
            raw.append(int(text[i + 1:i + 3], 16))
            i += 3
        else:
            raw.extend(text[i].encode())
            i += 1
    return raw.decode("utf-8")


@dataclass(frozen=True)
class NusmvModel:
    text: str
    var_order: tuple
    shifted: bool = False

    def write(self, path) -> None:
        Path(path).write_text(self.text)


def _check_names(topo: Topology, space: PacketSpace) -> None:
    if START in topo.ports:
        raise MangleError(f"port name {START!r} is reserved for the entry state")
    variables = {"port"} | set(space.names)
    if "port" in space:
        raise MangleError("a packet field may not be called 'port'")
    seen: dict[str, str] = {}
    for name in list(topo.ports) + list(space.names) + [v for _, vals in space.fields for v in vals]:
        m = mangle(name)
        if seen.setdefault(m, name) != name:
            raise MangleError(f"names {seen[m]!r} and {name!r} collide after mangling")
    for _, vals in space.fields:
        for v in vals:
            if v in variables:
                raise MangleError(f"value {v!r} clashes with a variable name")


def _guard_text(port: str, guard) -> str:
    parts = [f"port = {mangle(port)}"] + [f"{mangle(k)} = {mangle(v)}" for k, v in guard]
    return " & ".join(parts)


def _fully_covered(sp, port: str, space: PacketSpace) -> bool:
    rules = sp.rules_for(port)
    return all(any(r.matches(port, pkt) for r in rules) for pkt in space.packets())


def emit_nusmv(topo: Topology, policy: NetworkPolicy, f: Formula, space: PacketSpace,
               shift: bool = False) -> NusmvModel:
    """Render one configuration as a NuSMV module.

    Rules keep their first-match order within a port; ports are listed in
    sorted order. With ``shift`` the property is wrapped in ``X`` so that it
    is evaluated from the ingress step rather than the entry state.
    """
    resolve(f, topo, space)
    _check_names(topo, space)
    special = [START, topo.world, topo.drop]
    plain = sorted(p for p in topo.ports if not topo.is_terminal(p))
    lines = ["MODULE main", "VAR"]
    lines.append("    port : {" + ", ".join(mangle(p) for p in plain + special) + "};")
    for name, vals in space.fields:
        lines.append(f"    {mangle(name)} : {{" + ", ".join(mangle(v) for v in vals) + "};")
    lines.append("ASSIGN")
    lines.append("    next(port) := case")
    if topo.ingress:
        lines.append(f"        port = {START} : {{" + ", ".join(mangle(p) for p in topo.sorted_ingress) + "};")
    else:
        lines.append(f"        port = {START} : {{{START}}};")
    incomplete = False
    rewriting: dict[str, list] = {}
    for p in plain:
        if p not in topo.owner:
            incomplete = True
            continue
        sp = policy[topo.switch_of(p)]
        for r in sp.rules_for(p):
            lines.append(f"        {_guard_text(p, r.guard)} : {{{mangle(r.out_port)}}};")
            for k, _ in r.rewrites:
                rewriting.setdefault(k, [])
                if p not in rewriting[k]:
                    rewriting[k].append(p)
        if not _fully_covered(sp, p, space):
            incomplete = True
    for t in (topo.world, topo.drop):
        lines.append(f"        port = {mangle(t)} : {{{mangle(t)}}};")
    if incomplete:
        lines.append(f"        TRUE : {{{mangle(topo.drop)}}};")
    lines.append("    esac;")
    for name, _ in space.fields:
        m = mangle(name)
        if name not in rewriting:
            lines.append(f"    next({m}) := {m};")
            continue
        lines.append(f"    next({m}) := case")
        for p in rewriting[name]:
            for r in policy[topo.switch_of(p)].rules_for(p):
                value = dict(r.rewrites).get(name)
                lines.append(f"        {_guard_text(p, r.guard)} : {m if value is None else mangle(value)};")
        lines.append(f"        TRUE : {m};")
        lines.append("    esac;")
    lines.append(f"INIT port = {START};")
    g = Next(f) if shift else f
    lines.append("LTLSPEC " + format_ltl(g, true_word="TRUE", false_word="FALSE", name=mangle) + ";")
    return NusmvModel("\n".join(lines) + "\n", ("port",) + space.names, shift)


# -- running the binary ------------------------------------------------------

def find_binary(path: str | None = None) -> str:
    candidate = path or os.environ.get(ENV_VAR) or shutil.which("NuSMV") or shutil.which("nusmv")
    if not candidate:
        raise NusmvUnavailable(f"NuSMV not found (pass a path or set {ENV_VAR})")
    if os.sep in candidate and not os.access(candidate, os.X_OK):
        raise NusmvUnavailable(f"{candidate} is not an executable file")
    resolved = shutil.which(candidate) or (candidate if os.access(candidate, os.X_OK) else None)
    if resolved is None:
        raise NusmvUnavailable(f"{candidate} is not an executable file")
    return resolved


_SPEC_LINE = re.compile(r"^-- specification .* is (true|false)\s*$")
_STATE_LINE = re.compile(r"^\s*->\s*State:\s*\S+\s*<-\s*$")
_ASSIGN_LINE = re.compile(r"^\s*([A-Za-z_$][A-Za-z0-9_$#\-\.\[\]]*)\s*=\s*(\S+)\s*$")


def parse_output(text: str, space: PacketSpace | None = None, topo: Topology | None = None) -> Verdict:
    """Turn NuSMV's textual output for a single LTLSPEC into a Verdict."""
    lines = text.splitlines()
    result = None
    start = 0
    for i, line in enumerate(lines):
        m = _SPEC_LINE.match(line.strip())
        if m:
            result = m.group(1) == "true"
            start = i + 1
            break
    if result is None:
        raise NusmvOutputError("no '-- specification ... is true/false' line in NuSMV output")
    if result:
        return Verdict(True)
    states: list[dict] = []
    current: dict = {}
    for line in lines[start:]:
        if _SPEC_LINE.match(line.strip()):
            break
        if _STATE_LINE.match(line):
            current = dict(current)
            states.append(current)
            continue
        m = _ASSIGN_LINE.match(line)
        if m and states:
            current[demangle(m.group(1))] = demangle(m.group(2))
    trace = []
    for st in states:
        port = st.get("port")
        if port is None or port == START:
            continue
        pkt = None
        if space is not None:
            try:
                pkt = space.packet(**{k: st[k] for k in space.names})
            except KeyError:
                raise NusmvOutputError("counterexample state lacks a packet field") from None
        lp = LocatedPacket(port, pkt)
        if trace and trace[-1] == lp and topo is not None and topo.is_terminal(port):
            continue  # lasso on WORLD/DROP
        trace.append(lp)
    switches = trace_switches(topo, trace) if topo is not None else ()
    return Verdict(False, Counterexample("property", tuple(trace), switches))


def run_nusmv(model: NusmvModel, binary_path: str | None = None, *, space=None, topo=None,
              timeout: float = 600.0) -> Verdict:
    binary = find_binary(binary_path)
    with tempfile.TemporaryDirectory() as tmp:
        src = Path(tmp) / "model.smv"
        model.write(src)
        try:
            proc = subprocess.run([binary, str(src)], capture_output=True, text=True, timeout=timeout)
        except FileNotFoundError as exc:
            raise NusmvUnavailable(str(exc)) from None
    if proc.returncode != 0:
        raise NusmvFailed(f"NuSMV exited with status {proc.returncode}: {proc.stderr.strip()[:500]}")
    return parse_output(proc.stdout, space, topo)
