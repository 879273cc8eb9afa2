import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsynth import ltl
from netsynth.ltl import (
    FALSE, TRUE, And, Const, FieldIs, Finally, Globally, Implies, LtlNameError, LtlSyntaxError,
    Next, Not, Or, PortIs, Until, eval_lasso, format_ltl, normalize, parse_ltl, resolve,
)
from netsynth.model import LocatedPacket, PacketSpace
from netsynth.scenarios import FIREWALL_SPEC, firewall

from oracles import naive_holds

SPACE = PacketSpace([("a", ("0", "1")), ("b", ("x", "y", "z"))])
PORTS = ["p", "q", "r", "WORLD", "DROP"]


def test_fig2_conjunct_parses():
    f = parse_ltl("G (purpose = Other & src = Guest -> F port = DROP)")
    assert f == Globally(Implies(And(FieldIs("purpose", "Other"), FieldIs("src", "Guest")),
                                 Finally(PortIs("DROP"))))


def test_simple_parses():
    assert parse_ltl("port = WORLD") == PortIs("WORLD")
    assert parse_ltl("F G port = DROP") == Finally(Globally(PortIs("DROP")))
    assert parse_ltl("true | false") == Or(TRUE, FALSE)


def test_precedence_and_associativity():
    a, b, c = (FieldIs(n, "1") for n in "abc")
    assert parse_ltl("a = 1 | b = 1 & c = 1") == Or(a, And(b, c))
    assert parse_ltl("a = 1 -> b = 1 -> c = 1") == Implies(a, Implies(b, c))
    assert parse_ltl("a = 1 U b = 1 U c = 1") == Until(a, Until(b, c))
    assert parse_ltl("a = 1 & b = 1 U c = 1") == And(a, Until(b, c))
    assert parse_ltl("!a = 1 U b = 1") == Until(Not(a), b)
    assert parse_ltl("X a = 1 & b = 1") == And(Next(a), b)
    assert parse_ltl("a = 1 | b = 1 | c = 1") == Or(Or(a, b), c)


def test_operator_letters_usable_as_field_names():
    assert parse_ltl("F = 1 & G F X = 2") == And(FieldIs("F", "1"), Globally(Finally(FieldIs("X", "2"))))
    assert parse_ltl("U = a U port = DROP") == Until(FieldIs("U", "a"), PortIs("DROP"))


@pytest.mark.parametrize("text,pos", [
    ("", 0), ("port =", 6), ("(port = A", 9), ("port = A )", 9), ("a = 1 &", 7), ("F", 1), ("a ? b", 2),
])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(LtlSyntaxError) as err:
        parse_ltl(text)
    assert err.value.pos == pos


def test_name_resolution_is_separate():
    net, spec = firewall()
    f = parse_ltl("src = Martian -> F port = MOON")
    with pytest.raises(LtlNameError) as err:
        resolve(f, net.topology, net.space)
    assert "Martian" in str(err.value) and "MOON" in str(err.value)
    resolve(parse_ltl(spec), net.topology, net.space)


# -- evaluation ------------------------------------------------------------------

def _trace(*items):
    return tuple(LocatedPacket(p, SPACE.packet(a=a, b=b)) for p, a, b in items)


def test_single_state_lasso():
    t = _trace(("DROP", "0", "x"))
    assert eval_lasso(Globally(PortIs("DROP")), t)
    assert eval_lasso(Next(PortIs("DROP")), t) == eval_lasso(PortIs("DROP"), t)


def test_firewall_traces_against_spec():
    net, _ = firewall()
    f = parse_ltl(FIREWALL_SPEC)
    go = net.space.packet(src="Guest", purpose="Other")
    good = tuple(LocatedPacket(p, go) for p in ("I_0", "F3_0", "DROP"))
    bad = tuple(LocatedPacket(p, go) for p in ("I_0", "F3_0", "WORLD"))
    assert eval_lasso(f, good) is True
    assert eval_lasso(f, bad) is False
    assert naive_holds(f, bad) is False


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        eval_lasso(TRUE, ())


def formulas(depth=4):
    atoms = st.one_of(
        st.sampled_from(PORTS).map(PortIs),
        st.sampled_from([("a", "0"), ("a", "1"), ("b", "x"), ("b", "z")]).map(lambda t: FieldIs(*t)),
        st.sampled_from([TRUE, FALSE]),
    )

    def extend(inner):
        return st.one_of(
            st.builds(Not, inner), st.builds(Next, inner), st.builds(Finally, inner), st.builds(Globally, inner),
            st.builds(And, inner, inner), st.builds(Or, inner, inner), st.builds(Implies, inner, inner),
            st.builds(Until, inner, inner),
        )
    return st.recursive(atoms, extend, max_leaves=2 ** depth)


def traces(max_len=20):
    item = st.tuples(st.sampled_from(PORTS), st.sampled_from(["0", "1"]), st.sampled_from(["x", "y", "z"]))
    return st.lists(item, min_size=1, max_size=max_len).map(lambda xs: _trace(*xs))


@settings(max_examples=400, deadline=None)
@given(formulas(6), traces())
def test_eval_matches_naive_oracle(f, t):
    assert eval_lasso(f, t) == naive_holds(f, t)


@settings(max_examples=200, deadline=None)
@given(formulas(4), traces())
def test_derived_connectives(g, t):
    assert eval_lasso(Finally(g), t) == eval_lasso(Until(TRUE, g), t)
    assert eval_lasso(Globally(g), t) == eval_lasso(Not(Finally(Not(g))), t)
    assert eval_lasso(g, t) == eval_lasso(normalize(g), t)


@settings(max_examples=300, deadline=None)
@given(formulas(6))
def test_print_parse_round_trip(f):
    assert parse_ltl(format_ltl(f)) == f


def test_normalize_uses_core_connectives_only():
    f = parse_ltl("G (a = 1 -> F port = p) & (b = x U X port = q)")
    core = normalize(f)
    for g in ltl.subformulas(core):
        assert type(g) in (Const, PortIs, FieldIs, Not, Or, Next, Until), g
