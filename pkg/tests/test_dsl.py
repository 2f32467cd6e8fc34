import random

import pytest
from hypothesis import given, strategies as st

from skelnorm.core import (
    Constant,
    Farm,
    Normal,
    Pipe,
    Program,
    SeqComp,
    SeqRef,
    validate,
)
from skelnorm.dsl import (
    ParseError,
    UnknownName,
    format_expr,
    format_program,
    parse,
    parse_expr,
)

from helpers import random_profiles, random_skeleton


def test_parse_two_stage_farm():
    p = parse("a = seq(5.025); b = seq(1.005); run farm(a ; b)")
    assert p.body == Farm(SeqComp((SeqRef("a"), SeqRef("b"))))
    assert p.decls["a"].mean == 5.025
    assert p.decls["b"].mean == 1.005


def test_parse_leaf_body():
    p = parse("x = seq(1.0); run x")
    assert p.body == SeqRef("x")


def test_parse_nested_farm_and_sigma():
    p = parse("a = seq(1.0,0.6); run farm(farm(a))")
    assert p.body == Farm(Farm(SeqRef("a")))
    assert p.decls["a"].t_seq == Normal(1.0, 0.6)


def test_declaration_defaults():
    p = parse("a = seq(2.0); run a")
    prof = p.decls["a"]
    assert prof.t_seq == Constant(2.0)
    assert prof.t_in == pytest.approx(0.02)
    assert prof.t_out == pytest.approx(0.02)


def test_declaration_kv_params():
    p = parse("a = seq(2.0, 0.5, t_in=0.1, t_out=0.2, in=bitmap, out=contour); run a")
    prof = p.decls["a"]
    assert prof.t_seq == Normal(2.0, 0.5)
    assert (prof.t_in, prof.t_out) == (0.1, 0.2)
    assert (prof.in_type, prof.out_type) == ("bitmap", "contour")


def test_semicolon_binds_tighter_than_pipe():
    p = parse("a = seq(1); b = seq(1); c = seq(1); run a ; b | c")
    assert p.body == Pipe((SeqComp((SeqRef("a"), SeqRef("b"))), SeqRef("c")))


def test_parentheses_override():
    p = parse("a = seq(1); b = seq(1); run farm((a | b))")
    assert p.body == Farm(Pipe((SeqRef("a"), SeqRef("b"))))


def test_pipes_parse_flattened():
    p = parse("a = seq(1); b = seq(1); c = seq(1); run (a | b) | c")
    assert p.body == Pipe((SeqRef("a"), SeqRef("b"), SeqRef("c")))


def test_comments_and_whitespace():
    p = parse("# setup\na = seq(1.5);  # a stage\nrun farm(a)\n")
    assert p.body == Farm(SeqRef("a"))


def test_format_examples():
    a, b = SeqRef("a"), SeqRef("b")
    assert format_expr(Farm(SeqComp((a, b)))) == "farm(a ; b)"
    assert format_expr(Pipe((Farm(a), Farm(b)))) == "farm(a) | farm(b)"
    assert format_expr(Pipe((a, b, SeqRef("c")))) == "a | b | c"


def test_parse_error_names_offending_token():
    with pytest.raises(ParseError) as err:
        parse("a = seq(1.0); run farm(a")
    assert "')'" in str(err.value)
    assert err.value.span is not None


def test_unknown_name_names_token():
    with pytest.raises(UnknownName) as err:
        parse("a = seq(1.0); run b")
    assert "'b'" in str(err.value)


def test_parse_error_span_position():
    with pytest.raises(ParseError) as err:
        parse("a = seq(1.0);\nrun farm(a))")
    assert err.value.span.line == 2


def test_duplicate_declaration_rejected():
    with pytest.raises(ParseError):
        parse("a = seq(1.0); a = seq(2.0); run a")


def test_nonpositive_mean_rejected():
    with pytest.raises(ParseError):
        parse("a = seq(0); run a")


def test_seqcomp_of_composite_rejected():
    with pytest.raises(ParseError):
        parse("a = seq(1); b = seq(1); run farm(a) ; b")


def test_parse_expr_against_decls():
    p = parse("a = seq(1); b = seq(1); run a | b")
    s = parse_expr("farm(a ; b)", p.decls)
    assert s == Farm(SeqComp((SeqRef("a"), SeqRef("b"))))
    with pytest.raises(UnknownName):
        parse_expr("farm(zz)", p.decls)


@st.composite
def programs(draw):
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    depth = draw(st.integers(min_value=0, max_value=4))
    rng = random.Random(seed)
    sigma = rng.choice([0.0, 0.3])
    body = random_skeleton(rng, depth)
    return Program(random_profiles(rng, sigma=sigma), body)


@given(programs())
def test_round_trip(p):
    text = format_program(p)
    back = parse(text)
    assert back.body == p.body
    assert back.decls == p.decls
    # canonical text is a fixed point
    assert format_program(back) == text


@given(programs())
def test_round_tripped_programs_validate(p):
    back = parse(format_program(p))
    assert not any(v.severity == "error" for v in validate(back))
