import pytest

from skelnorm.core import (
    Constant,
    Farm,
    Pipe,
    Program,
    SeqComp,
    SeqProfile,
    SeqRef,
    normal_form,
)
from skelnorm.dsl import format_expr
from skelnorm.report import auto_forms, format_compare_table, run_compare


def _program(k=2):
    names = "abcdef"[:k]
    decls = {n: SeqProfile(n, Constant(1.0 + i), 0.05, 0.05) for i, n in enumerate(names)}
    refs = tuple(SeqRef(n) for n in names)
    body = refs[0] if k == 1 else Pipe(refs)
    return Program(decls, body)


def test_auto_forms_two_stages_matches_published_layout():
    forms = [format_expr(f) for f in auto_forms(_program().body)]
    assert forms == [
        "a ; b",
        "farm(a ; b)",
        "farm(farm(a) | farm(b))",
        "farm(a) | farm(b)",
        "farm(a | b)",
        "farm(a) | b",
        "a | farm(b)",
    ]


def test_auto_forms_generalize_to_more_stages():
    forms = [format_expr(f) for f in auto_forms(_program(3).body)]
    assert "farm(a ; b ; c)" in forms
    assert "farm(a) | farm(b) | farm(c)" in forms
    assert "farm(a) | b | c" in forms
    assert "a | b | farm(c)" in forms
    assert len(forms) == 7


def test_auto_forms_single_stage():
    forms = auto_forms(_program(1).body)
    assert forms == [SeqRef("a"), Farm(SeqComp((SeqRef("a"),)))]


def test_run_compare_flags_exactly_one_normal_form_and_dedupes():
    program = _program()
    nf = normal_form(program.body)
    summary, rows = run_compare(
        program, [program.body, nf, nf], n=20, seeds=(1,)
    )
    assert sum(r.is_normal for r in summary.forms) == 1
    assert [r.text for r in summary.forms] == ["a | b", "farm(a ; b)"]
    assert summary.precondition_holds
    assert summary.ideal_dominance_ok and summary.sim_dominance_ok


def test_run_compare_appends_missing_normal_form():
    program = _program()
    summary, _ = run_compare(program, [program.body], n=20, seeds=(1,))
    assert [r.text for r in summary.forms] == ["a | b", "farm(a ; b)"]


def test_compare_table_marks_sequential_efficiency_blank():
    program = _program()
    summary, _ = run_compare(program, None, n=20, seeds=(1,))
    table = format_compare_table(summary)
    seq_line = next(l for l in table.splitlines() if l.startswith("a ; b"))
    assert "-" in seq_line.split()


def test_compare_mean_over_seeds(tmp_path):
    program = _program()
    summary, rows = run_compare(program, None, n=20, seeds=(1, 2, 3))
    assert len(rows) == 7 * 3
    one = summary.forms[0]
    mine = [r.service_time for r in rows if r.form == one.text]
    assert one.service_time == pytest.approx(sum(mine) / 3)
