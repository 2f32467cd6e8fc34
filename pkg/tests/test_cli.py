import json

import pytest

from skelnorm.cli import main
from skelnorm.simulator import CSV_HEADER

TWO_STAGE = (
    "a = seq(5.025, t_in=0.05, t_out=0.05);\n"
    "b = seq(1.005, t_in=0.05, t_out=0.05);\n"
    "run farm(a) | farm(b)\n"
)


@pytest.fixture
def program_file(tmp_path):
    path = tmp_path / "prog.skel"
    path.write_text(TWO_STAGE)
    return str(path)


def test_normalize(program_file, capsys):
    assert main(["normalize", program_file]) == 0
    assert capsys.readouterr().out == "farm(a ; b)\n"


def test_normalize_trace(program_file, capsys):
    assert main(["normalize", program_file, "--trace"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "farm(a ; b)"
    assert out[1] == "Fe @ [0] -> a | farm(b)"
    assert out[-1] == "Fi @ [] -> farm(a ; b)"


def test_normalize_leaf(tmp_path, capsys):
    path = tmp_path / "leaf.skel"
    path.write_text("x = seq(1.0); run x")
    assert main(["normalize", str(path)]) == 0
    assert capsys.readouterr().out == "farm(x)\n"


def test_normalize_already_normal_empty_trace(tmp_path, capsys):
    path = tmp_path / "nf.skel"
    path.write_text("a = seq(2.0); b = seq(1.0); run farm(a ; b)")
    assert main(["normalize", str(path), "--trace"]) == 0
    assert capsys.readouterr().out == "farm(a ; b)\n"


def test_rewrite_prints_steps(program_file, capsys):
    assert main(["rewrite", program_file]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("Fe @ ")
    assert lines[-1] == "farm(a ; b)"


def test_parse_error_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.skel"
    path.write_text("a = seq(1.0) run a")
    assert main(["normalize", str(path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_validation_error_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.skel"
    path.write_text("a = seq(1.0, in=x, out=y); b = seq(1.0, in=z, out=w); run a | b")
    assert main(["normalize", str(path)]) == 2
    assert "TypeMismatch" in capsys.readouterr().err


def test_predict_json(tmp_path, capsys):
    path = tmp_path / "p.skel"
    path.write_text(
        "a = seq(5.025, t_in=0, t_out=0); b = seq(1.005, t_in=0, t_out=0); run a ; b"
    )
    assert main(["predict", str(path), "--n", "200", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["pe_count"] == 1
    assert payload["efficiency"] == 1.0
    assert abs(payload["completion_time_estimate"] - 1206.0) < 1e-9


def test_simulate_json_and_csv(program_file, tmp_path, capsys):
    csv_path = tmp_path / "run.csv"
    assert main(
        ["simulate", program_file, "--n", "50", "--seed", "3", "--json", "--csv", str(csv_path)]
    ) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n"] == 50
    assert payload["seed"] == 3
    assert payload["pe_count"] > 1
    assert "per_node_busy" in payload
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 2


def test_cli_output_is_byte_stable(program_file, capsys):
    assert main(["simulate", program_file, "--n", "40", "--seed", "7", "--json"]) == 0
    first = capsys.readouterr().out
    assert main(["simulate", program_file, "--n", "40", "--seed", "7", "--json"]) == 0
    assert capsys.readouterr().out == first


def test_compare_auto_seven_forms(program_file, capsys):
    assert main(["compare", program_file, "--n", "40", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    forms = [f["form"] for f in payload["forms"]]
    assert forms == [
        "a ; b",
        "farm(a ; b)",
        "farm(farm(a) | farm(b))",
        "farm(a) | farm(b)",
        "farm(a | b)",
        "farm(a) | b",
        "a | farm(b)",
    ]
    assert sum(f["is_normal"] for f in payload["forms"]) == 1
    assert payload["ideal_dominance_ok"] is True
    # the sequential baseline mirrors the published tables: no efficiency entry
    assert payload["forms"][0]["efficiency"] is None


def test_compare_explicit_forms_appends_normal(program_file, capsys):
    assert main(
        ["compare", program_file, "--forms", "a | b,farm(a | b)", "--n", "30", "--json"]
    ) == 0
    payload = json.loads(capsys.readouterr().out)
    forms = [f["form"] for f in payload["forms"]]
    assert forms == ["a | b", "farm(a | b)", "farm(a ; b)"]


def test_compare_non_equivalent_forms_exits_2(program_file, capsys):
    assert main(["compare", program_file, "--forms", "a | b,b | a", "--n", "10"]) == 2
    assert "error:" in capsys.readouterr().err


def test_compare_budget_too_small_exits_2(program_file, capsys):
    assert main(["compare", program_file, "--n", "10", "--pe-budget", "3"]) == 2
    assert "error:" in capsys.readouterr().err


def test_compare_human_table(program_file, capsys):
    assert main(["compare", program_file, "--n", "40", "--pe-budget", "20"]) == 0
    out = capsys.readouterr().out
    assert "form" in out and "T_s(sim)" in out
    assert "dominance(ideal): ok" in out


def test_compare_renders_figure(program_file, tmp_path, capsys):
    fig = tmp_path / "compare.png"
    assert main(["compare", program_file, "--n", "30", "--plot", str(fig), "--json"]) == 0
    assert fig.exists() and fig.stat().st_size > 1000


def test_sweep_csv_stdout_and_figure(program_file, tmp_path, capsys):
    fig = tmp_path / "sweep.png"
    csv_path = tmp_path / "sweep.csv"
    assert main(
        [
            "sweep",
            program_file,
            "--forms",
            "farm(a ; b),farm(a | b)",
            "--sigma-grid",
            "0,0.3",
            "--seeds",
            "1,2",
            "--n",
            "30",
            "--csv",
            str(csv_path),
            "--plot",
            str(fig),
        ]
    ) == 0
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + 2 * 2 * 2  # forms x sigmas x seeds
    assert fig.exists() and fig.stat().st_size > 1000


def test_sweep_writes_rows_to_stdout_without_csv(program_file, capsys):
    assert main(
        ["sweep", program_file, "--forms", "farm(a ; b)", "--sigma-grid", "0", "--n", "20"]
    ) == 0
    out = capsys.readouterr().out
    assert out.startswith(CSV_HEADER)
