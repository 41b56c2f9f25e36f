import json
from importlib import resources

import pytest
from click.testing import CliRunner

from tmapf.cli import main

DATA = resources.files("tmapf") / "data"
TOY1 = ["--map", str(DATA / "toy1.map"), "--scen", str(DATA / "toy1.scen")]
TOY4 = ["--map", str(DATA / "toy4.map"), "--scen", str(DATA / "toy4.scen")]


@pytest.fixture
def cli():
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args], catch_exceptions=False)
    return invoke


def test_solve_and_certify(cli, tmp_path):
    out = tmp_path / "sol.json"
    r = cli("solve", *TOY1, "--algo", "tfcbs", "--out", out, "--validate")
    assert r.exit_code == 0, r.output
    doc = json.loads(out.read_text())
    assert doc["metadata"]["cost"] == 8 and doc["metadata"]["mode"] == "tmapf"
    r = cli("certify", *TOY1, "--solution", out)
    assert r.exit_code == 0 and json.loads(r.output)["ok"] is True


def test_certify_flags_corruption(cli, tmp_path):
    out = tmp_path / "sol.json"
    cli("solve", *TOY1, "--out", out)
    doc = json.loads(out.read_text())
    doc["states"][-1]["obstacles"][0] = [0, 0]
    out.write_text(json.dumps(doc))
    r = cli("certify", *TOY1, "--solution", out)
    assert r.exit_code == 3
    rules = {v["rule"] for v in json.loads(r.output)["violations"]}
    assert "obstacle-restore" in rules


def test_static_solve_infeasible(cli):
    assert cli("solve", *TOY1, "--algo", "cbs").exit_code == 1


def test_static_solution_certifies(cli, tmp_path):
    out = tmp_path / "s.json"
    assert cli("solve", *TOY4, "--algo", "cbs", "--out", out).exit_code == 0
    assert cli("certify", *TOY4, "--solution", out).exit_code == 0


def test_solve_timeout(cli):
    assert cli("solve", *TOY4, "--timeout-secs", "0").exit_code == 4


def test_bad_inputs(cli, tmp_path):
    bad = tmp_path / "bad.map"
    bad.write_text("type octile\nheight 2\nwidth 2\nmap\n..\n.\n")
    r = cli("solve", "--map", bad, "--scen", DATA / "toy1.scen")
    assert r.exit_code == 2 and "line" in r.output
    assert cli("solve", *TOY1, "--algo", "nope").exit_code == 2
    assert cli("bench", "--map", "mini", "--n-tasks", 2, "--algo", "nope", "--out", tmp_path).exit_code == 2
    assert cli("bench", "--map", "mini", "--out", tmp_path).exit_code == 2
    assert cli("gen-map", "--profile", "small", "--jitter", 99).exit_code == 2


def test_oracle_command(cli):
    r = cli("oracle", *TOY1, "--cost", "cost2")
    assert r.exit_code == 0 and json.loads(r.output)["cost"] == 9
    r = cli("oracle", *TOY1, "--mode", "mapf")
    assert r.exit_code == 1 and json.loads(r.output)["status"] == "infeasible"


def test_generation_commands_deterministic(cli, tmp_path):
    a, b = cli("gen-map", "--profile", "mini", "--seed", 3), cli("gen-map", "--profile", "mini", "--seed", 3)
    assert a.exit_code == 0 and a.output == b.output
    m = tmp_path / "mini.map"
    m.write_text(a.output)
    s1 = cli("gen-scen", "--map", m, "--n-tasks", 5, "--seed", 9)
    s2 = cli("gen-scen", "--map", m, "--n-tasks", 5, "--seed", 9)
    assert s1.exit_code == 0 and s1.output == s2.output
    assert s1.output.startswith("tmapf-scenario 1\nseed 9\n")


def test_bench_reports_deterministic(cli, tmp_path):
    args = ["bench", "--map", "mini", "--n-tasks", 3, "--scenarios", 3, "--algo", "cbs",
            "--algo", "tfpbs", "--timeout-secs", 60, "--validate"]
    assert cli(*args, "--out", tmp_path / "a").exit_code == 0
    assert cli(*args, "--out", tmp_path / "b").exit_code == 0
    for name in ("records.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len((tmp_path / "a" / "records.csv").read_text().splitlines()) == 1 + 6
