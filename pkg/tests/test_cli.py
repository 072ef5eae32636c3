"""Command-line front end: runs, reports, reproducibility, exit codes."""

from __future__ import annotations

import csv
import json
import sys
import textwrap

import pytest

from agentgauge.cli import main
from agentgauge.machine import MachineConfig, encode_program, save_program_file
from agentgauge.reports import validate_report

MACHINE = MachineConfig()


def write_programs(tmp_path):
    path = tmp_path / "envs.progs"
    save_program_file(path, [
        encode_program(["dec", "move_left", "emit"], MACHINE),
        encode_program(["read_action", "move_left", "emit"], MACHINE),
    ])
    return path


def write_config(tmp_path, out_name="out", extra="", agents="random,basic"):
    programs = write_programs(tmp_path)
    text = textwrap.dedent(f"""
        seed = 99
        output_dir = {tmp_path / out_name}
        agents = {agents}
        ensemble.programs_file = {programs}
        ensemble.dedup_horizon = 4
        valuation.episodes = 15
        valuation.horizon = 40
        bootstrap_samples = 300
        {extra}
    """)
    path = tmp_path / "config.txt"
    path.write_text(text, encoding="utf-8")
    return path


def test_run_writes_valid_report_with_full_budget_row(tmp_path):
    config = write_config(tmp_path)
    assert main(["run", str(config)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    validate_report(report)
    # the dec/move_left/emit environment pays the whole budget to any agent
    full = next(r for r in report["environments"] if "218C0" in r["program_id"])
    assert full["values"]["random"]["mean"] == 1.0
    assert (tmp_path / "out" / "manifest.json").exists()


def test_run_is_byte_identical_across_reruns_and_worker_counts(tmp_path):
    config = write_config(tmp_path, out_name="out1")
    assert main(["run", str(config)]) == 0
    first = (tmp_path / "out1" / "report.json").read_bytes()

    config2 = write_config(tmp_path, out_name="out1")
    assert main(["run", str(config2)]) == 0
    assert (tmp_path / "out1" / "report.json").read_bytes() == first

    assert main(["run", str(config), "--workers", "2"]) == 0
    assert (tmp_path / "out1" / "report.json").read_bytes() == first


def test_csv_and_json_carry_identical_numbers(tmp_path):
    config = write_config(tmp_path)
    assert main(["run", str(config)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    by_key = {}
    with open(tmp_path / "out" / "rows.csv", newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            by_key[(row["program_id"], row["agent"])] = row
    for env_row in report["environments"]:
        for agent, value in env_row["values"].items():
            csv_row = by_key[(env_row["program_id"], agent)]
            assert float(csv_row["value_mean"]) == value["mean"]
            assert float(csv_row["value_ci"]) == value["ci_half_width"]
            assert int(csv_row["episodes"]) == value["episodes"]
            assert float(csv_row["weight"]) == env_row["weight"]


def test_unknown_agent_exits_2_and_names_it(tmp_path, capsys):
    config = write_config(tmp_path, agents="random,sharpshooter")
    assert main(["run", str(config)]) == 2
    assert "sharpshooter" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    config = tmp_path / "bad.txt"
    config.write_text("seed = 1\nensembel.max_length_bits = 11\n", encoding="utf-8")
    assert main(["run", str(config)]) == 2
    assert "ensembel" in capsys.readouterr().err


def test_missing_seed_exits_2(tmp_path, capsys):
    config = tmp_path / "bad.txt"
    config.write_text("agents = random\n", encoding="utf-8")
    assert main(["run", str(config)]) == 2
    assert "seed" in capsys.readouterr().err


def test_duplicate_agents_and_bad_epsilon_exit_2(tmp_path, capsys):
    config = tmp_path / "dup.txt"
    config.write_text("seed = 1\nagents = random,random\n", encoding="utf-8")
    assert main(["run", str(config)]) == 2
    assert "duplicate" in capsys.readouterr().err
    config.write_text("seed = 1\nagents = basic\nagent_epsilon = 1.5\n", encoding="utf-8")
    assert main(["run", str(config)]) == 2
    assert "agent_epsilon" in capsys.readouterr().err


def test_run_with_external_agent(tmp_path):
    child = tmp_path / "uniform.py"
    child.write_text(textwrap.dedent("""
        import json, random, sys
        rng = random.Random(4)
        for line in sys.stdin:
            msg = json.loads(line)
            if msg["type"] == "hello":
                print(json.dumps({"type": "ready", "concurrency": 1}), flush=True)
            elif msg["type"] == "percept":
                print(json.dumps({"type": "action", "a": rng.randrange(2)}), flush=True)
            elif msg["type"] == "bye":
                break
    """), encoding="utf-8")
    config = write_config(
        tmp_path, agents="random,probe",
        extra=f"external.probe = {sys.executable} {child}\nexternal_timeout_ms = 4000")
    assert main(["run", str(config)]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert "probe" in report["agents"]
    assert report["external_timeout_warnings"] == {"probe": 0}


def test_example_study_outputs(tmp_path):
    out = tmp_path / "study"
    assert main(["example-study", "--out", str(out), "--seed", "3",
                 "--episodes", "300", "--cycles", "130",
                 "--discount-episodes", "200"]) == 0
    study = json.loads((out / "study.json").read_text())
    phases = study["phase_means"]
    assert phases["pi_2"]["short_2_101"] == 0.0
    assert phases["pi_1"]["short_2_101"] == pytest.approx(0.5, abs=0.05)
    assert phases["pi_opt"]["short_2_101"] == 1.0
    with open(out / "profiles.csv", newline="", encoding="utf-8") as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 130
    assert float(rows[0]["pi_opt"]) == 0.0  # no action precedes the first reward
    assert float(rows[1]["pi_opt"]) == 1.0


def test_enumerate_command(tmp_path, capsys):
    out = tmp_path / "programs.txt"
    assert main(["enumerate", "--max-len", "11", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "58" in printed
    assert len(out.read_text().splitlines()) == 58


def test_sensitivity_command(tmp_path):
    programs = write_programs(tmp_path)
    config = tmp_path / "config.txt"
    config.write_text(textwrap.dedent(f"""
        seed = 7
        output_dir = {tmp_path / 'sens'}
        agents = random,basic
        ensemble.max_length_bits = 11
        ensemble.dedup_horizon = 4
        valuation.episodes = 10
        valuation.horizon = 30
    """), encoding="utf-8")
    del programs
    assert main(["sensitivity", "--config", str(config), "--permutations", "3"]) == 0
    document = json.loads((tmp_path / "sens" / "sensitivity.json").read_text())
    assert len(document["machines"]) == 3
    for row in document["machines"]:
        assert set(row["scores"]) == {"random", "basic"}
        assert isinstance(row["ordering_preserved"], bool)
    assert document["machines"][0]["ordering_preserved"] is True
