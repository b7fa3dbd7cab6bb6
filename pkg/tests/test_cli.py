import json
import os
import subprocess
import sys

import pytest

from svssba.cli import UsageError, main, parse_checks, parse_seeds


def test_seed_parsing():
    assert parse_seeds("3..5") == (3, 4, 5)
    assert parse_seeds("1,7") == (1, 7)
    for bad in ("5..3", "a..b", "x"):
        with pytest.raises(UsageError):
            parse_seeds(bad)
    assert parse_checks("none") == ()
    assert parse_checks("mw, svss") == ("mw", "svss")


def test_clean_campaign_exits_zero(capsys):
    assert main(["--protocol", "ba", "--n", "4", "--t", "1", "--seeds", "1..5", "--svss-mode", "ideal"]) == 0
    out = capsys.readouterr().out
    assert "violations: 0" in out
    assert "rounds:" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["--protocol", "rb", "--n", "3", "--t", "1"],
        ["--protocol", "rb", "--check", "bogus"],
        ["--protocol", "rb", "--faulty", "x"],
        ["--protocol", "rb", "--seeds", "9..1"],
    ],
)
def test_bad_flags_exit_two(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_protocol_is_an_argparse_error():
    with pytest.raises(SystemExit) as exc:
        main(["--protocol", "paxos"])
    assert exc.value.code == 2


def test_trace_out_and_replay(tmp_path, capsys):
    argv = ["--protocol", "mwsvss", "--n", "4", "--t", "1", "--faulty", "2", "--adversary", "example1",
            "--dealer", "2", "--moderator", "1", "--seed", "7", "--trace-out", str(tmp_path)]
    assert main(argv) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["runs"] == 1 and summary["violations"] == []
    assert summary["shun_pairs_total"] >= 1
    capsys.readouterr()
    assert main(["--replay", str(tmp_path / "trace_7.log")]) == 0
    assert "identical trace" in capsys.readouterr().out
    log = tmp_path / "trace_7.log"
    # a duplicated event line makes the recorded trace diverge from the rerun
    lines = log.read_text().splitlines()
    lines.insert(2, lines[1])
    log.write_text("\n".join(lines) + "\n")
    assert main(["--replay", str(log)]) == 1


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"protocol": "wrb", "n": 7, "t": 2, "seeds": "0..3", "faulty": [1]}))
    assert main(["--config", str(cfg), "--quiet"]) == 0
    assert "protocol=wrb n=7 t=2 faulty=[1]" in capsys.readouterr().out
    cfg.write_text(json.dumps({"protocol": "wrb", "colour": "blue"}))
    assert main(["--config", str(cfg)]) == 2


def test_violation_exit_code(monkeypatch, capsys):
    from svssba import cli
    from svssba.properties import PropertyVerdict

    monkeypatch.setattr(cli, "check_trace", lambda idx, groups: [PropertyVerdict("fake", False, (), "planted", 0)])
    assert main(["--protocol", "rb", "--seeds", "0..1"]) == 1
    out = capsys.readouterr().out
    assert "VIOLATION seed=0 fake" in out
    assert "replay seeds: 0, 1" in out


def test_module_entry_point():
    env = dict(os.environ, PYTHONHASHSEED="1")
    res = subprocess.run([sys.executable, "-m", "svssba", "--protocol", "rb", "--seed", "3", "--quiet"], capture_output=True, text=True, env=env)
    assert res.returncode == 0
    assert "violations: 0" in res.stdout
