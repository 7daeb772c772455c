import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from difflab.cli import main


def _write(tmp_path: Path, text: str, name="cfg.toml") -> str:
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def _invoke(*args):
    return CliRunner().invoke(main, list(args))


def test_cm_run_accepts(tmp_path):
    cfg = _write(tmp_path, 'kind = "cm-run"\n[params]\nprogram = "anbn"\ninputs = ["aabb"]\n')
    res = _invoke("cm", "run", "--config", cfg, "--out", str(tmp_path / "o"))
    assert res.exit_code == 0, res.output
    assert "aabb -> accept" in res.output
    assert (tmp_path / "o" / "runs.csv").read_text().splitlines()[1].startswith("aabb,accept,")


def test_converge_rows(tmp_path):
    cfg = _write(tmp_path, 'kind = "converge"\nseed = 0\n[params]\nstep_counts = [4, 16, 64, 256]\n')
    res = _invoke("diffusion", "converge", "--config", cfg, "--trials", "2000", "--out", str(tmp_path / "o"))
    assert res.exit_code == 0, res.output
    lines = (tmp_path / "o" / "converge.csv").read_text().splitlines()
    assert lines[0] == "steps,tv,tv_low,tv_high"
    assert len(lines) == 5
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["results"]["non_increasing"] is True


def test_missing_program_is_validation_error(tmp_path):
    cfg = _write(tmp_path, 'kind = "cm-run"\n[params]\nprogram = "nope.cm"\ninputs = ["a"]\n')
    res = _invoke("cm", "run", "--config", cfg, "--out", str(tmp_path / "o"))
    assert res.exit_code == 2
    assert "not found" in res.output
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("text", [
    'kind = "teleport"\n',
    'kind = "cm-run"\nseed = -1\n',
    'kind = "cm-run"\n[params]\nbogus = 1\n',
    'kind = "cm-run"\n[params\n',
])
def test_bad_config_is_validation_error(tmp_path, text):
    res = _invoke("cm", "run", "--config", _write(tmp_path, text))
    assert res.exit_code == 2


def test_kind_mismatch(tmp_path):
    cfg = _write(tmp_path, 'kind = "circuit"\n')
    res = _invoke("cm", "run", "--config", cfg)
    assert res.exit_code == 2 and "does not match" in res.output


def test_missing_config_file(tmp_path):
    assert _invoke("cm", "run", "--config", str(tmp_path / "none.toml")).exit_code == 2


def test_failed_expectation_exits_1(tmp_path):
    cfg = _write(tmp_path, 'kind = "cm-run"\n[params]\ninputs = ["ab"]\nexpect = ["reject"]\n')
    res = _invoke("cm", "run", "--config", cfg, "--out", str(tmp_path / "o"))
    assert res.exit_code == 1 and res.output.startswith("FAIL")


def test_dry_run_pinball(tmp_path):
    cfg = _write(tmp_path, 'kind = "pinball"\n[params]\nprogram = "anbn"\ninput = "ab"\nL = 6.0\n')
    res = _invoke("pinball", "simulate", "--config", cfg, "--dry-run", "--out", str(tmp_path / "o"))
    assert res.exit_code == 0, res.output
    for key in ("L=6", "h=", "T_max=", "lipschitz_estimate=", "lipschitz_bound="):
        assert key in res.output
    assert not (tmp_path / "o").exists()


def test_dry_run_leakage_lists_runs(tmp_path):
    cfg = _write(tmp_path, 'kind = "leakage"\n[params]\nLs = [2, 3, 4, 6]\n')
    res = _invoke("pinball", "leakage", "--config", cfg, "--dry-run")
    assert res.exit_code == 0, res.output
    assert "planned runs: 4" in res.output


def test_pinball_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, 'kind = "pinball"\nseed = 3\n[params]\ninput = "ab"\ntrials = 4\nmin_success = 0.5\n')
    outs = []
    for name in ("a", "b"):
        res = _invoke("pinball", "simulate", "--config", cfg, "--out", str(tmp_path / name), "--quiet")
        assert res.exit_code == 0 and res.output == ""
        outs.append((tmp_path / name / "trials.csv").read_bytes())
    assert outs[0] == outs[1]


def test_summary_schema(tmp_path):
    cfg = _write(tmp_path, 'kind = "circuit"\n[params]\ngadget = "k_equals"\nn = 6\nk = 3\ninputs = ["110100"]\n')
    res = _invoke("circuit", "eval", "--config", cfg, "--out", str(tmp_path / "o"))
    assert res.exit_code == 0, res.output
    s = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert set(s) == {"schema_version", "config", "passed", "results", "files", "timestamp"}
    assert s["schema_version"] == 1 and s["passed"] is True
    assert s["files"] == ["circuit.csv", "circuit.json"]
    assert (tmp_path / "o" / "circuit.csv").read_text() == "input,output,oracle\n110100,1,1\n"


def test_circuit_bad_bits(tmp_path):
    cfg = _write(tmp_path, 'kind = "circuit"\n[params]\nn = 3\nk = 1\ninputs = ["0101"]\n')
    assert _invoke("circuit", "eval", "--config", cfg, "--out", str(tmp_path / "o")).exit_code == 2


def test_seed_override_recorded(tmp_path):
    cfg = _write(tmp_path, 'kind = "circuit"\n[params]\nn = 2\nk = 1\n')
    _invoke("circuit", "eval", "--config", cfg, "--seed", "9", "--out", str(tmp_path / "o"))
    assert json.loads((tmp_path / "o" / "summary.json").read_text())["config"]["seed"] == 9


def test_kinds_listing():
    res = _invoke("kinds")
    assert res.exit_code == 0 and "difflab pinball leakage" in res.output
