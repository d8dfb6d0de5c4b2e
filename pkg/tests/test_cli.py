import os
import subprocess
import sys

import pytest

from llmbandit.cli import main
from llmbandit.config import load_config, loads
from llmbandit import ConfigError


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


BASE = "k = 5\nn = 2\nrho = 0.8\nmodel = awc\nT = 25\n"


def test_run_writes_outputs(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "res"
    assert main(["run", "--config", cfg, "--out", str(out), "--policy", "c2mabv", "--policy", "cucb"]) == 0
    assert sorted(os.listdir(out)) == ["aggregate.csv", "c2mabv_rep0.csv", "cucb_rep0.csv", "timings.csv"]
    assert "c2mabv: T=25" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    cfg = write(tmp_path, BASE + "replications = 2\npolicy = c2mabv thompson\n")
    for d in ("a", "b"):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / d), "--seed", "11"]) == 0
    for f in ("c2mabv_rep1.csv", "thompson_rep0.csv", "aggregate.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_replay_matches_csv(tmp_path, capsys):
    cfg = write(tmp_path, BASE)
    out = tmp_path / "res"
    assert main(["run", "--config", cfg, "--out", str(out), "--log-messages"]) == 0
    log = out / "c2mabv_rep0.messages.jsonl"
    assert log.exists()
    capsys.readouterr()
    assert main(["run", "--config", cfg, "--out", str(out), "--replay", str(log)]) == 0
    replayed = capsys.readouterr().out.strip()
    assert replayed.endswith("c2mabv_rep0.replay.csv")
    assert (out / "c2mabv_rep0.csv").read_bytes() == open(replayed, "rb").read()


def test_exit_codes(tmp_path, capsys):
    assert main(["run", "--config", write(tmp_path, "T = 0\npreset = table3-llms\n")]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["run", "--config", write(tmp_path, "preset = nope\n", "p.cfg")]) == 2
    big = "k = 60\nn = 30\nrho = 5\nmodel = suc\nT = 2\npolicy = c2mabv-direct\n"
    assert main(["run", "--config", write(tmp_path, big, "big.cfg"), "--out", str(tmp_path / "b")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["run", "--config", write(tmp_path, BASE, "ok.cfg"), "--out", str(blocker / "sub")]) == 4
    assert "error" in capsys.readouterr().err


def test_presets_list(capsys):
    assert main(["presets", "list"]) == 0
    out = capsys.readouterr().out
    for name in ("synthetic-awc-d3", "synthetic-suc-d3", "synthetic-aic-d3", "table3-llms"):
        assert name in out


def test_console_script_entry():
    r = subprocess.run([sys.executable, "-m", "llmbandit.cli", "presets", "list"], capture_output=True, text=True)
    assert r.returncode == 0 and "table3-llms" in r.stdout


def test_config_parsing(tmp_path):
    inst = write(tmp_path, "k = 4\nn = 2\nmodel = suc\nrho = 1.0\nseed = 7\narm.1.mu = 0.99\n", "inst.cfg")
    cfg = load_config(write(tmp_path, "instance = inst.cfg\nrho = 0.5  # wins\npolicy = cucb\npolicy = fixed:0+1\n"
                                      "horizon = 12\ndelta = auto\nwarmup = yes\n"))
    assert (cfg.k, cfg.rho, cfg.instance_seed, cfg.T) == (4, 0.5, 7, 12)
    assert cfg.policies == ["cucb", "fixed:0+1"]
    assert cfg.delta is None and cfg.warmup
    assert cfg.arm_overrides == {1: {"mu": 0.99}}


@pytest.mark.parametrize("text", [
    "preset = table3-llms\nT = 5\nT = 6\n",
    "preset = table3-llms\nbogus = 1\n",
    "preset = table3-llms\nalpha_mu = -1\n",
    "preset = table3-llms\nbatch_size = 0\n",
    "preset = table3-llms\nwarmup = maybe\n",
    "preset = table3-llms\nk = 3\n",
    "k = 3\nn = 1\n",
    "preset = table3-llms\nmodel = xyz\n",
    "preset = table3-llms\narm.x.mu = 1\n",
    "just words\n",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        loads(text)


def test_shipped_configs_parse():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in ("awc-compare.cfg", "custom-run.cfg"):
        cfg = load_config(os.path.join(root, name))
        assert cfg.policies
