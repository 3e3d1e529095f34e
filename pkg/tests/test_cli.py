import json
import os

import numpy as np
import pytest

from flatgrav import cli
from flatgrav.errors import ConfigError

GOOD = """\
seed = 11
[model]
k = 0.5
coefficient = 1.0
[problem]
M = 1.0
num_nodes = 512
[sim]
Np = 1500
grid_n = 64
duration = 0.04
[output]
directory = {dir}
diag_every = 2
"""


def test_parse_minimal_defaults():
    cfg = cli.parse_config("[model]\n[problem]\n[output]\n")
    assert cfg.seed == 0
    assert cfg.model["kind"] == "polytrope"
    assert cfg.problem["M"] == 1.0
    assert cfg.problem["num_nodes"] == 512
    assert cfg.output["directory"] == "out"
    assert cfg.sections == ("model", "problem", "output")


def test_parse_collects_every_error():
    text = "\n".join([
        "seed = -1",            # 1: negative
        "[model]",              # 2
        "gamma = 1.4",          # 3: unknown key
        "k = half",             # 4: type
        "[problem]",            # 5
        "M = -1",               # 6: validation
        "M = 2",                # 7: duplicate... first M already failed
        "[outputs]",            # 8: unknown section
    ])
    with pytest.raises(ConfigError) as err:
        cli.parse_config(text)
    msgs = err.value.problems
    assert any("line 1" in m and "seed" in m for m in msgs)
    assert any("line 3" in m and "gamma" in m and "did you mean" in m
               for m in msgs)
    assert any("line 4" in m and "not a number" in m for m in msgs)
    assert any("line 6" in m and "M must be positive" in m for m in msgs)
    assert any("line 8" in m and "[outputs]" in m and "output" in m
               for m in msgs)
    assert len(msgs) >= 5


def test_parse_duplicate_key():
    with pytest.raises(ConfigError) as err:
        cli.parse_config("[problem]\nM = 1\nM = 2\n")
    assert any("duplicate" in m for m in err.value.problems)


def test_parse_exclusive_keys():
    with pytest.raises(ConfigError) as err:
        cli.parse_config("[model]\nk = 0.5\nexponent = 3\n")
    assert any("either k or exponent" in m for m in err.value.problems)
    with pytest.raises(ConfigError) as err:
        cli.parse_config("[sim]\nduration = 1\nsteps = 10\n")
    assert any("either duration or steps" in m for m in err.value.problems)


def test_parse_steps_to_duration():
    cfg = cli.parse_config("[sim]\nsteps = 50\ndt = 0.02\n")
    assert cfg.sim["duration"] == pytest.approx(1.0)
    assert "steps" not in cfg.sim


def test_parse_tabulated_needs_table():
    with pytest.raises(ConfigError) as err:
        cli.parse_config("[model]\nkind = tabulated\n")
    assert any("table path" in m for m in err.value.problems)


def test_dispatch_missing_section(tmp_path, capsys):
    cfg = cli.parse_config("[output]\ndirectory = %s\n" % tmp_path)
    status = cli.dispatch("solve", cfg)
    assert status == 2
    err = capsys.readouterr().err
    assert "[model]" in err and "[problem]" in err


def test_simulate_without_solution(tmp_path, capsys):
    cfg = cli.parse_config(
        f"[sim]\nNp = 100\n[output]\ndirectory = {tmp_path}\n")
    status = cli.dispatch("simulate", cfg)
    assert status == 2
    assert "solution" in capsys.readouterr().err


def write_config(tmp_path, text=None):
    path = tmp_path / "run.ini"
    path.write_text(text or GOOD.format(dir=tmp_path / "art"))
    return str(path)


def test_pipeline_and_manifests(tmp_path):
    cfgpath = write_config(tmp_path)
    art = tmp_path / "art"
    assert cli.main(["solve", cfgpath]) == 0
    assert (art / "solution" / "solution.json").is_file()
    man1 = json.loads((art / "manifest.json").read_text())
    assert man1["subcommand"] == "solve"
    assert sorted(man1["files"]) == [
        "solution/U0.csv", "solution/rho0.csv", "solution/solution.json"]
    assert "timestamp" not in json.dumps(man1).lower()

    assert cli.main(["lift", cfgpath]) == 0
    lift = json.loads((art / "lift.json").read_text())
    assert lift["f_max"] > 0
    assert lift["consistency"]["density"] < 1e-4

    assert cli.main(["simulate", cfgpath]) == 0
    rows = (art / "diagnostics.csv").read_text().splitlines()
    assert len(rows) > 2
    man = json.loads((art / "manifest.json").read_text())
    assert "diagnostics.csv" in man["files"]
    assert "sim_summary.json" in man["files"]

    # determinism: a rerun reproduces the manifest bit for bit
    before = (art / "manifest.json").read_bytes()
    assert cli.main(["simulate", cfgpath]) == 0
    assert (art / "manifest.json").read_bytes() == before


def test_reduce_and_scan_mass(tmp_path):
    cfgpath = tmp_path / "run.ini"
    cfgpath.write_text(
        "[model]\nk = 0.5\n"
        "[problem]\nmasses = 0.8, 1.0\nnum_nodes = 384\ntol_el = 1e-5\n"
        f"[output]\ndirectory = {tmp_path / 'art'}\n")
    assert cli.main(["reduce", str(cfgpath)]) == 0
    head = (tmp_path / "art" / "psi_table.csv").read_text().splitlines()[0]
    assert head.startswith("# convex-model")
    assert cli.main(["scan-mass", str(cfgpath)]) == 0
    rows = (tmp_path / "art" / "mass_scan.csv").read_text().splitlines()
    assert rows[0] == "mass,h_value"
    assert len(rows) == 3
    h08, h10 = (float(r.split(",")[1]) for r in rows[1:])
    assert h08 < 0 and h10 < 0
    assert h08 / h10 == pytest.approx(0.8 ** 3, rel=1e-3)


def test_main_bad_config_exit(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[model]\nM = 1\n")  # M belongs to [problem]
    assert cli.main(["solve", str(bad)]) == 2
    assert "did you mean" in capsys.readouterr().err


def test_main_missing_file(capsys):
    assert cli.main(["solve", "/no/such/file.ini"]) == 2
    assert "cannot read" in capsys.readouterr().err


def test_threads_env_validation(tmp_path, monkeypatch, capsys):
    cfgpath = write_config(tmp_path)
    monkeypatch.setenv("FLATGRAV_THREADS", "-2")
    assert cli.main(["reduce", cfgpath]) == 2
    assert "FLATGRAV_THREADS" in capsys.readouterr().err
    monkeypatch.setenv("FLATGRAV_THREADS", "2")
    assert cli.main(["reduce", cfgpath]) == 0


def test_verify_reports_model_table_failure(tmp_path, monkeypatch):
    # a non-convex table must surface as a failed check, exit 1
    grid = np.geomspace(0.01, 10.0, 120)
    vals = grid ** 2
    vals[60] *= 1.5
    rows = "\n".join(f"{float(g)!r},{float(v)!r}"
                     for g, v in zip(grid, vals))
    table = tmp_path / "phi.csv"
    table.write_text("# convex-model v1\n" + rows + "\n")
    cfg = tmp_path / "verify.ini"
    cfg.write_text(
        f"[model]\nkind = tabulated\ntable = {table}\n"
        f"[output]\ndirectory = {tmp_path / 'art'}\n")

    import flatgrav.verify as vf
    monkeypatch.setattr(vf, "full_report", lambda **kw: ([], 0))
    assert cli.main(["verify", str(cfg)]) == 1
    lines = (tmp_path / "art" / "checks.jsonl").read_text().splitlines()
    rec = json.loads(lines[0])
    assert rec["check"] == "model_load"
    assert rec["passed"] is False
