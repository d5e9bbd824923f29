import json
from dataclasses import replace
from pathlib import Path

import pytest

from stableld import cli
from stableld.cli import RunConfig, load_manifest, main, run, validate

IID = """
[experiment]
kind = iid-ld
seed = 7
samples = 200000

[model]
alpha = 1.5
p = 1
q = 0
centered = true

[run]
n = 100
N_over_an = 10
"""


def _write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_and_echo():
    cfg = RunConfig.from_ini(IID)
    assert cfg.kind == "iid-ld" and cfg.seed == 7 and cfg.samples == 200000 and cfg.centered
    assert RunConfig.from_ini(cfg.to_ini()) == cfg
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_system_section_aliases():
    cfg = RunConfig.from_ini("[experiment]\nkind=dyn-ld\nseed=1\n[system]\nname=gauss\nalpha=0.75\ncentered=false\n")
    assert cfg.system == "gauss" and cfg.alpha == 0.75 and not cfg.centered


def test_parse_errors():
    with pytest.raises(ValueError, match="run.n: cannot parse"):
        RunConfig.from_ini("[run]\nn = ten\n")
    with pytest.raises(ValueError, match="unknown key"):
        RunConfig.from_ini("[run]\nbogus = 1\n")
    with pytest.raises(ValueError, match="belongs in section"):
        RunConfig.from_ini("[run]\nseed = 1\n")


def test_validation_messages():
    cfg = RunConfig.from_ini(IID)
    assert validate(cfg) == []
    assert any("alpha=1 unsupported" in v for v in validate(replace(cfg, alpha=1.0)))
    assert any(v.startswith("experiment.seed: missing") for v in validate(replace(cfg, seed=None)))
    assert "run.N_over_an: requires N/a_n >= 3" in validate(replace(cfg, N_over_an=1.0))
    dyn = replace(cfg, kind="dyn-ld", system="gauss", alpha=1.0)
    assert "system.alpha: alpha=1 unsupported (case postponed; not covered by the theory)" in validate(dyn)
    assert any(v.startswith("system.name") for v in validate(replace(cfg, kind="dyn-ld", system="tent")))


def test_validate_is_pure(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    validate(RunConfig.from_ini(IID))
    assert list(tmp_path.iterdir()) == []


def test_run_iid_deterministic(tmp_path):
    cfg = RunConfig.from_ini(IID)
    assert run(cfg, tmp_path / "a") == 0
    assert run(cfg, tmp_path / "b") == 0
    stem = "iid_1.5_100_10_7"
    for ext in (".csv",):
        assert (tmp_path / "a" / (stem + ext)).read_bytes() == (tmp_path / "b" / (stem + ext)).read_bytes()
    ja = json.loads((tmp_path / "a" / (stem + ".json")).read_text())
    jb = json.loads((tmp_path / "b" / (stem + ".json")).read_text())
    ja.pop("runtime"), jb.pop("runtime")
    assert ja == jb
    assert 0.85 <= ja["ratio"] <= 1.15


def test_manifest_round_trip(tmp_path):
    cfg = RunConfig.from_ini(IID)
    run(cfg, tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert set(man) == {"config", "version", "wall_time", "artifacts", "status"}
    assert load_manifest(tmp_path / "manifest.json") == cfg
    assert sorted(man["artifacts"]) == ["iid_1.5_100_10_7.csv", "iid_1.5_100_10_7.json"]


def test_outputs_confined(tmp_path):
    out = cli._Out(tmp_path / "out")
    with pytest.raises(ValueError, match="escapes"):
        out.path("../elsewhere.csv")
    cfg = RunConfig.from_ini(IID)
    run(cfg, tmp_path / "out")
    written = {p for p in tmp_path.rglob("*") if p.is_file()}
    assert all((tmp_path / "out") in p.parents for p in written)


def test_output_env(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.output_dir(RunConfig()) == tmp_path / "env"
    assert cli.output_dir(RunConfig(output="x")) == Path("x")


def test_empty_sweep(tmp_path):
    text = "[experiment]\nkind=sweep\nseed=3\n[system]\nname=doubling\nalpha=0.75\ncentered=false\n[run]\nn_grid=\n"
    assert main(["run", str(_write(tmp_path, text)), "--output", str(tmp_path / "o")]) == 0
    payload = json.loads((tmp_path / "o" / "sweep_doubling_0.75_3.json").read_text())
    assert payload == {"reports": [], "skipped": [], "trends": {}}
    assert (tmp_path / "o" / "sweep_doubling_0.75_3.csv").read_text().strip() == ",".join(cli_columns())


def cli_columns():
    from stableld.report import CSV_COLUMNS

    return CSV_COLUMNS


def test_spectral_run(tmp_path):
    text = ("[experiment]\nkind=spectral\nseed=1\n[system]\nname=gauss\nalpha=1.5\n"
            "[run]\nm=1024\nt_min=1e-3\nt_max=1e-1\nt_points=5\n")
    assert main(["run", str(_write(tmp_path, text)), "--output", str(tmp_path / "o")]) == 0
    fit = json.loads((tmp_path / "o" / "spectral_gauss_1.5_1024.json").read_text())
    assert fit["alpha_hat"] == pytest.approx(1.5, abs=0.15)
    lines = (tmp_path / "o" / "spectral_gauss_1.5_1024.csv").read_text().splitlines()
    assert lines[0].startswith("t,lambda_re") and len(lines) == 6


def test_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, IID.replace("seed = 7", ""), "bad.ini")
    assert main(["validate", str(bad)]) == 2
    assert "experiment.seed: missing" in capsys.readouterr().out
    assert main(["run", str(bad), "--output", str(tmp_path / "o")]) == 2
    assert main(["validate", str(tmp_path / "missing.ini")]) == 2
    assert main(["validate", str(_write(tmp_path, IID))]) == 0
    # the gate refuses too few samples: runtime failure, exit 1
    few = _write(tmp_path, IID.replace("samples = 200000", "samples = 10"), "few.ini")
    assert main(["run", str(few), "--output", str(tmp_path / "f")]) == 1


def test_seed_override(tmp_path):
    p = _write(tmp_path, IID.replace("seed = 7", ""))
    assert main(["run", str(p), "--seed", "11", "--output", str(tmp_path / "o")]) == 0
    assert load_manifest(tmp_path / "o" / "manifest.json").seed == 11


def test_list_systems(capsys):
    assert main(["list-systems"]) == 0
    assert capsys.readouterr().out.split() == ["doubling", "gauss"]
