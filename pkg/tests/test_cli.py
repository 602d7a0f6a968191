import csv

import pytest

from nwtsim import BUNDLED_MODELS, load_bundled
from nwtsim.cli import RunConfig, execute, main, run_replicate
from test_ingest import MINIMAL


def read_stats(path):
    return dict(line.split("=", 1) for line in path.read_text().splitlines())


def read_summary(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_lotka_smoke(tmp_path):
    code = main(["run", "--model", "lotka.model", "--engine", "nwt", "--t-final", "1000",
                 "--seed", "7", "--out-dir", str(tmp_path)])
    assert code == 0
    stats = read_stats(tmp_path / "lotka_nwt_r000.stats")
    assert stats["engine"] == "nwt" and stats["seed"] == "7"
    assert stats["termination"] == "completed"
    lines = (tmp_path / "lotka_nwt_r000.csv").read_text().splitlines()
    assert lines[0] == "time,P1,P2"
    assert len(lines) == 1002
    assert lines[-1].startswith("1000.000000,")


def test_ode_circadian_reaches_steady_state(tmp_path):
    code = main(["run", "--engine", "ode", "--model", "circadian.model", "--t-final", "400",
                 "--ode-step", "0.0005", "--out-dir", str(tmp_path)])
    assert code == 0
    stats = read_stats(tmp_path / "circadian_ode_r000.stats")
    assert stats["steady_state"] == "yes"
    assert float(stats["steady_state_time"]) < 400


def test_ode_default_step_diverges_cleanly(tmp_path, capsys):
    code = main(["run", "--engine", "ode", "--model", "circadian", "--t-final", "5",
                 "--out-dir", str(tmp_path)])
    assert code == 4
    err = capsys.readouterr().err
    assert err.startswith("nwtsim: error kind=diverged")
    assert "--ode-step" in err


def test_ssa_replicates_full_fraction(tmp_path):
    code = main(["run", "--engine", "ssa", "--replicates", "3", "--t-final", "2000",
                 "--model", "circadian.model", "--out-dir", str(tmp_path)])
    assert code == 0
    for i in range(3):
        assert (tmp_path / f"circadian_ssa_r{i:03d}.csv").exists()
        stats = read_stats(tmp_path / f"circadian_ssa_r{i:03d}.stats")
        assert float(stats["nondet_fraction"]) == 1.0
        assert stats["seed"] == str(i)
    rows = read_summary(tmp_path / "summary.csv")
    assert [r["replicate"] for r in rows] == ["0", "1", "2"]
    assert list(rows[0])[:7] == ["replicate", "engine", "seed", "applied_rules",
                                 "nondet_decisions", "nondet_fraction", "termination"]
    assert all(float(r["nondet_fraction"]) == 1.0 for r in rows)


def test_replicate_order_irrelevant(tmp_path):
    batch, single = tmp_path / "batch", tmp_path / "single"
    cfg = RunConfig(model="lotka", engine="ssa", t_final=30.0, seed=40, replicates=4,
                    out_dir=str(batch))
    execute(cfg)
    single.mkdir()
    cfg_single = RunConfig(model="lotka", engine="ssa", t_final=30.0, seed=40, out_dir=str(single))
    system = load_bundled("lotka")
    for i in reversed(range(4)):
        run_replicate(cfg_single, system, i)
    for i in range(4):
        for ext in (".csv", ".stats"):
            name = f"lotka_ssa_r{i:03d}{ext}"
            assert (batch / name).read_bytes() == (single / name).read_bytes()


def test_workers_match_serial(tmp_path):
    args = ["run", "--model", "decay", "--engine", "ssa", "--replicates", "3", "--t-final", "10"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(args + ["--out-dir", str(tmp_path / "b"), "--workers", "2"]) == 0
    for name in ["summary.csv"] + [f"decay_ssa_r{i:03d}.csv" for i in range(3)]:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize("engine", ["nwt", "ssa", "ode"])
@pytest.mark.parametrize("model", BUNDLED_MODELS)
def test_every_engine_takes_every_model(tmp_path, engine, model):
    code = main(["run", "--model", model, "--engine", engine, "--t-final", "2",
                 "--ode-step", "0.0005", "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / f"{model}_{engine}_r000.csv").exists()


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("NWTSIM_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["run", "--model", "decay", "--t-final", "3"]) == 0
    assert (tmp_path / "env" / "decay_nwt_r000.csv").exists()


def test_track_and_halt(tmp_path):
    code = main(["run", "--model", "decay", "--engine", "ssa", "--t-final", "1000", "--track", "A",
                 "--halt-on-extinction", "--out-dir", str(tmp_path)])
    assert code == 0
    (row,) = read_summary(tmp_path / "summary.csv")
    assert row["termination"] == "extinct"
    assert float(row["extinction_time.A"]) < 1000


def test_bad_flag_exits_nonzero():
    with pytest.raises(SystemExit) as info:
        main(["run", "--model", "decay", "--t-final", "1", "--engine", "warp"])
    assert info.value.code != 0


@pytest.mark.parametrize("args", [["--t-final", "-1"], ["--t-final", "5", "--replicates", "0"],
                                  ["--t-final", "5", "--interval", "0"],
                                  ["--t-final", "5", "--track", "Nope"]])
def test_invalid_config(tmp_path, capsys, args):
    code = main(["run", "--model", "decay", "--out-dir", str(tmp_path)] + args)
    assert code == 2
    assert "error kind=usage" in capsys.readouterr().err


def test_parse_error_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.model"
    bad.write_text("compartment cell volume=1\nspecies A in cell count=x\n")
    assert main(["run", "--model", str(bad), "--t-final", "1", "--out-dir", str(tmp_path)]) == 3
    assert "kind=parse line=2" in capsys.readouterr().err


def test_missing_model(tmp_path, capsys):
    assert main(["run", "--model", str(tmp_path / "none.model"), "--t-final", "1"]) == 5
    assert "kind=io" in capsys.readouterr().err


def test_sbml_strict_and_lenient(tmp_path):
    f = tmp_path / "m.xml"
    f.write_text(MINIMAL.replace("</model>", "<listOfEvents/></model>"))
    base = ["run", "--model", str(f), "--t-final", "5", "--out-dir", str(tmp_path)]
    assert main(base) == 3
    assert main(base + ["--lenient"]) == 0
    assert (tmp_path / "m_nwt_r000.csv").exists()


def test_models_listing(capsys):
    assert main(["models"]) == 0
    assert capsys.readouterr().out.split() == [f"{m}.model" for m in BUNDLED_MODELS]


def test_show_model(capsys):
    assert main(["show", "decay"]) == 0
    assert "reaction R1" in capsys.readouterr().out
