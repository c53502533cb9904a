import json

import pytest

from byzinf import cli, experiments
from byzinf.experiments import format_number


def _write(tmp_path, config, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(config))
    return str(p)


def _cfg(experiment, **params):
    return {"schema_version": 1, "experiment": experiment, "seed": 3, "params": params}


def _csv_body(path):
    lines = open(path).read().splitlines()
    rows = [l for l in lines if not l.startswith("#")]
    return rows[0].split(","), [r.split(",") for r in rows[1:]]


def test_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in experiments.EXPERIMENTS:
        assert name in out


def test_every_experiment_cites_a_target():
    for exp in experiments.EXPERIMENTS.values():
        assert any(tag in exp.target for tag in ("Table", "Fig", "Appendix"))


def test_validate_ok(tmp_path, capsys):
    assert cli.main(["validate", "--config", _write(tmp_path, _cfg("kld-vs-alpha"))]) == 0
    assert capsys.readouterr().err == ""


def test_validate_flip_bound(tmp_path, capsys):
    path = _write(tmp_path, _cfg("kld-vs-alpha", M=[4], p=0.9))
    assert cli.main(["validate", "--config", path]) == 1
    err = capsys.readouterr().err
    assert "params.p" in err and "1/(M-1)" in err


def test_validate_alpha_range(tmp_path, capsys):
    path = _write(tmp_path, _cfg("identification", alpha=1.2))
    assert cli.main(["validate", "--config", path]) == 1
    assert "params.alpha" in capsys.readouterr().err


@pytest.mark.parametrize(
    "config, field",
    [
        ({"experiment": "nope"}, "experiment"),
        ({"experiment": "kld-vs-alpha", "schema_version": 9}, "schema_version"),
        ({"experiment": "kld-vs-alpha", "seed": -1}, "seed"),
        ({"experiment": "kld-vs-alpha", "params": {"M": []}}, "params.M"),
        ({"experiment": "kld-vs-alpha", "params": {"alpha": []}}, "params.alpha"),
        ({"experiment": "kld-vs-alpha", "params": {"bogus": 1}}, "params.bogus"),
        ({"experiment": "fi-vs-alpha", "params": {"sigma": [0.0]}}, "params.sigma[0]"),
        ({"experiment": "eta-vs-alpha", "params": {"xi": 1.5}}, "params.xi"),
        ({"experiment": "detection-error", "params": {"priors": [0.6, 0.6]}}, "params.priors"),
        ({"experiment": "noisy-channel", "params": {"channels": [[[0.5, 0.6], [0.5, 0.5]]]}}, "params.channels[0]"),
    ],
)
def test_validate_field_paths(config, field):
    diags = experiments.validate(config)
    assert diags and any(d.startswith(field + ":") for d in diags), diags


def test_validate_lists_every_violation():
    diags = experiments.validate(_cfg("detection-error", alpha=[1.2], trials=0, p=0.9, M=[4]))
    assert {d.split(":")[0] for d in diags} >= {"params.alpha[0]", "params.trials", "params.p"}


def test_bad_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main(["validate", "--config", str(p)]) == 1
    assert "invalid JSON" in capsys.readouterr().err


def test_missing_file(tmp_path, capsys):
    missing = str(tmp_path / "missing.json")
    assert cli.main(["validate", "--config", missing]) == 2
    assert "No such file" in capsys.readouterr().err


def test_run_invalid_exit_code(tmp_path):
    path = _write(tmp_path, _cfg("kld-vs-alpha", p=0.9, M=[4]))
    assert cli.main(["run", "--config", path, "--out", str(tmp_path / "o.csv")]) == 1


def test_unwritable_output(tmp_path, capsys):
    path = _write(tmp_path, _cfg("alpha-blind-table"))
    assert cli.main(["run", "--config", path, "--out", str(tmp_path / "no" / "such" / "dir.csv")]) == 2
    assert "No such file" in capsys.readouterr().err


def test_alpha_blind_table_csv(tmp_path):
    out = tmp_path / "t.csv"
    path = _write(tmp_path, _cfg("alpha-blind-table"))
    assert cli.main(["run", "--config", path, "--out", str(out)]) == 0
    header, rows = _csv_body(out)
    assert header == ["bits", "M", "alpha_blind"]
    got = [round(float(r[2]), 4) for r in rows]
    assert got == [0.5, 0.75, 0.875, 0.9375, 0.9688, 0.9844, 0.9922, 0.9961]


def test_metadata_block(tmp_path):
    out = tmp_path / "t.csv"
    cli.main(["run", "--config", _write(tmp_path, _cfg("alpha-blind-table")), "--out", str(out), "--seed", "11"])
    meta = [l for l in open(out).read().splitlines() if l.startswith("#")]
    assert "# seed: 11" in meta
    assert "# target: Table I" in meta
    assert any(l.startswith("# version: ") for l in meta)


def test_kld_curves_hit_zero_at_blind_point(tmp_path):
    out = tmp_path / "k.csv"
    cli.main(["run", "--config", _write(tmp_path, _cfg("kld-vs-alpha", alpha={"start": 0.0, "stop": 1.0, "num": 11})), "--out", str(out)])
    header, rows = _csv_body(out)
    assert header == ["M", "alpha", "p", "D_FC"]
    for M in (2, 4, 8, 16):
        at_blind = [float(r[3]) for r in rows if int(r[0]) == M and float(r[1]) == (M - 1) / M]
        assert at_blind and at_blind[0] < 1e-12


def test_rectangular_and_roundtrip(tmp_path):
    out = tmp_path / "f.csv"
    cli.main(["run", "--config", _write(tmp_path, _cfg("fi-vs-alpha", alpha=[0.0, 0.1, 1 / 3])), "--out", str(out)])
    header, rows = _csv_body(out)
    assert all(len(r) == len(header) for r in rows)
    for r in rows:
        for cell in r:
            assert format_number(float(cell)) == cell or cell.lstrip("-").isdigit()


def test_format_number():
    assert format_number(0.1) == "0.1"
    assert format_number(1 / 3) == "0.3333333333333333"
    assert format_number(3) == "3"
    assert format_number(True) == "1"
    assert float(format_number(2.0 / 7.0)) == 2.0 / 7.0


def test_seed_override_changes_simulation(tmp_path):
    config = _write(tmp_path, _cfg("estimation-mse", M=[2], N=[10], alpha=[0.2], trials=200))
    a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
    cli.main(["run", "--config", config, "--out", str(a)])
    cli.main(["run", "--config", config, "--out", str(b), "--seed", "4"])
    cli.main(["run", "--config", config, "--out", str(c), "--seed", "3"])
    assert _csv_body(a) != _csv_body(b)
    assert a.read_bytes() == c.read_bytes()


def test_output_field_used(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = dict(_cfg("alpha-blind-table"), output="from_config.csv")
    assert cli.main(["run", "--config", _write(tmp_path, cfg)]) == 0
    assert (tmp_path / "from_config.csv").exists()


def test_stdout_output(tmp_path, capsys):
    assert cli.main(["run", "--experiment", "alpha-blind-table", "--out", "-"]) == 0
    assert "bits,M,alpha_blind" in capsys.readouterr().out
