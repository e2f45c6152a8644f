import json
import subprocess
import sys

import numpy as np
import pytest

from onebit_ofdm import cli
from onebit_ofdm.config import Dac, Precoder, make_config, save_config
from onebit_ofdm.engine import Experiment, ExperimentKind, collect, osr_to_n, parse_float_list, run, seed_schedule
from onebit_ofdm.metrics import CSV_COLUMNS, read_csv


def test_seed_schedule_deterministic():
    a = seed_schedule(3, 7, "noise", 2).standard_normal(5)
    b = seed_schedule(3, 7, "noise", 2).standard_normal(5)
    assert np.array_equal(a, b)
    with pytest.raises(ValueError, match="role"):
        seed_schedule(3, 7, "nois")


@pytest.mark.parametrize(
    "other",
    [(0, 1, "channel", ()), (0, 0, "data", ()), (1, 0, "channel", ()), (0, 0, "channel", (1,))],
)
def test_seed_schedule_streams_uncorrelated(other):
    n = 10**5
    ref = seed_schedule(0, 0, "channel").standard_normal(n)
    seed, trial, role, extra = other
    x = seed_schedule(seed, trial, role, *extra).standard_normal(n)
    assert abs(np.corrcoef(ref, x)[0, 1]) < 0.05
    assert not np.array_equal(ref[:10], x[:10])


def test_osr_to_n_and_parse():
    assert osr_to_n(300, 1.7) == 510
    assert osr_to_n(300, 2) == 600
    assert parse_float_list(["1,2", "3", " 4.5 ,"]) == (1.0, 2.0, 3.0, 4.5)


def small_config():
    return make_config(B=8, U=2, N=32, S=20, L=2, seed=1)


def test_experiment_check_rejects_bad_sweeps():
    cfg = small_config()
    with pytest.raises(ValueError, match="trial"):
        Experiment(ExperimentKind.SUM_RATE, cfg, trials=0).check()
    with pytest.raises(ValueError, match="empty"):
        Experiment(ExperimentKind.SUM_RATE, cfg, snr_db=()).check()
    with pytest.raises(ValueError, match="empty"):
        Experiment(ExperimentKind.OSR_SWEEP, cfg).check()
    with pytest.raises(ValueError, match="smaller than S"):
        Experiment(ExperimentKind.OSR_SWEEP, cfg, n_values=(16,)).check()


def test_collect_covers_all_combinations():
    exp = Experiment(ExperimentKind.SUM_RATE, small_config(), snr_db=(0.0, 10.0), trials=3)
    recs = collect(exp)
    combos = {(r.precoder, r.dac_mode) for r in recs}
    assert combos == {(p.value, d.value) for p in Precoder for d in Dac}
    assert len(recs) == 8
    assert all(r.metric == "sum-rate" and r.trials == 3 for r in recs)


def test_osr_sweep_ids_and_order():
    exp = Experiment(
        ExperimentKind.OSR_SWEEP, small_config(), snr_db=(5.0,), trials=4, n_values=(20, 40),
        precoders=(Precoder.ZF,), dacs=(Dac.ONE_BIT,), min_trials=4,
    )
    recs = collect(exp)
    ids = sorted({r.scenario_id for r in recs})
    assert ids == ["B8-U2-N20-S20-L2-osr1", "B8-U2-N40-S20-L2-osr2"]


def test_psd_experiment_records():
    exp = Experiment(ExperimentKind.PSD, small_config(), snr_db=(10.0,), trials=2,
                     precoders=(Precoder.MRT,), dacs=(Dac.ONE_BIT,))
    recs = collect(exp)
    assert [r.metric for r in recs[:2]] == ["psd-tx@0", "psd-tx@1"]
    assert len(recs) == 2 * 32


def test_run_writes_csv_and_sidecar(tmp_path):
    cfg = small_config()
    out = tmp_path / "sub" / "ber.csv"
    exp = Experiment(ExperimentKind.BER_UNCODED, cfg, snr_db=(0.0,), trials=3, out=out,
                     precoders=(Precoder.ZF,), dacs=(Dac.ONE_BIT,), min_trials=3)
    assert run(exp) == out
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["config"] == cfg.to_dict()
    assert side["experiment"]["kind"] == "ber-uncoded"
    assert side["experiment"]["code"]["generators"] == ["0o133", "0o171"]
    assert "created" in side and "version" in side
    recs = read_csv(out)
    assert {r.metric for r in recs} == {"uncoded-ber-sim", "uncoded-ber-analytic"}


def write_small_config(tmp_path):
    path = tmp_path / "cfg.json"
    save_config(small_config(), path)
    return path


def test_cli_runs_and_schema(tmp_path, capsys):
    cfg = write_small_config(tmp_path)
    out = tmp_path / "rate.csv"
    code = cli.main(["sum-rate", "--config", str(cfg), "--snr-db", "0,10", "20",
                     "--trials", "2", "--out", str(out), "--precoder", "zf"])
    assert code == 0
    assert capsys.readouterr().out.strip() == str(out)
    lines = out.read_text().splitlines()
    assert tuple(lines[0].split(",")) == CSV_COLUMNS
    recs = read_csv(out)
    assert {r.snr_db for r in recs} == {0.0, 10.0, 20.0}
    assert {r.precoder for r in recs} == {"zf"}


def test_cli_byte_identical_rerun(tmp_path):
    cfg = write_small_config(tmp_path)
    outs = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for out in outs:
        assert cli.main(["ber-uncoded", "--config", str(cfg), "--snr-db", "-5", "5",
                         "--trials", "4", "--min-trials", "2", "--out", str(out)]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
    # a different seed changes the data
    other = tmp_path / "c.csv"
    cli.main(["ber-uncoded", "--config", str(cfg), "--snr-db", "-5", "5", "--trials", "4",
              "--min-trials", "2", "--seed", "99", "--out", str(other)])
    assert other.read_bytes() != outs[0].read_bytes()


def test_cli_bad_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"B": 2, "U": 4, "N": 32, "S": 20, "L": 2}))
    assert cli.main(["sum-rate", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 2
    err = capsys.readouterr().err
    assert "error" in err and "U" in err
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"B": 8, "U": 2, "N": 32, "S": 20, "L": 2, "bogus": 1}))
    assert cli.main(["sum-rate", "--config", str(unknown)]) == 2
    assert "bogus" in capsys.readouterr().err
    assert cli.main(["sum-rate", "--config", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["osr-sweep", "--config", str(write_small_config(tmp_path)), "--n-values", "10"]) == 2


def test_cli_usage_error():
    with pytest.raises(SystemExit) as exc:
        cli.main(["no-such-experiment"])
    assert exc.value.code != 0


def test_module_entry_point(tmp_path):
    cfg = write_small_config(tmp_path)
    out = tmp_path / "m.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "onebit_ofdm", "sum-rate", "--config", str(cfg), "--trials", "1",
         "--snr-db", "0", "--out", str(out)],
        capture_output=True, text=True, timeout=300,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
