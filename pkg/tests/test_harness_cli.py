import csv

import numpy as np
import pytest

from odma_ura.cli import main
from odma_ura.config import ConfigError, SystemConfig, save_config
from odma_ura.harness import (
    FACTOR_HEADER,
    PUPE_HEADER,
    SER_HEADER,
    ExperimentSpec,
    parse_sweep,
    run_detector_bench,
    run_end_to_end,
    run_factor_bench,
    write_residual_history,
)


def read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_parse_sweep():
    assert parse_sweep("ebn0=-8,-7.5") == ("ebn0", (-8.0, -7.5))
    assert parse_sweep("snr=inf")[1] == (float("inf"),)
    for bad in ("ebn0", "ebn0=a,b"):
        with pytest.raises(ConfigError):
            parse_sweep(bad)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec("pupe", "ebn0", (), 1)
    with pytest.raises(ConfigError):
        ExperimentSpec("pupe", "ebn0", (1.0,), 0)
    with pytest.raises(ConfigError):
        ExperimentSpec("ser", "ebn0", (1.0,), 1)


def test_detector_bench_csv(tmp_path):
    spec = ExperimentSpec("ser", "antennas", (16, 32), trials=2, detector_users=8, snr_db=5.0)
    rows = run_detector_bench(spec, tmp_path / "s.csv", slots=50)
    table = read(tmp_path / "s.csv")
    assert table[0] == SER_HEADER and len(table) == 5
    assert rows[0]["decisions"] == 2 * 8 * 50


def test_factor_bench_zero_users(tmp_path):
    spec = ExperimentSpec("factor", "users", (0,), trials=2, snr_db=float("inf"))
    rows = run_factor_bench(spec, tmp_path / "f.csv")
    assert rows[0]["frame_error"] == 0.0 and rows[0]["support_recovery"] == 1.0
    assert read(tmp_path / "f.csv")[0] == FACTOR_HEADER


def test_end_to_end_workers_do_not_change_output(tmp_path):
    base = SystemConfig().replace(active_users=40, ebn0_db=-4.0)
    out = []
    for workers in (1, 2):
        spec = ExperimentSpec("pupe", "ebn0", (-4.0,), trials=2, base=base, workers=workers)
        run_end_to_end(spec, tmp_path / f"p{workers}.csv")
        out.append((tmp_path / f"p{workers}.csv").read_bytes())
    assert out[0] == out[1]
    assert read(tmp_path / "p1.csv")[0] == PUPE_HEADER


def test_residual_history(tmp_path):
    write_residual_history(tmp_path / "r.csv", [3.0, 2.0])
    assert read(tmp_path / "r.csv") == [["iter", "residual"], ["0", "3.0"], ["1", "2.0"]]


def test_cli_runs_and_is_deterministic(tmp_path):
    args = ["run-ser", "--sweep", "users=4,8", "--trials", "2", "--seed", "5"]
    assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
    assert main(args + ["--out", str(tmp_path / "b.csv")]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_cli_with_config_file(tmp_path):
    cfg_path = tmp_path / "c.json"
    save_config(SystemConfig().replace(antennas=32), cfg_path)
    rc = main(["run-factor", "--config", str(cfg_path), "--sweep", "users=5", "--trials", "1",
               "--out", str(tmp_path / "f.csv")])
    assert rc == 0
    assert read(tmp_path / "f.csv")[1][0] == "32"


@pytest.mark.parametrize(
    "args, code",
    [
        (["run-pupe", "--sweep", "bogus=1"], 2),
        (["run-pupe", "--trials", "0"], 2),
        (["run-pupe", "--config", "/no/such/file.json"], 3),
        (["run-ser", "--trials", "1", "--sweep", "snr=0"], None),
    ],
)
def test_cli_error_codes(tmp_path, args, code):
    out = tmp_path / "missing_dir" / "x.csv" if code is None else tmp_path / "x.csv"
    rc = main(args + ["--out", str(out)])
    assert rc == (3 if code is None else code)


def test_cli_rejects_bad_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"antennas": 10, "payload_bits": 3}')
    assert main(["run-factor", "--config", str(path), "--out", str(tmp_path / "x.csv")]) == 2


def test_factor_bench_distinct_pilots_flag(tmp_path):
    rc = main(["run-factor", "--sweep", "users=30", "--trials", "2", "--distinct-pilots",
               "--out", str(tmp_path / "f.csv")])
    assert rc == 0
    assert read(tmp_path / "f.csv")[1][5] == "1.0"
