import csv
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nomasched.cli import OUTPUT_COLUMNS, cmd_run, cmd_sweep, main
from nomasched.config import ConfigError, emit_config, parse_config
from nomasched.engine import ExperimentConfig
from nomasched.sched import SchedulerKind

TINY = """
num_subbands: 8
num_users: 4
num_slots: 6
num_drops: 2
seed: 3
scheduler: [PF_NOMA, WNOPF]
"""


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# --------------------------------------------------------------- config ----

def test_empty_config_gives_defaults():
    c = parse_config("")
    g = c.geometry
    assert (g.bs_power_dbm, g.bandwidth_hz, g.num_subbands, g.radius_m) == (46.0, 10e6, 128, 500.0)
    assert (c.t_c, c.b_factor) == (100, 1.5)
    assert c.geometry.p_max_mw == pytest.approx(10 ** 4.6)


def test_scheduler_key():
    assert parse_config("scheduler: WNOPF").schedulers == (SchedulerKind.WNOPF,)


@pytest.mark.parametrize("text,path", [
    ("num_users: 0", "num_users"),
    ("num_users: 2.5", "num_users"),
    ("bogus: 1", "bogus"),
    ("flags: {fading: rician}", "flags.fading"),
    ("flags: {nope: 1}", "flags.nope"),
    ("num_subbands: -1", "num_subbands"),
    ("cell_radius_m: 10", "flags.min_distance_m"),
    ("services: [{name: a, target_rate_bps: 1.0e6}]", "services[0]"),
    ("services: [{name: a, target_rate_bps: 1.0e6, num_users: 3}]", "services"),
    ("scheduler: MAXCI", "scheduler"),
    ("[1, 2]", "<root>"),
    ("a: [", "<root>"),
])
def test_config_errors_name_key(text, path):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert str(info.value).startswith(path)


def test_services_num_users_consecutive():
    c = parse_config("""
num_users: 6
services:
  - {name: a, target_rate_bps: 1.0e6, num_users: 2}
  - {name: b, target_rate_bps: 2.0e6, num_users: 4}
""")
    assert [s.users for s in c.services] == [(0, 1), (2, 3, 4, 5)]


configs = st.builds(
    lambda K, S, n_s, kinds, tc, b, a, seed, v, clamp, order: ExperimentConfig(
        num_users=K, max_users_per_subband=n_s, schedulers=tuple(kinds), t_c=tc, b_factor=b,
        ftpa_alpha=a, seed=seed, velocity_kmh=v, clamp_weights=clamp, subband_order=order
    ).with_(num_subbands=S),
    st.integers(1, 30), st.integers(1, 256), st.integers(1, 3),
    st.lists(st.sampled_from(list(SchedulerKind)), min_size=1, max_size=3),
    st.integers(1, 500), st.floats(0.1, 10), st.floats(0, 2), st.integers(0, 2**31),
    st.floats(0, 300), st.booleans(), st.sampled_from(["ascending", "random"]))


@settings(max_examples=60)
@given(configs)
def test_config_round_trip(cfg):
    assert parse_config(emit_config(cfg)) == cfg


# ------------------------------------------------------------------ run ----

def test_run_writes_files(tmp_path):
    cfg = parse_config(TINY)
    paths = cmd_run(cfg, tmp_path)
    assert {p.name for p in paths} == {"metrics.csv", "summary.json", "user_rates.csv", "gini_short.csv"}
    rows = _rows(tmp_path / "metrics.csv")
    assert tuple(rows[0]) == OUTPUT_COLUMNS
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["schema_version"] == 1
    for exp in summary["experiments"]:
        assert 0.0 <= exp["gini_long"] <= 1.0
    rates = _rows(tmp_path / "user_rates.csv")[1:]
    per_user = {}
    for r in rates:
        per_user[(r[1], r[2], r[3])] = per_user.get((r[1], r[2], r[3]), 0) + 1
    assert set(per_user.values()) == {cfg.num_slots}


def test_csv_values_round_trip(tmp_path):
    cfg = parse_config(TINY)
    from nomasched.engine import run_experiment
    res = run_experiment(cfg, "PF_NOMA")
    cmd_run(cfg.with_(schedulers=("PF_NOMA",)), tmp_path)
    rows = {r[5]: r[6] for r in _rows(tmp_path / "metrics.csv")[1:]}
    assert float(rows["system_throughput"]) == res.report.system_throughput_bps
    assert float(rows["gini_long"]) == res.report.gini_long


def test_rerun_byte_identical(tmp_path):
    cfg = parse_config(TINY)
    cmd_run(cfg, tmp_path / "a")
    cmd_run(cfg, tmp_path / "b")
    for name in ("metrics.csv", "summary.json", "user_rates.csv", "gini_short.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_grid_rows(tmp_path):
    cfg = parse_config("num_subbands: 4\nnum_slots: 2\nnum_drops: 1\n"
                       "scheduler: [PF_NOMA, WNOPF, PF_OMA, WOPF]")
    cmd_sweep(cfg, "K", ["5", "10", "15", "20", "25", "30"], tmp_path)
    rows = _rows(tmp_path / "metrics.csv")[1:]
    thr = [r for r in rows if r[5] == "system_throughput"]
    assert len(thr) == 24
    assert {(r[0], r[1]) for r in thr} == {(f"K={k}", s) for k in (5, 10, 15, 20, 25, 30)
                                          for s in ("PF_NOMA", "WNOPF", "PF_OMA", "WOPF")}


def test_sweep_singleton_matches_run(tmp_path):
    cfg = parse_config(TINY)
    cmd_run(cfg, tmp_path / "run")
    cmd_sweep(cfg, "K", [str(cfg.num_users)], tmp_path / "sweep")
    a = [r[1:] for r in _rows(tmp_path / "run" / "metrics.csv")[1:]]
    b = [r[1:] for r in _rows(tmp_path / "sweep" / "metrics.csv")[1:]]
    assert a == b


def test_sweep_rejects_empty_and_bad(tmp_path):
    cfg = parse_config(TINY)
    with pytest.raises(ConfigError):
        cmd_sweep(cfg, "K", [], tmp_path)
    with pytest.raises(ConfigError):
        cmd_sweep(cfg, "K", ["ten"], tmp_path)
    with pytest.raises(ConfigError):
        cmd_sweep(cfg, "alpha", ["1"], tmp_path)


# ---------------------------------------------------------------- main ----

def test_main_run_and_compare(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(TINY)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    assert main(["compare", "--config", str(cfg), "--a", "WOPF", "--b", "PF_OMA",
                 "--out", str(tmp_path / "c")]) == 0
    summary = json.loads((tmp_path / "c" / "summary.json").read_text())
    assert summary["comparison"]["a"] == "WOPF"
    assert summary["comparison"]["ratio1"] > 0


def test_main_sweep_scheduler(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(TINY)
    assert main(["sweep", "--config", str(cfg), "--axis", "scheduler", "--values",
                 "PF_OMA,WOPF", "--out", str(tmp_path / "s")]) == 0


def test_exit_code_config_error(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("num_users: 0\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "num_users" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path)]) == 2


def test_exit_code_runtime_error(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(TINY)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    # output directory path runs through a regular file
    assert main(["run", "--config", str(cfg), "--out", str(blocker / "out")]) == 3
    assert "error" in capsys.readouterr().err


def test_bad_subcommand_usage():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
