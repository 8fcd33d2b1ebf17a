"""End-to-end tests for the command-line interface.

Every invocation goes through a subprocess, exactly as a user would run it;
values printed by the tool are checked against direct library calls, and
repeated runs must be byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from beaconsim.analysis import SweepSpec, estimate_miss_curve
from beaconsim.channel import MeanGains
from beaconsim.protocols import Scheme

BASE_CONFIG = """\
# shared test configuration
[run]
seed = 123
n_trials = 20000

[channel]
pt = 1.0
pr = 2.0
tr = 3.0

[protocol]
scheme = "csa"

[sweep]
rho_db = [0.0, 10.0]
mode = "tail"
"""


def run_cli(*args, config_text=None, tmp_path=None):
    argv = [sys.executable, "-m", "beaconsim.cli", *args]
    if config_text is not None:
        cfg = tmp_path / "cfg.ini"
        cfg.write_text(config_text)
        argv += ["--config", str(cfg)]
    return subprocess.run(argv, capture_output=True, text=False)


def parse_csv(data: bytes):
    return list(csv.DictReader(io.StringIO(data.decode())))


class TestMissSweep:
    def test_csv_matches_library(self, tmp_path):
        proc = run_cli("miss-sweep", config_text=BASE_CONFIG, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 2
        spec = SweepSpec(scheme=Scheme.CSA, means=MeanGains(1.0, 2.0, 3.0),
                         rho_db=(0.0, 10.0), n_trials=20000, seed=123,
                         mode="tail")
        ref = estimate_miss_curve(spec)
        for i, row in enumerate(rows):
            assert float(row["rho_db"]) == ref.rho_db[i]
            assert float(row["estimate"]) == pytest.approx(
                ref.estimate[i], rel=1e-9)
            assert float(row["std_error"]) == pytest.approx(
                ref.std_error[i], rel=1e-9)

    def test_json_full_precision(self, tmp_path):
        proc = run_cli("miss-sweep", "--format", "json",
                       config_text=BASE_CONFIG, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        doc = json.loads(proc.stdout)
        assert doc["meta"]["seed"] == 123
        assert doc["meta"]["kind"] == "miss-sweep"
        spec = SweepSpec(scheme=Scheme.CSA, means=MeanGains(1.0, 2.0, 3.0),
                         rho_db=(0.0, 10.0), n_trials=20000, seed=123,
                         mode="tail")
        ref = estimate_miss_curve(spec)
        for i, row in enumerate(doc["rows"]):
            assert row["estimate"] == ref.estimate[i]
            assert row["std_error"] == ref.std_error[i]

    def test_out_file(self, tmp_path):
        out = tmp_path / "res.csv"
        proc = run_cli("miss-sweep", "--out", str(out),
                       config_text=BASE_CONFIG, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        assert out.exists()
        assert len(parse_csv(out.read_bytes())) == 2

    def test_set_override(self, tmp_path):
        proc = run_cli("miss-sweep", "--set", "sweep.rho_db=[20.0]",
                       "--set", "run.n_trials=5000",
                       config_text=BASE_CONFIG, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 1
        assert float(rows[0]["rho_db"]) == 20.0


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        a = run_cli("miss-sweep", config_text=BASE_CONFIG, tmp_path=tmp_path)
        b = run_cli("miss-sweep", config_text=BASE_CONFIG, tmp_path=tmp_path)
        assert a.returncode == b.returncode == 0
        assert a.stdout == b.stdout

    def test_thread_count_byte_identical(self, tmp_path):
        a = run_cli("miss-sweep", "--threads", "1",
                    config_text=BASE_CONFIG, tmp_path=tmp_path)
        b = run_cli("miss-sweep", "--threads", "4",
                    config_text=BASE_CONFIG, tmp_path=tmp_path)
        assert a.returncode == b.returncode == 0
        assert a.stdout == b.stdout


class TestExitCodes:
    def test_unknown_key_rejected(self, tmp_path):
        cfg = BASE_CONFIG + "\n[sweep]\nbogus_key = 1\n"
        # configparser forbids duplicate sections; append key differently
        cfg = BASE_CONFIG.replace("mode = \"tail\"",
                                  "mode = \"tail\"\nbogus_key = 1")
        proc = run_cli("miss-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 2
        assert b"bogus_key" in proc.stderr

    def test_unknown_section_rejected(self, tmp_path):
        cfg = BASE_CONFIG + "\n[mystery]\nx = 1\n"
        proc = run_cli("miss-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 2
        assert b"mystery" in proc.stderr

    def test_missing_seed_rejected(self, tmp_path):
        cfg = BASE_CONFIG.replace("seed = 123\n", "")
        proc = run_cli("miss-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 2
        assert b"seed" in proc.stderr

    def test_missing_config_file(self, tmp_path):
        proc = run_cli("miss-sweep", "--config", str(tmp_path / "nope.ini"))
        assert proc.returncode == 4

    def test_config_required(self):
        proc = run_cli("miss-sweep")
        assert proc.returncode == 2

    def test_numeric_domain_error(self, tmp_path):
        cfg = BASE_CONFIG + """
[capacity]
p_theta_t = 0.0
p_theta_joint = 0.0
t_c = 10.0
"""
        proc = run_cli("capacity-ergodic", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 3

    def test_bad_value_type(self, tmp_path):
        cfg = BASE_CONFIG.replace("n_trials = 20000", "n_trials = \"many\"")
        proc = run_cli("miss-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 2

    def test_unwritable_out(self, tmp_path):
        proc = run_cli("miss-sweep", "--out",
                       str(tmp_path / "no_dir" / "res.csv"),
                       config_text=BASE_CONFIG, tmp_path=tmp_path)
        assert proc.returncode == 4


class TestOtherKinds:
    def test_joint_sweep(self, tmp_path):
        cfg = BASE_CONFIG.replace('mode = "tail"', 'mode = "channel"')
        proc = run_cli("joint-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 2
        assert 0.0 <= float(rows[0]["estimate"]) <= 1.0

    def test_diversity_single_row(self, tmp_path):
        cfg = BASE_CONFIG.replace("rho_db = [0.0, 10.0]",
                                  "rho_db = [20.0, 26.0, 32.0, 40.0]")
        cfg = cfg.replace("n_trials = 20000", "n_trials = 60000")
        proc = run_cli("diversity", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 1
        assert 1.4 <= float(rows[0]["order"]) <= 2.6

    def test_capacity_ergodic(self, tmp_path):
        cfg = BASE_CONFIG + """
[capacity]
p_theta_t = 0.85
p_theta_joint = 0.7
t_c = 10.0
"""
        proc = run_cli("capacity-ergodic", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 2
        for row in rows:
            assert float(row["lower_mean"]) <= float(row["upper_mean"])

    def test_capacity_outage(self, tmp_path):
        cfg = BASE_CONFIG + """
[capacity]
p_theta_t = 0.85
p_theta_joint = 0.7
t_c = 10.0
epsilons = [0.05, 0.1]
"""
        proc = run_cli("capacity-outage", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 4  # 2 rho x 2 epsilon
        eps = sorted({float(r["epsilon"]) for r in rows})
        assert eps == [0.05, 0.1]

    def test_imperfect(self, tmp_path):
        cfg = BASE_CONFIG.replace('scheme = "csa"', 'scheme = "ocsa"')
        cfg = cfg.replace("rho_db = [0.0, 10.0]", "rho_db = [0.0]")
        cfg += """
[capacity]
p_theta_t = 0.85
p_theta_joint = 0.7
t_c = 10.0
sigma2 = [0.0, 1.0]
"""
        proc = run_cli("imperfect", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 2
        zero = next(r for r in rows if float(r["sigma2"]) == 0.0)
        noisy = next(r for r in rows if float(r["sigma2"]) == 1.0)
        assert float(zero["relative_upper_loss"]) == 0.0
        assert float(zero["wrong_relay_mc"]) == 0.0
        assert float(noisy["wrong_relay_mc"]) <= float(
            noisy["wrong_relay_bound"]) + 3 * float(noisy["wrong_relay_se"])

    def test_throughput(self, tmp_path):
        cfg = BASE_CONFIG.replace("rho_db = [0.0, 10.0]", "rho_db = 0.0")
        cfg += """
[throughput]
w1 = [0.0, 0.15]
w2 = [0.0, 0.3]
"""
        proc = run_cli("throughput", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 4
        origin = next(r for r in rows
                      if float(r["w1"]) == 0.0 and float(r["w2"]) == 0.0)
        assert float(origin["loss_mc"]) == 0.0
        assert float(origin["loss_bound"]) == 0.0
        for row in rows:
            assert float(row["loss_mc"]) <= float(row["loss_bound"]) + 3 * float(
                row["loss_se"])

    def test_multiuser(self, tmp_path):
        cfg = """
[run]
seed = 7
n_trials = 5000

[multiuser]
m_pairs = 2
primary = 1.0
inter = 1.0
user = 0

[sweep]
rho_db = [0.0, 10.0]
mode = "tail"
"""
        proc = run_cli("multiuser", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr
        rows = parse_csv(proc.stdout)
        assert len(rows) == 2
        assert float(rows[1]["estimate"]) < float(rows[0]["estimate"])

    def test_selfcheck(self):
        proc = run_cli("selfcheck")
        assert proc.returncode == 0, proc.stderr
        assert b"ok" in proc.stdout.lower()


class TestProtocolSplit:
    def test_explicit_uses(self, tmp_path):
        cfg = BASE_CONFIG.replace('scheme = "csa"',
                                  'scheme = "csa"\nd1 = 2\nd2 = 3')
        proc = run_cli("miss-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr

    def test_total_and_alpha(self, tmp_path):
        cfg = BASE_CONFIG.replace('scheme = "csa"',
                                  'scheme = "csa"\nd = 4\nalpha = 0.5')
        proc = run_cli("miss-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 0, proc.stderr

    def test_conflicting_split_rejected(self, tmp_path):
        cfg = BASE_CONFIG.replace('scheme = "csa"',
                                  'scheme = "csa"\nd = 4\nd1 = 2\nd2 = 2')
        proc = run_cli("miss-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 2

    def test_bad_scheme(self, tmp_path):
        cfg = BASE_CONFIG.replace('scheme = "csa"', 'scheme = "warp"')
        proc = run_cli("miss-sweep", config_text=cfg, tmp_path=tmp_path)
        assert proc.returncode == 2
