import json
import os

import pytest

from parisian_ruin import cli, harness
from parisian_ruin.config import KEYS, ExperimentConfig, dump_config, parse_config
from parisian_ruin.errors import ParameterError

FAST = """
a = 0.8
rho = 0.1
s1 = 0.5
s2 = 0.5
u_list = 2, 3
n_paths = 10000
m = 8
min_steps = 64
const_n_paths = 2000
t_max = 8, 16
seed = 7
"""


def _cfg(text=FAST, **kw):
    cfg = parse_config(text)
    return cfg.replace(**kw) if kw else cfg


class TestConfig:
    def test_parse(self):
        cfg = _cfg("# comment\na = 0.5  # trailing\nrho = -0.2\nu_list = 1, 2.5\ntilt = off\n")
        assert (cfg.a, cfg.rho, cfg.u_list, cfg.tilt) == (0.5, -0.2, (1.0, 2.5), False)
        assert cfg.params.a == 0.5

    def test_round_trip(self):
        cfg = _cfg(workers=3, const_delta=0.0625)
        assert parse_config(dump_config(cfg)) == cfg

    @pytest.mark.parametrize("text,key", [
        ("alpha = 1", "alpha"), ("a = 0.5\na = 0.6", "a"), ("rho = x", "rho"), ("rho = 1.5", "rho"),
        ("n_paths = 10", "n_paths"), ("tilt = maybe", "tilt"), ("u_list = 3, 2", "u_list"),
        ("seed = -1", "seed"), ("m = 4", "m"), ("t_max = 4, 2", "t_max"), ("just words", "line 1"),
        ("convention = other", "convention"), ("workers = 0", "workers"),
    ])
    def test_errors_name_key(self, text, key):
        with pytest.raises(ParameterError) as ei:
            parse_config(text)
        assert ei.value.field == key

    def test_keys_cover_fields(self):
        assert set(KEYS) == set(ExperimentConfig().to_dict())

    def test_worker_precedence(self, monkeypatch):
        monkeypatch.setenv("PARISIAN_WORKERS", "5")
        assert _cfg().resolved_workers() == 5
        assert _cfg(workers=2).resolved_workers() == 2
        monkeypatch.setenv("PARISIAN_WORKERS", "0")
        with pytest.raises(ParameterError):
            _cfg().resolved_workers()
        monkeypatch.delenv("PARISIAN_WORKERS")
        assert _cfg().resolved_workers() == 1

    def test_report_dict_drops_execution_settings(self):
        assert _cfg(workers=1).report_dict() == _cfg(workers=4, output="elsewhere").report_dict()


class TestHarness:
    def test_classify(self):
        d = harness.classify(_cfg())
        assert d["regime"] == "CASE_I"
        assert [c["name"] for c in d["constants"]] == ["R_S", "R_00"]
        assert d["local_exponents"]["relation"] == "diagonal"

    def test_empty_sweep_is_header_only(self):
        rep = harness.run_experiment(_cfg(u_list=(), s1=0.0, s2=0.0))
        assert harness.report_csv(rep) == ",".join(harness.CSV_HEADER) + "\n"
        assert rep.theoretical_limit == 1.0 and rep.limit_stderr == 0.0

    def test_zero_windows(self):
        rep = harness.run_experiment(_cfg(s1=0.0, s2=0.0))
        assert rep.theoretical_limit == 1.0
        assert [r["ratio"] for r in rep.rows] == [1.0, 1.0]
        assert all(r["seconds"] is None for r in rep.rows)

    def test_json_round_trip(self):
        rep = harness.run_experiment(_cfg())
        text = harness.report_json(rep)
        back = harness.ExperimentReport.from_dict(json.loads(text))
        assert harness.report_json(back) == text
        assert harness.report_csv(back) == harness.report_csv(rep)

    def test_bytes_identical_across_workers(self, tmp_path):
        paths = []
        for w in (1, 3):
            out = tmp_path / f"w{w}"
            rep = harness.run_experiment(_cfg(workers=w))
            paths.append(harness.emit_report(rep, str(out)))
        for a, b in zip(*paths):
            assert open(a, "rb").read() == open(b, "rb").read()

    def test_timing_column(self):
        rep = harness.run_experiment(_cfg(timing=True, u_list=(2.0,)))
        assert rep.rows[0]["seconds"] >= 0

    def test_one_estimation_per_constant(self):
        # CASE_III with equal windows: P_S1/P_S2 and H_S1/H_S2 are the same two constants
        cfg = _cfg(a=1.0, rho=-0.5, s1=0.3, s2=0.3, delta_ladder=(4.0, 8.0))
        cache = harness.ConstantCache()
        lc, recs, _ = harness.estimate_constants(cfg, cache)
        assert sum(cache.calls.values()) == 2 and set(cache.calls.values()) == {1}
        assert lc.values["P_S1"] == lc.values["P_S2"]
        assert [r["name"] for r in recs] == ["P_S1", "P_S2", "H_S1", "H_S2"]
        harness.run_experiment(cfg.replace(u_list=()), cache)
        assert sum(cache.calls.values()) == 2

    def test_shared_constants_have_no_spurious_error(self):
        # R_S and R_00 coincide at zero windows: the ratio is exactly 1 with no stderr
        cfg = _cfg(s1=0.0, s2=0.0, rho=0.1, u_list=())
        lc, recs, _ = harness.estimate_constants(cfg.replace(const_n_paths=500))
        val, se = harness.limit_with_stderr(cfg, lc, harness.record_keys(recs))
        assert val == 1.0 and se == 0.0

    def test_quality_errors_recorded_per_u(self):
        rep = harness.run_experiment(_cfg(tilt=False, u_list=(2.0, 9.0), s1=0.0, s2=0.0))
        assert [r["u"] for r in rep.rows] == [2.0]
        assert rep.errors and rep.errors[0]["u"] == 9.0


def _write(tmp_path, text):
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return str(p)


class TestCli:
    def test_classify(self, tmp_path, capsys):
        assert cli.main(["classify", "--config", _write(tmp_path, FAST)]) == 0
        assert json.loads(capsys.readouterr().out)["regime"] == "CASE_I"

    def test_parameter_error_exit_2(self, tmp_path, capsys):
        assert cli.main(["classify", "--config", _write(tmp_path, "rho = 2")]) == 2
        assert "rho" in capsys.readouterr().err
        assert cli.main(["classify", "--config", _write(tmp_path, "bogus = 1")]) == 2

    def test_missing_file_exit_1(self, tmp_path):
        assert cli.main(["classify", "--config", str(tmp_path / "nope.cfg")]) == 1

    def test_report_and_composition(self, tmp_path):
        cfgp = _write(tmp_path, FAST)
        out = str(tmp_path / "out")
        assert cli.main(["report", "--config", cfgp, "--out", out]) == 0
        direct = open(os.path.join(out, "report.csv")).read()
        assert direct.splitlines()[0] == ",".join(harness.CSV_HEADER)
        assert len(direct.splitlines()) == 3
        assert cli.main(["constants", "--config", cfgp, "--out", out]) == 0
        assert cli.main(["simulate", "--config", cfgp, "--out", out]) == 0
        comp = str(tmp_path / "comp")
        assert cli.main(["report", "--config", cfgp, "--out", comp, "--format", "json",
                         "--constants", os.path.join(out, "constants.json"),
                         "--simulation", os.path.join(out, "simulate.json")]) == 0
        a = json.load(open(os.path.join(comp, "report.json")))
        assert cli.main(["report", "--config", cfgp, "--out", out, "--format", "json"]) == 0
        b = json.load(open(os.path.join(out, "report.json")))
        assert a == b

    def test_workers_flag_does_not_change_bytes(self, tmp_path):
        cfgp = _write(tmp_path, FAST)
        outs = []
        for w in ("1", "4"):
            out = str(tmp_path / w)
            assert cli.main(["report", "--config", cfgp, "--out", out, "--workers", w]) == 0
            outs.append(open(os.path.join(out, "report.csv"), "rb").read())
        assert outs[0] == outs[1]

    def test_quality_exit_3(self, tmp_path):
        text = FAST.replace("u_list = 2, 3", "u_list = 9") + "s1 = 0\ns2 = 0\n"
        text = text.replace("s1 = 0.5\ns2 = 0.5\n", "")
        cfgp = _write(tmp_path, text)
        assert cli.main(["simulate", "--config", cfgp, "--out", str(tmp_path), "--tilt", "off"]) == 3

    def test_unplateaued_ladder_exit_3(self, tmp_path):
        text = FAST.replace("t_max = 8, 16", "t_max = 1, 2")
        cfgp = _write(tmp_path, text)
        assert cli.main(["constants", "--config", cfgp, "--out", str(tmp_path)]) == 3
        doc = json.load(open(tmp_path / "constants.json"))
        assert any(w.startswith("R_S: truncation ladder") for w in doc["warnings"])
        cfgp = _write(tmp_path, text + "fail_on_warnings = off\n")
        assert cli.main(["constants", "--config", cfgp, "--out", str(tmp_path)]) == 0
