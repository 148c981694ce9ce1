import json

import numpy as np
import pytest

import holeburn as hb
from holeburn import csvio
from holeburn.cli import main
from holeburn.config import ConfigError, load_config


class TestConfig:
    def test_defaults(self):
        cfg = load_config(None)
        assert cfg.material.sat_intensity == 1.4e7
        assert cfg.beam_power == 20e-6
        assert cfg.domain.n_delta == 128
        assert cfg.zeeman.g_ground == 1.9e10

    def test_file_overrides(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("""
[material]
sat_intensity_w_per_m2 = 2.0e7

[beam]
power_w = 5e-6

[domain]
n_r = 16
n_z = 16
n_delta = 16

[zeeman]
stray_field_t = 0
""")
        cfg = load_config(path)
        assert cfg.material.sat_intensity == 2.0e7
        assert cfg.material.sigma_ion == 1e-22  # untouched default
        assert cfg.beam_power == 5e-6
        assert cfg.domain.n_r == 16
        assert cfg.zeeman.stray_field == 0.0

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[material]\nnot_a_key = 3\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[detector]\ngain = 3\n")
        with pytest.raises(ConfigError, match="unknown section"):
            load_config(path)

    def test_bad_type_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[domain]\nn_r = sixteen\n")
        with pytest.raises(ConfigError, match="n_r"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="nope.ini"):
            load_config(tmp_path / "nope.ini")

    def test_invalid_value_rejected(self, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[material]\ncoll0 = 2.0\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_to_dict_echoes_schema(self):
        d = load_config(None).to_dict()
        assert d["material"]["sat_intensity_w_per_m2"] == 1.4e7
        assert d["fit"]["confidence"] == 0.80


class TestCsvIO:
    def test_decay_curve_roundtrip(self, tmp_path):
        curve = hb.DecayCurve(time_s=np.array([0.0, 1.5]),
                              counts_per_s=np.array([10.0, 5.25]),
                              power_w=2e-5, meta={"gamma_trap_per_s": 7e4})
        path = tmp_path / "c.csv"
        csvio.write_decay_curve(path, curve)
        back = csvio.read_decay_curve(path)
        assert np.array_equal(back.time_s, curve.time_s)
        assert np.array_equal(back.counts_per_s, curve.counts_per_s)
        assert back.power_w == 2e-5
        assert float(back.meta["gamma_trap_per_s"]) == 7e4

    def test_raw_scan_roundtrip(self, tmp_path):
        scan = hb.gen_hole_scan(np.linspace(-1e8, 1e8, 200), 1.0, 0.3, 0.0,
                                5e6, 100.0, aom_off_range=(0, 20),
                                fluor_offset=3.0, power_offset=1.0)
        path = tmp_path / "s.csv"
        csvio.write_raw_scan(path, scan)
        back = csvio.read_raw_scan(path)
        assert back.aom_off_range == (0, 20)
        assert np.array_equal(back.freq, scan.freq)
        assert np.array_equal(back.fluor_counts, scan.fluor_counts)

    def test_raw_scan_missing_range(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("freq_hz,fluor_counts,power_counts\n0.0,1.0,1.0\n"
                        "1.0,1.0,1.0\n")
        with pytest.raises(ValueError, match="aom_off_range"):
            csvio.read_raw_scan(path)
        back = csvio.read_raw_scan(path, aom_off_range=(0, 1))
        assert back.aom_off_range == (0, 1)

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="missing columns"):
            csvio.read_xy(path, "wait_time_s", "area")


class TestCli:
    def test_missing_config_exit_2(self, tmp_path, capsys):
        code = main(["--config", str(tmp_path / "absent.ini"), "zeeman",
                     "--delta-f", "1e6", "--out", str(tmp_path / "z.csv")])
        assert code == 2
        assert "absent.ini" in capsys.readouterr().err

    def test_zeeman_empty_list_header_only(self, tmp_path):
        out = tmp_path / "z.csv"
        assert main(["zeeman", "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("delta_f_hz,")

    def test_zeeman_table_values(self, tmp_path):
        out = tmp_path / "z.csv"
        assert main(["zeeman", "--delta-f", "44.5e6,19e6",
                     "--out", str(out)]) == 0
        rows = out.read_text().strip().splitlines()[1:]
        first = rows[0].split(",")
        assert float(first[2]) == pytest.approx(1.0e-3)  # b_sum_total
        second = rows[1].split(",")
        assert float(second[1]) == pytest.approx(1.0e-3)  # b_ground_total

    def test_gen_decay_deterministic(self, tmp_path):
        args = ["gen", "decay", "--power-w", "2e-6", "--t-end", "5",
                "--n-t", "3", "--tol", "0", "--noise", "poisson",
                "--seed", "3"]
        f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main([*args, "--out", str(f1)]) == 0
        assert main([*args, "--out", str(f2)]) == 0
        assert f1.read_text() == f2.read_text()

    def test_gen_matches_simulate(self, tmp_path):
        # identical refinement settings produce identical scaled signals
        sim_out = tmp_path / "sim.csv"
        gen_out = tmp_path / "gen.csv"
        cfgfile = tmp_path / "cfg.ini"
        cfgfile.write_text("[domain]\nn_r = 16\nn_z = 16\nn_delta = 32\n")
        common = ["--config", str(cfgfile)]
        assert main([*common, "simulate", "--t-end", "5", "--n-t", "3",
                     "--out", str(sim_out)]) == 0
        assert main([*common, "gen", "decay", "--t-end", "5", "--n-t", "3",
                     "--out", str(gen_out)]) == 0
        sim = np.loadtxt(sim_out, delimiter=",", skiprows=1)
        gen = csvio.read_decay_curve(gen_out)
        assert np.allclose(gen.counts_per_s, sim[:, 2], rtol=1e-12)
        # scaled column decays toward but stays above the B*P0 floor
        floor = 9.4e7 * 20e-6
        assert np.all(np.diff(sim[:, 2]) < 0)
        assert np.all(sim[:, 2] > floor)

    def test_simulate_t_end_zero_single_row(self, tmp_path):
        out = tmp_path / "sig.csv"
        assert main(["simulate", "--t-end", "0", "--out", str(out)]) == 0
        data = np.loadtxt(out, delimiter=",", skiprows=1)
        assert data.shape == (3,)
        assert data[0] == 0.0

    def test_simulate_zero_tol_exit_3(self, tmp_path):
        cfgfile = tmp_path / "cfg.ini"
        cfgfile.write_text("[domain]\nn_r = 8\nn_z = 8\nn_delta = 8\n")
        code = main(["--config", str(cfgfile), "simulate", "--t-end", "2",
                     "--n-t", "2", "--tol", "0",
                     "--out", str(tmp_path / "x.csv")])
        assert code == 3

    def test_fit_hole_end_to_end(self, tmp_path):
        scan_path = tmp_path / "scan.csv"
        report_path = tmp_path / "hole.json"
        assert main(["gen", "holescan", "--center=-50e6", "--fwhm", "6e6",
                     "--power-slope", "0.3", "--fluor-offset", "120",
                     "--power-offset", "33", "--seed", "7",
                     "--out", str(scan_path)]) == 0
        assert main(["fit", "hole", "--scan", str(scan_path),
                     "--out", str(report_path),
                     "--treated-out", str(tmp_path / "treated.csv")]) == 0
        report = json.loads(report_path.read_text())
        assert report["fwhm_hz"] == pytest.approx(6e6, rel=1e-5)
        assert report["hom_linewidth_hz"] == pytest.approx(3e6, rel=1e-5)
        assert report["config"]["material"]["sat_intensity_w_per_m2"] == 1.4e7
        treated = (tmp_path / "treated.csv").read_text().splitlines()
        header = [l for l in treated if l.startswith("freq_hz")][0]
        assert header == "freq_hz,fluor_counts,power_counts,excluded"

    def test_fit_hole_auto_aom_detection(self, tmp_path):
        scan_path = tmp_path / "scan.csv"
        report_path = tmp_path / "hole.json"
        assert main(["gen", "holescan", "--center=-50e6", "--fwhm", "6e6",
                     "--aom-off", "150:420", "--fluor-offset", "90",
                     "--power-offset", "40", "--out", str(scan_path)]) == 0
        assert main(["fit", "hole", "--scan", str(scan_path),
                     "--aom-off", "auto", "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert report["fwhm_hz"] == pytest.approx(6e6, rel=1e-5)

    def test_fit_expdecay_end_to_end(self, tmp_path):
        series = tmp_path / "series.csv"
        report = tmp_path / "exp.json"
        assert main(["gen", "holedecay", "--tau", "0.072", "--offset", "0.05",
                     "--out", str(series)]) == 0
        assert main(["fit", "expdecay", "--series", str(series),
                     "--out", str(report)]) == 0
        data = json.loads(report.read_text())
        assert data["tau_s"] == pytest.approx(0.072, rel=1e-3)

    def test_fit_linear_end_to_end(self, tmp_path):
        pts = tmp_path / "pts.csv"
        x = np.linspace(0, 5, 10)
        csvio.write_xy(pts, x, 2 * x + 1, "x", "y")
        report = tmp_path / "lin.json"
        assert main(["fit", "linear", "--points", str(pts),
                     "--out", str(report)]) == 0
        data = json.loads(report.read_text())
        assert data["slope"] == pytest.approx(2.0)

    def test_fit_trap_end_to_end(self, tmp_path):
        cfgfile = tmp_path / "cfg.ini"
        cfgfile.write_text("[domain]\nn_r = 16\nn_z = 16\nn_delta = 32\n")
        batch = tmp_path / "batch"
        assert main(["--config", str(cfgfile), "gen", "decay", "--powers",
                     "8e-6,29e-6", "--gamma-trap", "9e4", "--t-end", "150",
                     "--n-t", "31", "--tol", "0", "--noise", "poisson",
                     "--seed", "2", "--out", str(batch)]) == 0
        files = sorted(batch.glob("decay_*uW.csv"))
        assert [f.name for f in files] == ["decay_29uW.csv", "decay_8uW.csv"]
        report = tmp_path / "trap.json"
        assert main(["--config", str(cfgfile), "fit", "trap",
                     *[str(f) for f in files], "--out", str(report)]) == 0
        data = json.loads(report.read_text())
        assert data["gamma_trap_per_s"] == pytest.approx(9e4, rel=0.05)
        assert len(data["scale_a"]) == 2

    def test_malformed_csv_exit_2(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("wrong,columns\n1,2\n")
        code = main(["fit", "expdecay", "--series", str(bad),
                     "--out", str(tmp_path / "r.json")])
        assert code == 2

    def test_fit_failure_exit_4_with_report(self, tmp_path):
        # an iteration budget of 1 cannot converge the trap fit
        cfgfile = tmp_path / "cfg.ini"
        cfgfile.write_text("[domain]\nn_r = 16\nn_z = 16\nn_delta = 32\n"
                           "[fit]\nmax_iter = 1\n")
        curve_file = tmp_path / "curve.csv"
        assert main(["--config", str(cfgfile), "gen", "decay", "--t-end",
                     "100", "--n-t", "21", "--tol", "0",
                     "--out", str(curve_file)]) == 0
        report = tmp_path / "trap.json"
        code = main(["--config", str(cfgfile), "fit", "trap",
                     str(curve_file), "--out", str(report)])
        assert code == 4
        data = json.loads(report.read_text())
        assert "diagnostics" in data and "error" in data
