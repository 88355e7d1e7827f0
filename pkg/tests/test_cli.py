import csv
import json


from xlbeam.cli import main


def read_csv(path):
    with open(path) as f:
        return list(csv.DictReader(f))


class TestPattern:
    def test_grid_csv_and_plot(self, tmp_path):
        out = tmp_path / "pat.csv"
        rc = main([
            "pattern", "--n", "257", "--m", "16", "--theta", "0.2", "--r", "10",
            "--theta-points", "21", "--r-points", "5", "--out", str(out), "--plot",
        ])
        assert rc == 0
        rows = read_csv(out)
        assert len(rows) == 21 * 5
        assert set(rows[0]) == {"theta", "r", "value"}
        assert (tmp_path / "pat.png").exists()

    def test_dense_codeword(self, tmp_path):
        out = tmp_path / "pat.csv"
        rc = main([
            "pattern", "--n", "65", "--m", "1", "--theta", "0.0", "--r", "5",
            "--theta-points", "11", "--r-points", "3", "--out", str(out),
        ])
        assert rc == 0
        vals = [float(r["value"]) for r in read_csv(out)]
        assert max(vals) <= 1.0 + 1e-9

    def test_plot_needs_out(self, capsys):
        rc = main(["pattern", "--n", "65", "--m", "1", "--theta", "0", "--r", "5",
                   "--theta-points", "5", "--r-points", "2", "--plot"])
        assert rc == 2

    def test_invalid_geometry(self):
        rc = main(["pattern", "--n", "256", "--m", "16", "--theta", "0.2", "--r", "10"])
        assert rc == 2


class TestCodebookDump:
    def test_dump_all(self, tmp_path):
        out = tmp_path / "cb.csv"
        rc = main(["codebook", "dump", "--n", "257", "--m", "16", "--v", "2",
                   "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        kinds = {r["kind"] for r in rows}
        assert kinds == {"single", "multi", "dft"}
        assert len([r for r in rows if r["kind"] == "single"]) == 544
        assert len([r for r in rows if r["kind"] == "multi"]) == 34
        assert len([r for r in rows if r["kind"] == "dft"]) == 272

    def test_dump_single_kind(self, tmp_path):
        out = tmp_path / "cb.csv"
        rc = main(["codebook", "dump", "--n", "257", "--m", "16", "--v", "4",
                   "--kind", "multi", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert len(rows) == 68
        assert {r["support_size"] for r in rows} == {"17"}

    def test_infeasible_interval(self, tmp_path):
        rc = main(["codebook", "dump", "--n", "257", "--m", "7",
                   "--out", str(tmp_path / "cb.csv")])
        assert rc == 2


class TestTrain:
    def test_per_trial_rows(self, tmp_path):
        out = tmp_path / "train.csv"
        rc = main(["train", "--scheme", "proposed", "--n", "257", "--m", "16",
                   "--v", "4", "--k", "1", "--snr-db", "35", "--trials", "4",
                   "--seed", "2", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert len(rows) == 4
        assert set(rows[0]) == {
            "trial", "user", "scheme", "pilots", "selected_s", "selected_v",
            "est_theta", "est_r", "success",
        }
        assert {r["pilots"] for r in rows} == {"84"}
        assert all(r["success"] in ("0", "1") for r in rows)

    def test_ls_scheme_has_no_selection(self, tmp_path):
        out = tmp_path / "train.csv"
        rc = main(["train", "--scheme", "ls", "--n", "257", "--trials", "2",
                   "--noiseless", "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert rows[0]["selected_s"] == ""
        assert rows[0]["pilots"] == "257"

    def test_noiseless_proposed_all_succeed_on_grid_free_runs(self, tmp_path):
        out = tmp_path / "train.csv"
        rc = main(["train", "--scheme", "exhaustive", "--n", "257", "--trials", "3",
                   "--noiseless", "--out", str(out)])
        assert rc == 0
        assert all(r["success"] == "1" for r in read_csv(out))


class TestSimulate:
    def test_preset_with_overrides(self, tmp_path):
        out = tmp_path / "sim.csv"
        rc = main(["simulate", "--preset", "fig6-noiseless-sanity", "--trials", "3",
                   "--set", "sweep_values=[30.0]", "--out", str(out), "--plot"])
        assert rc == 0
        rows = read_csv(out)
        assert len(rows) == 2
        assert (tmp_path / "sim.png").exists()

    def test_config_file(self, tmp_path):
        cfg = {
            "scenario": "filetest", "trials": 2, "seed": 1,
            "schemes": ["proposed"], "sweep_var": "none", "sweep_values": [],
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        out = tmp_path / "sim.csv"
        rc = main(["simulate", "--config", str(path), "--out", str(out)])
        assert rc == 0
        rows = read_csv(out)
        assert rows[0]["scenario"] == "filetest"

    def test_needs_source(self):
        assert main(["simulate"]) == 2

    def test_unknown_override_key(self, tmp_path):
        rc = main(["simulate", "--preset", "fig6-noiseless-sanity",
                   "--set", "bogus=1", "--out", str(tmp_path / "x.csv")])
        assert rc == 2

    def test_infeasible_config_rejected(self, tmp_path):
        rc = main(["simulate", "--preset", "fig6-noiseless-sanity",
                   "--set", "m=7", "--out", str(tmp_path / "x.csv")])
        assert rc == 2


class TestOptimize:
    def test_report(self, capsys):
        rc = main(["optimize-m", "--n", "257", "--v", "4", "--k", "8"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "M* = 11.3137" in out
        assert "F = 192" in out
        assert "objective tie" in out
        assert "selected M = 8" in out
        assert "pilots = 196" in out

    def test_invalid(self):
        assert main(["optimize-m", "--n", "256", "--v", "4", "--k", "8"]) == 2


class TestPresetsCommand:
    def test_lists_all_figures(self, capsys):
        rc = main(["presets"])
        assert rc == 0
        out = capsys.readouterr().out
        for name in ("fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13"):
            assert name in out
