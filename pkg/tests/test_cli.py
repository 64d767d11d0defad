import csv
import json

import pytest

from anomattr import load_csv
from anomattr.cli import main

SIM_SPEC = """\
n = 900
d = 3
seed = 17
names = temp,wind,pressure
coeff.1 = 0.5 0 0 ; 0 0.5 0 ; 0 0 0.5
anomaly = 500:550 vars=temp kind=mean_shift magnitude=4
"""


@pytest.fixture
def sim_dir(tmp_path):
    spec = tmp_path / "spec.cfg"
    spec.write_text(SIM_SPEC)
    out = tmp_path / "sim"
    assert main(["simulate", "--spec", str(spec), "--output-dir", str(out)]) == 0
    return out


def run_detect(sim_dir, out, extra=()):
    return main(
        [
            "detect",
            "--input",
            str(sim_dir / "series.csv"),
            "--output-dir",
            str(out),
            "--len-min",
            "40",
            "--len-max",
            "60",
            *extra,
        ]
    )


class TestSimulate:
    def test_outputs_round_trip(self, sim_dir):
        series = load_csv(sim_dir / "series.csv")
        assert (series.n, series.d) == (900, 3)
        truth = json.loads((sim_dir / "ground_truth.json").read_text())
        assert truth["anomalies"][0]["variables"] == ["temp"]
        assert truth["anomalies"][0]["a"] == 500

    def test_seeded_runs_are_identical(self, tmp_path):
        spec = tmp_path / "spec.cfg"
        spec.write_text(SIM_SPEC)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--spec", str(spec), "--output-dir", str(out1)]) == 0
        assert main(["simulate", "--spec", str(spec), "--output-dir", str(out2)]) == 0
        assert (out1 / "series.csv").read_bytes() == (out2 / "series.csv").read_bytes()

    def test_unstable_spec_exits_2_with_radius(self, tmp_path, capsys):
        spec = tmp_path / "bad.cfg"
        spec.write_text("n = 100\nd = 1\ncoeff.1 = 1.05\n")
        assert main(["simulate", "--spec", str(spec), "--output-dir", str(tmp_path / "o")]) == 2
        assert "spectral radius" in capsys.readouterr().err

    def test_missing_spec_exits_2(self, tmp_path, capsys):
        assert main(["simulate", "--spec", str(tmp_path / "nope.cfg"), "--output-dir", str(tmp_path)]) == 2
        assert "nope.cfg" in capsys.readouterr().err


class TestDetect:
    def test_finds_the_injected_interval(self, sim_dir, tmp_path, capsys):
        out = tmp_path / "det"
        assert run_detect(sim_dir, out) == 0
        payload = json.loads((out / "detections.json").read_text())
        det = payload["detections"][0]
        assert det["rank"] == 1
        inter = max(0, min(det["b"], 550) - max(det["a"], 500))
        union = (det["b"] - det["a"]) + 50 - inter
        assert inter / union >= 0.8
        assert "rank" in capsys.readouterr().out
        assert (out / "run.log").exists()

    def test_missing_input_exits_2_naming_path(self, tmp_path, capsys):
        code = main(
            ["detect", "--input", str(tmp_path / "ghost.csv"), "--output-dir", str(tmp_path),
             "--len-min", "10", "--len-max", "20"]
        )
        assert code == 2
        assert "ghost.csv" in capsys.readouterr().err

    def test_bad_length_bounds_exit_2_before_reading(self, tmp_path, capsys):
        code = main(
            ["detect", "--input", str(tmp_path / "ghost.csv"), "--output-dir", str(tmp_path),
             "--len-min", "30", "--len-max", "20"]
        )
        assert code == 2
        err = capsys.readouterr().err
        assert "len_min" in err and "ghost" not in err

    def test_config_file_supplies_flags(self, sim_dir, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("len_min = 40\nlen_max = 60\ntop_k = 1\n")
        out = tmp_path / "det"
        code = main(
            ["detect", "--input", str(sim_dir / "series.csv"), "--config", str(cfg),
             "--output-dir", str(out)]
        )
        assert code == 0
        assert (out / "detections.json").exists()

    def test_threads_flag_gives_identical_output(self, sim_dir, tmp_path):
        out1, out2 = tmp_path / "t1", tmp_path / "t2"
        assert run_detect(sim_dir, out1) == 0
        assert run_detect(sim_dir, out2, extra=["--threads", "4"]) == 0
        assert (out1 / "detections.json").read_bytes() == (out2 / "detections.json").read_bytes()

    def test_handles_missing_cells(self, sim_dir, tmp_path):
        text = (sim_dir / "series.csv").read_text().splitlines()
        # punch a few holes in the data
        for i in (100, 101, 400):
            cells = text[i].split(",")
            cells[1] = ""
            text[i] = ",".join(cells)
        holey = tmp_path / "holey.csv"
        holey.write_text("\n".join(text) + "\n")
        out = tmp_path / "det"
        code = main(
            ["detect", "--input", str(holey), "--output-dir", str(out),
             "--len-min", "40", "--len-max", "60"]
        )
        assert code == 0
        det = json.loads((out / "detections.json").read_text())["detections"][0]
        assert 490 <= det["a"] <= 510


class TestAttribute:
    def test_reports_tables_and_preview(self, sim_dir, tmp_path):
        out = tmp_path / "out"
        assert run_detect(sim_dir, out) == 0
        code = main(
            [
                "attribute",
                "--input",
                str(sim_dir / "series.csv"),
                "--output-dir",
                str(out),
                "--detections",
                str(out / "detections.json"),
                "--realizations",
                "3",
                "--offset",
                "200",
                "--seed",
                "5",
            ]
        )
        assert code == 0

        report = json.loads((out / "attribution_1.json").read_text())
        assert len(report["subsets"]) == 6  # C(3,1) + C(3,2)
        singles = [s for s in report["subsets"] if s["size"] == 1]
        best = min(singles, key=lambda s: s["mean_score"])
        assert best["variables"] == ["temp"]
        assert set(report["baseline"]) == {"temp", "wind", "pressure"}

        pre = json.loads((out / "attribution_1_before_200.json").read_text())
        assert pre["label"] == "pre_event" and pre["offset"] == 200

        with open(out / "attribution_1.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["subset", "size", "before_200", "detection"]
        assert rows[1][0] == "original"
        assert len(rows) == 2 + 6
        det_scores = {r[0]: float(r[3]) for r in rows[1:]}
        assert det_scores["temp"] < det_scores["wind"]

        with open(out / "replacement_preview.csv", newline="") as fh:
            prev = list(csv.reader(fh))
        assert prev[0][0] == "time"
        assert any(col.endswith("_counterfactual") for col in prev[0])
        assert len(prev) == 1 + 900

    def test_explicit_interval(self, sim_dir, tmp_path):
        out = tmp_path / "out"
        code = main(
            ["attribute", "--input", str(sim_dir / "series.csv"), "--output-dir", str(out),
             "--interval", "500:550", "--realizations", "2"]
        )
        assert code == 0
        report = json.loads((out / "attribution_1.json").read_text())
        assert report["interval"] == {"a": 500, "b": 550}

    def test_malformed_interval_exits_2(self, sim_dir, tmp_path):
        code = main(
            ["attribute", "--input", str(sim_dir / "series.csv"), "--output-dir", str(tmp_path),
             "--interval", "oops"]
        )
        assert code == 2

    def test_fixed_seed_outputs_are_byte_identical(self, sim_dir, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            code = main(
                ["attribute", "--input", str(sim_dir / "series.csv"), "--output-dir", str(out),
                 "--interval", "500:550", "--realizations", "2", "--seed", "3"]
            )
            assert code == 0
            outs.append(out)
        for fname in ("attribution_1.json", "attribution_1.csv", "replacement_preview.csv"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()


class TestBaseline:
    def test_scores_and_histograms(self, sim_dir, tmp_path, capsys):
        out = tmp_path / "base"
        code = main(
            ["baseline", "--input", str(sim_dir / "series.csv"), "--output-dir", str(out),
             "--interval", "500:550"]
        )
        assert code == 0
        payload = json.loads((out / "baseline.json").read_text())
        assert max(payload["scores"], key=payload["scores"].get) == "temp"
        with open(out / "baseline_histograms.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["variable", "bin_left", "bin_right", "interval_count", "overall_count"]
        assert len(rows) == 1 + 3 * 30
        per_var = [r for r in rows[1:] if r[0] == "temp"]
        assert sum(int(r[3]) for r in per_var) == 50

    def test_identical_distribution_scores_stay_small(self, tmp_path):
        spec = tmp_path / "flat.cfg"
        spec.write_text("n = 5000\nd = 3\nseed = 2\n")
        sim = tmp_path / "sim"
        assert main(["simulate", "--spec", str(spec), "--output-dir", str(sim)]) == 0
        out = tmp_path / "base"
        code = main(
            ["baseline", "--input", str(sim / "series.csv"), "--output-dir", str(out),
             "--interval", "2000:2500"]
        )
        assert code == 0
        payload = json.loads((out / "baseline.json").read_text())
        assert max(payload["scores"].values()) < 0.05

    def test_single_bin_exits_2(self, sim_dir, tmp_path):
        code = main(
            ["baseline", "--input", str(sim_dir / "series.csv"), "--output-dir", str(tmp_path),
             "--interval", "500:550", "--bins", "1"]
        )
        assert code == 2

    def test_needs_interval_or_detections(self, sim_dir, tmp_path):
        code = main(
            ["baseline", "--input", str(sim_dir / "series.csv"), "--output-dir", str(tmp_path / "x")]
        )
        assert code == 2
