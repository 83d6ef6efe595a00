import json

import pytest
from click.testing import CliRunner

from mvtrack.cli import main

SMALL_SCENARIO = {
    "seed": 5,
    "duration": 80,
    "noise_px": 0.5,
    "rig": {"radius": 6.0, "height": 2.0, "focal": 1000.0,
            "resolution": [1920, 1080]},
    "plane": {"n": [1.0, 0.0, 0.0], "point": [0.0, 0.0, 0.0]},
    "perf_space": [-2.0, -2.0, 0.0, 2.0, 2.0, 4.0],
    "beta": 1.0,
    "persons": [
        {"kind": "on_plane_jump", "is_target": True,
         "off_plane_amplitude": 0.05, "on_plane_intervals": []},
        {"kind": "off_plane_walk", "is_target": False, "offset": 1.3},
    ],
    "dropout": [],
}


@pytest.fixture
def runner():
    return CliRunner()


def write_scenario(tmp_path, spec=None):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(spec or SMALL_SCENARIO))
    return path


def simulate(runner, tmp_path, out="sim"):
    scenario = write_scenario(tmp_path)
    out_dir = tmp_path / out
    result = runner.invoke(main, ["simulate", str(scenario), "--out",
                                  str(out_dir)])
    assert result.exit_code == 0, result.output
    return out_dir


class TestSimulate:
    def test_writes_all_outputs(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        for name in ("detections.jsonl", "truth.jsonl", "calib.json",
                     "routine.json"):
            assert (out / name).exists()

    def test_canned_scenario_by_name(self, runner, tmp_path):
        out_dir = tmp_path / "sim"
        result = runner.invoke(main, ["simulate", "crowded-distractors",
                                      "--out", str(out_dir), "--seed", "1"])
        assert result.exit_code == 0, result.output
        assert (out_dir / "detections.jsonl").exists()

    def test_missing_scenario_file(self, runner, tmp_path):
        result = runner.invoke(main, ["simulate", str(tmp_path / "nope.json"),
                                      "--out", str(tmp_path / "sim")])
        assert result.exit_code == 2
        assert "scenario not found" in result.output

    def test_unparseable_scenario(self, runner, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        result = runner.invoke(main, ["simulate", str(path), "--out",
                                      str(tmp_path / "sim")])
        assert result.exit_code == 3

    def test_invalid_scenario_contents(self, runner, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({"persons": []}))  # no duration
        result = runner.invoke(main, ["simulate", str(path), "--out",
                                      str(tmp_path / "sim")])
        assert result.exit_code == 2

    def test_seeded_rerun_identical(self, runner, tmp_path):
        a = simulate(runner, tmp_path, out="a")
        b = simulate(runner, tmp_path, out="b")
        assert (a / "detections.jsonl").read_bytes() == \
            (b / "detections.jsonl").read_bytes()
        assert (a / "truth.jsonl").read_bytes() == (b / "truth.jsonl").read_bytes()


def run_track(runner, out, mode=None, threads=None):
    args = ["track", "--detections", str(out / "detections.jsonl"),
            "--calib", str(out / "calib.json"),
            "--config", str(out / "routine.json"),
            "--out", str(out)]
    if mode:
        args += ["--mode", mode]
    if threads:
        args += ["--threads", str(threads)]
    return runner.invoke(main, args)


class TestTrack:
    def test_end_to_end(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        result = run_track(runner, out)
        assert result.exit_code == 0, result.output
        assert (out / "tracklets.jsonl").exists()
        lines = (out / "tracklets.jsonl").read_text().splitlines()
        assert len(lines) > 40
        record = json.loads(lines[0])
        assert set(record) == {"frame", "track_id", "X", "provenance",
                               "per_view"}

    def test_missing_calib_is_config_error(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        (out / "calib.json").unlink()
        assert run_track(runner, out).exit_code == 2

    def test_invalid_config_is_config_error(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        (out / "routine.json").write_text('{"perf_space": [1, 2, 3]}')
        assert run_track(runner, out).exit_code == 2

    def test_corrupt_detections_is_input_error(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        (out / "detections.jsonl").write_text("{broken\n")
        assert run_track(runner, out).exit_code == 3

    def test_unknown_camera_is_input_error(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        (out / "detections.jsonl").write_text(json.dumps(
            {"frame": 0, "camera": 9, "x": 1.0, "y": 1.0, "w": 5.0, "h": 5.0,
             "confidence": 1.0}) + "\n")
        assert run_track(runner, out).exit_code == 3

    def test_thread_count_does_not_change_output(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        assert run_track(runner, out).exit_code == 0
        single = (out / "tracklets.jsonl").read_bytes()
        assert run_track(runner, out, threads=4).exit_code == 0
        assert (out / "tracklets.jsonl").read_bytes() == single

    def test_mode_flag_accepted(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        assert run_track(runner, out, mode="plane_only").exit_code == 0
        assert run_track(runner, out, mode="triangulation_only").exit_code == 0


class TestEvaluate:
    def evaluate(self, runner, out, **kwargs):
        args = ["evaluate", "--tracklets", str(out / "tracklets.jsonl"),
                "--truth", str(out / "truth.jsonl")]
        for key, value in kwargs.items():
            args += [f"--{key}", str(value)]
        return runner.invoke(main, args)

    def test_full_chain_report(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        assert run_track(runner, out).exit_code == 0
        result = self.evaluate(runner, out, config=out / "routine.json")
        assert result.exit_code == 0, result.output
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary["id_switches"] == 0
        assert summary["aed_m"] <= 0.05
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["tau"] == 0.5
        assert report["per_window"]

    def test_perfect_input_scores_zero(self, runner, tmp_path):
        truth_path = tmp_path / "truth.jsonl"
        tracklets_path = tmp_path / "tracklets.jsonl"
        with open(truth_path, "w") as truth, open(tracklets_path, "w") as est:
            for f in range(20):
                X = [0.0, 0.01 * f, 1.5]
                truth.write(json.dumps({"frame": f, "person": 0,
                                        "is_target": True, "X": X,
                                        "boxes": {}}) + "\n")
                est.write(json.dumps({"frame": f, "track_id": 0, "X": X,
                                      "provenance": "triangulated",
                                      "per_view": []}) + "\n")
        result = runner.invoke(main, ["evaluate", "--tracklets",
                                      str(tracklets_path), "--truth",
                                      str(truth_path)])
        assert result.exit_code == 0, result.output
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary == {"aed_m": 0.0, "coverage": 1.0,
                           "failure_rate": 0.0, "id_switches": 0}

    def test_shifted_input_reports_shift(self, runner, tmp_path):
        truth_path = tmp_path / "truth.jsonl"
        tracklets_path = tmp_path / "tracklets.jsonl"
        with open(truth_path, "w") as truth, open(tracklets_path, "w") as est:
            for f in range(20):
                truth.write(json.dumps({"frame": f, "person": 0,
                                        "is_target": True,
                                        "X": [0.0, 0.0, 1.5],
                                        "boxes": {}}) + "\n")
                est.write(json.dumps({"frame": f, "track_id": 0,
                                      "X": [0.0, 0.0, 1.6],
                                      "provenance": "triangulated",
                                      "per_view": []}) + "\n")
        result = runner.invoke(main, ["evaluate", "--tracklets",
                                      str(tracklets_path), "--truth",
                                      str(truth_path)])
        summary = json.loads(result.output.strip().splitlines()[-1])
        assert summary["aed_m"] == pytest.approx(0.1, abs=1e-9)

    def test_empty_overlap_is_input_error(self, runner, tmp_path):
        truth_path = tmp_path / "truth.jsonl"
        tracklets_path = tmp_path / "tracklets.jsonl"
        truth_path.write_text(json.dumps(
            {"frame": 0, "person": 0, "is_target": True,
             "X": [0.0, 0.0, 1.0], "boxes": {}}) + "\n")
        tracklets_path.write_text(json.dumps(
            {"frame": 50, "track_id": 0, "X": [0.0, 0.0, 1.0],
             "provenance": "triangulated", "per_view": []}) + "\n")
        result = runner.invoke(main, ["evaluate", "--tracklets",
                                      str(tracklets_path), "--truth",
                                      str(truth_path)])
        assert result.exit_code == 3

    def test_missing_tracklets_is_input_error(self, runner, tmp_path):
        out = simulate(runner, tmp_path)
        result = self.evaluate(runner, out)
        assert result.exit_code == 3
