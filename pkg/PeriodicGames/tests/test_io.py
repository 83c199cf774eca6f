import numpy as np
import pytest

from app.integrate import Trajectory
from app.utils.io import infer_kind, read_json, read_ppm, read_trajectory_csv, write_json, write_ppm, \
    write_trajectory_csv
from app.utils.plotting import PlotSpec, columns_from_report, columns_from_trajectory, emit_svg


def sample_trajectory():
    times = np.linspace(0.0, 1.0, 11)
    states = np.column_stack([np.cos(times), np.sin(times) / 3.0])
    return Trajectory(times, states, ("z0_0", "z1_0"), "z")


class TestCsv:
    def test_full_precision(self, tmp_path):
        traj = sample_trajectory()
        path = write_trajectory_csv(traj, str(tmp_path / "nested" / "trajectory.csv"))
        with open(path, encoding="utf-8") as f:
            assert f.readline().strip() == "t,z0_0,z1_0"
        again = read_trajectory_csv(path)
        assert again.kind == "z"
        assert again.labels == traj.labels
        assert np.array_equal(again.times, traj.times)
        assert np.array_equal(again.states, traj.states)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,x\n0,1\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_trajectory_csv(str(path))

    def test_no_rows(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("t,x0_0\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_trajectory_csv(str(path))

    def test_infer_kind(self):
        assert infer_kind(["y0_0", "y1_0"]) == "ftrl"
        assert infer_kind(["z0_0"]) == "z"
        assert infer_kind(["x0_0", "x0_1"]) == "replicator"
        assert infer_kind(["x0_0", "alpha"]) == ""


class TestFiles:
    def test_json_is_sorted(self, tmp_path):
        path = write_json({"b": 1, "a": [1.5]}, str(tmp_path / "r.json"))
        text = (tmp_path / "r.json").read_text(encoding="utf-8")
        assert text.index('"a"') < text.index('"b"')
        assert read_json(path) == {"a": [1.5], "b": 1}

    def test_ppm(self, tmp_path):
        image = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
        path = write_ppm(image, str(tmp_path / "frame.ppm"))
        with open(path, "rb") as f:
            assert f.read(2) == b"P6"
        assert np.array_equal(read_ppm(path), image)

    def test_ppm_needs_rgb_bytes(self, tmp_path):
        with pytest.raises(ValueError):
            write_ppm(np.zeros((2, 2)), str(tmp_path / "frame.ppm"))


class TestSvg:
    def test_identical_inputs_give_identical_bytes(self, tmp_path):
        columns = columns_from_trajectory(sample_trajectory(), {"sum": np.arange(11.0)})
        first = emit_svg(PlotSpec(series=["z0_0", "sum"], output=str(tmp_path / "a.svg"), title="demo"), columns)
        second = emit_svg(PlotSpec(series=["z0_0", "sum"], output=str(tmp_path / "b.svg"), title="demo"), columns)
        with open(first, "rb") as a, open(second, "rb") as b:
            content = a.read()
            assert content == b.read()
        assert b"<svg" in content

    def test_series_from_report(self, tmp_path):
        report = {"series": {"kl": {"t": [0.0, 1.0, 2.0], "value": [1.0, 1.0, 1.0]}}}
        path = emit_svg(PlotSpec(series=["kl"], output=str(tmp_path / "kl.svg")), columns_from_report(report))
        assert (tmp_path / "kl.svg").exists() and path.endswith("kl.svg")

    def test_unknown_series(self, tmp_path):
        with pytest.raises(KeyError):
            emit_svg(PlotSpec(series=["nope"], output=str(tmp_path / "x.svg")),
                     columns_from_trajectory(sample_trajectory()))

    def test_empty_series(self, tmp_path):
        columns = {"empty": (np.array([]), np.array([]))}
        with pytest.raises(ValueError):
            emit_svg(PlotSpec(series=["empty"], output=str(tmp_path / "x.svg")), columns)
        with pytest.raises(ValueError):
            PlotSpec(series=[" ", ""], output=str(tmp_path / "x.svg"))
