import numpy as np

import pytest

from rbx.datagen import load_csv
from rbx.report import Check, ReportError, RunReport, plain, write_curves

def _report():
    checks = [Check("inequality", True, True, {"factor": np.float64(2.5)}),
              Check("rounded", False, False)]
    runs = [{"seed": 0, "mse": np.float64(0.25), "n": np.int64(3)}]
    return RunReport("yield", {"bins": 10}, runs, {"best": {"seed": 0}}, checks, 1.5)

class TestRunReport:
    def test_passed_ignores_observations(self):
        report = _report()
        assert report.passed
        assert report.failed_checks == []

    def test_failed_assertion(self):
        report = RunReport("poisson", {}, [], {}, [Check("bias", False)], 0.0)
        assert not report.passed
        assert report.to_json()["passed"] is False

    def test_dump_and_load(self, tmpdir):
        path = str(tmpdir.join("report.json"))
        report = _report()
        report.dump(path)
        again = RunReport.load(path)
        assert again.to_json() == report.to_json()
        assert again.dumps() == open(path).read()
        assert again.check("inequality").detail == {"factor": 2.5}

    def test_inconsistent_passed_flag(self):
        obj = _report().to_json()
        obj["passed"] = False
        with pytest.raises(ReportError):
            RunReport.from_json(obj)

    def test_missing_key(self):
        obj = _report().to_json()
        del obj["runs"]
        with pytest.raises(ReportError):
            RunReport.from_json(obj)

    def test_summary(self):
        assert _report().summary().startswith("yield: PASSED")

class TestPlain:
    def test_numpy_values(self):
        out = plain({"a": np.arange(2), "b": np.float64("nan"), "c": (np.bool_(True), 1.5)})
        assert out == {"a": [0, 1], "b": None, "c": [True, 1.5]}

class TestWriteCurves:
    def test_unit_column(self, tmpdir):
        path = str(tmpdir.join("curves.csv"))
        write_curves(path, ("epoch", "loss"), [{"curve": [[0, 1.0], [1, None]]}, {"curve": [[0, 2.0]]}])
        columns, table = load_csv(path)
        assert columns == ("unit", "epoch", "loss")
        assert table.shape == (3, 3)
        assert np.isnan(table[1, 2])
        assert table[2, 0] == 1.0

    def test_no_curves(self, tmpdir):
        path = str(tmpdir.join("curves.csv"))
        write_curves(path, ("a",), [{}])
        with open(path) as ifs:
            assert ifs.read().strip() == "unit,a"

    def test_row_width(self, tmpdir):
        with pytest.raises(ReportError):
            write_curves(str(tmpdir.join("c.csv")), ("a",), [{"curve": [[1, 2]]}])
