"""

RbxReport: the machine-readable result of an experiment run.

A RunReport collects the per-unit results (one unit is one seed of one
network or variant), an aggregate over them, and a list of checks. A check is
either asserted (a guarantee; a failure fails the run) or observed (reported
only).

"""

import collections
import json
import logging

import numpy as np

from .common import RbxError
from .datagen import save_csv

logger = logging.getLogger(__name__)

class ReportError(RbxError):
    pass

class Check(collections.namedtuple("Check", "name passed asserted detail")):
    """
    >>> Check("inequality", True, True, {"factor": 2.0}).to_json()["passed"]
    True
    """
    __slots__ = ()

    def __new__(cls, name, passed, asserted=True, detail=None):
        return super().__new__(cls, str(name), bool(passed), bool(asserted), detail if detail is not None else {})

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "asserted": self.asserted, "detail": _plain(self.detail)}

def _plain(obj):
    """numpy scalars and arrays to plain JSON values; NaN and inf to None."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        obj = float(obj)
        return obj if np.isfinite(obj) else None
    return obj

plain = _plain

class RunReport(object):

    """
    >>> r = RunReport("poisson", {"nu": 0.45}, [{"seed": 0}], {}, [Check("bias", True)], 0.5)
    >>> r.passed
    True
    >>> RunReport.from_json(r.to_json()).to_json() == r.to_json()
    True
    """

    def __init__(self, experiment, config, runs, aggregate, checks, wall_time_s=0.0):
        self.experiment = experiment
        self.config = config
        self.runs = list(runs)
        self.aggregate = aggregate
        self.checks = [c if isinstance(c, Check) else Check(**c) for c in checks]
        self.wall_time_s = float(wall_time_s)

    @property
    def passed(self):
        return all(c.passed for c in self.checks if c.asserted)

    @property
    def failed_checks(self):
        return [c for c in self.checks if c.asserted and not c.passed]

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return _plain({
            "experiment": self.experiment,
            "config": self.config,
            "runs": self.runs,
            "aggregate": self.aggregate,
            "checks": [c.to_json() for c in self.checks],
            "passed": self.passed,
            "wall_time_s": self.wall_time_s,
        })

    @classmethod
    def from_json(cls, obj):
        for key in ("experiment", "config", "runs", "aggregate", "checks", "wall_time_s"):
            if key not in obj:
                raise ReportError("report lacks %r" % key)
        report = cls(obj["experiment"], obj["config"], obj["runs"], obj["aggregate"], obj["checks"], obj["wall_time_s"])
        if "passed" in obj and obj["passed"] != report.passed:
            raise ReportError("stored 'passed' disagrees with the checks")
        return report

    def dumps(self):
        return json.dumps(self.to_json(), indent=1, sort_keys=True)

    def dump(self, path):
        with open(path, "w") as ofs:
            ofs.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path) as ifs:
            return cls.from_json(json.load(ifs))

    def summary(self):
        lines = ["%s: %s (%d checks, %d asserted, %.1fs)" % (
            self.experiment, "PASSED" if self.passed else "FAILED", len(self.checks),
            sum(c.asserted for c in self.checks), self.wall_time_s)]
        for c in self.checks:
            lines.append("  [%s] %-8s %s" % ("assert" if c.asserted else "observe",
                                             "ok" if c.passed else "FAIL", c.name))
        return "\n".join(lines)

def write_curves(path, columns, units):
    """
    Concatenate the "curve" rows of every unit into one CSV, prefixed with
    the unit index; missing values become nan.
    """
    rows = []
    for i, unit in enumerate(units):
        for row in unit.get("curve", []):
            if len(row) != len(columns):
                raise ReportError("curve row %r does not match columns %r" % (row, columns))
            rows.append([i] + [np.nan if v is None else v for v in row])
    table = np.array(rows, dtype=float).reshape(-1, len(columns) + 1)
    save_csv(path, ("unit",) + tuple(columns), table)
