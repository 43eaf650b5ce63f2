import os
import queue

import pytest

from rbx.common import RbxError
from rbx.data import makeRbxLocalFile
from rbx.task import (RbxTask, RbxTaskBase, RbxThreadTaskBase, TaskDone, TaskFail, TaskFunctionError,
                      TaskInitialized, parameterDigestCompare, timeStampCompare)

def make_task(tmpdir, parameters=None, TaskType=RbxTaskBase, body=None):
    fin = makeRbxLocalFile(str(tmpdir.join("config.json")))
    fout = makeRbxLocalFile(str(tmpdir.join("unit-000.json")))
    fin.writeJSON({"scale": 2})

    def default(self):
        self.unit.writeJSON({"value": self.config.readJSON()["scale"] * self.parameters["seed"]})

    task = RbxTask(inputs={"config": fin}, outputs={"unit": fout}, parameters=parameters or {"seed": 3},
                   TaskType=TaskType)(body or default)
    return task, fin, fout

class TestRbxTaskBase:
    def test___call__(self, tmpdir):
        task, fin, fout = make_task(tmpdir)
        assert task.status == TaskInitialized
        assert not task.isSatisfied()
        assert task() is True
        assert task.status == TaskDone
        assert fout.readJSON() == {"value": 6}
        assert task.isSatisfied()

    def test_attributes(self, tmpdir):
        task, fin, fout = make_task(tmpdir)
        assert task.config is fin
        assert task.unit is fout
        assert task.URL.startswith("task://localhost/default/")

    def test_missing_output_fails(self, tmpdir):
        task, fin, fout = make_task(tmpdir, body=lambda self: None)
        task()
        assert task.status == TaskFail

    def test_exception_sets_fail(self, tmpdir):
        def boom(self):
            raise ValueError("diverged")
        task, fin, fout = make_task(tmpdir, body=boom)
        with pytest.raises(ValueError):
            task()
        assert task.status == TaskFail

    def test_parameters_must_not_change(self, tmpdir):
        def mutate(self):
            self.parameters["seed"] = 4
        task, fin, fout = make_task(tmpdir, body=mutate)
        with pytest.raises(TaskFunctionError):
            task()

    def test_read_only_output(self, tmpdir):
        fout = makeRbxLocalFile(str(tmpdir.join("x.json")), readOnly=True)
        with pytest.raises(RbxError):
            RbxTask(outputs={"x": fout})(lambda self: None)

    def test_rdf_graph(self, tmpdir):
        task, fin, fout = make_task(tmpdir)
        turtle = task.RDFTurtle
        assert fin.URL in turtle and fout.URL in turtle
        assert "hasParameters" in turtle

class TestRbxThreadTaskBase:
    def test_nSlots(self, tmpdir):
        task, fin, fout = make_task(tmpdir, parameters={"seed": 1, "nSlots": 2}, TaskType=RbxThreadTaskBase)
        assert task.nSlots == 2

    def test_needs_queue(self, tmpdir):
        task, fin, fout = make_task(tmpdir, TaskType=RbxThreadTaskBase)
        with pytest.raises(RbxError):
            task()

    def test_messages(self, tmpdir):
        task, fin, fout = make_task(tmpdir, TaskType=RbxThreadTaskBase)
        q = queue.Queue()
        task.setMessageQueue(q)
        task()
        assert q.get() == (task.URL, "started")
        assert q.get() == (task.URL, TaskDone)

    def test_failure_message(self, tmpdir):
        def boom(self):
            raise ValueError("diverged")
        task, fin, fout = make_task(tmpdir, TaskType=RbxThreadTaskBase, body=boom)
        q = queue.Queue()
        task.setMessageQueue(q)
        with pytest.raises(ValueError):
            task()
        assert q.get() == (task.URL, "started")
        assert q.get() == (task.URL, TaskFail)

class TestCompareFunctions:
    def test_timeStampCompare(self, tmpdir):
        task, fin, fout = make_task(tmpdir)
        assert timeStampCompare(task.inputDataObjs, task.outputDataObjs, task.parameters)
        task()
        assert not timeStampCompare(task.inputDataObjs, task.outputDataObjs, task.parameters)
        later = os.stat(fout.path).st_mtime + 10
        os.utime(fin.path, (later, later))
        assert timeStampCompare(task.inputDataObjs, task.outputDataObjs, task.parameters)

    def test_no_outputs_always_run(self):
        assert timeStampCompare({}, {}, {})
        assert parameterDigestCompare({}, {}, {})

    def test_parameterDigestCompare(self, tmpdir):
        task, fin, fout = make_task(tmpdir)
        task()
        assert not parameterDigestCompare(task.inputDataObjs, task.outputDataObjs, {"seed": 3})
        assert parameterDigestCompare(task.inputDataObjs, task.outputDataObjs, {"seed": 4})
        assert tmpdir.join(".unit-000.json.md5").check()
