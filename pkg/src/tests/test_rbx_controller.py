import os

import pytest
from rdflib import Graph, URIRef

from rbx.common import RbxError, rbxNS
from rbx.controller import (LateTaskFailureError, RbxGraph, RbxNode, RbxThreadWorkflow, RbxWorkflow,
                            TaskExecutionError, TaskFailureError, TaskTypeError, defaultThreadCount)
from rbx.data import makeRbxLocalFile
from rbx.task import RbxTask, RbxTaskBase, RbxThreadTaskBase, TaskDone, TaskInitialized

def chain(tmpdir, TaskType, calls, fail_unit=None):
    """config -> unit-000, unit-001 -> report"""
    config = makeRbxLocalFile(str(tmpdir.join("config.json")))
    config.writeJSON({"scale": 10})
    units = [makeRbxLocalFile(str(tmpdir.join("unit-%03d.json" % i))) for i in range(2)]
    report = makeRbxLocalFile(str(tmpdir.join("report.json")))
    tasks = []
    for i, unit in enumerate(units):
        def run_unit(self):
            calls.append(self.parameters["i"])
            if self.parameters["i"] == fail_unit:
                raise ValueError("unit failed")
            self.unit.writeJSON({"value": self.config.readJSON()["scale"] + self.parameters["i"]})
        tasks.append(RbxTask(inputs={"config": config}, outputs={"unit": unit}, parameters={"i": i},
                             TaskType=TaskType, URL="task://localhost/unit-%03d" % i)(run_unit))

    def run_report(self):
        calls.append("report")
        self.report.writeJSON([self.u0.readJSON()["value"], self.u1.readJSON()["value"]])
    tasks.append(RbxTask(inputs={"u0": units[0], "u1": units[1]}, outputs={"report": report},
                         TaskType=TaskType, URL="task://localhost/report")(run_report))
    return tasks, config, report

class TestRbxNode:
    def test_degrees(self):
        a, b = RbxNode("a"), RbxNode("b")
        a.addAnOutNode(b)
        b.addAnInNode(a)
        assert (a.outDegree, a.inDegree, b.inDegree) == (1, 0, 1)
        a.removeAnOutNode(b)
        b.removeAnInNode(a)
        assert a.outDegree == 0 and b.inDegree == 0

class TestRbxGraph:
    def graph(self, edges):
        g = Graph()
        for s, o in edges:
            g.add((URIRef("x://" + s), rbxNS["prereq"], URIRef("x://" + o)))
        return g

    def test_tSort(self):
        g = self.graph([("b", "a"), ("c", "b"), ("c", "a")])
        assert RbxGraph(g).tSort() == ["x://a", "x://b", "x://c"]

    def test_cycle(self):
        g = self.graph([("b", "a"), ("a", "b")])
        with pytest.raises(TaskExecutionError):
            RbxGraph(g).tSort()

    def test_subgraph(self):
        g = self.graph([("b", "a"), ("c", "b")])
        nodes = {URIRef("x://a"), URIRef("x://b")}
        assert RbxGraph(g, nodes).tSort() == ["x://a", "x://b"]

class TestRbxWorkflow:
    def test_refreshTargets(self, tmpdir):
        calls = []
        tasks, config, report = chain(tmpdir, RbxTaskBase, calls)
        wf = RbxWorkflow()
        wf.addTasks(tasks)
        assert wf.refreshTargets([report])
        assert report.readJSON() == [10, 11]
        assert sorted(calls, key=str) == [0, 1, "report"]
        assert tmpdir.join(".unit-000.json.md5").check()

    def test_rerun_skips(self, tmpdir):
        calls = []
        tasks, config, report = chain(tmpdir, RbxTaskBase, calls)
        wf = RbxWorkflow()
        wf.addTasks(tasks)
        wf.refreshTargets([report])
        del calls[:]
        wf.refreshTargets([report])
        assert calls == []
        assert all(t.status == TaskDone for t in tasks)

    def test_duplicate_url(self, tmpdir):
        wf = RbxWorkflow()
        wf.addObject(makeRbxLocalFile(str(tmpdir.join("a"))))
        with pytest.raises(RbxError):
            wf.addObject(makeRbxLocalFile(str(tmpdir.join("a"))))

    def test_failure(self, tmpdir):
        tasks, config, report = chain(tmpdir, RbxTaskBase, [], fail_unit=1)
        wf = RbxWorkflow()
        wf.addTasks(tasks)
        with pytest.raises(TaskFailureError):
            wf.refreshTargets([report])

    def test_late_failure(self, tmpdir):
        calls = []
        tasks, config, report = chain(tmpdir, RbxTaskBase, calls, fail_unit=0)
        wf = RbxWorkflow()
        wf.addTasks(tasks)
        with pytest.raises(LateTaskFailureError):
            wf.refreshTargets([report], exitOnFailure=False)
        assert 1 in calls and "report" not in calls

class TestRbxThreadWorkflow:
    def test_refreshTargets(self, tmpdir):
        calls = []
        tasks, config, report = chain(tmpdir, RbxThreadTaskBase, calls)
        wf = RbxThreadWorkflow(nThreads=2)
        wf.addTasks(tasks)
        assert wf.refreshTargets([report])
        assert report.readJSON() == [10, 11]
        assert calls[-1] == "report"

    def test_config_change_reruns(self, tmpdir):
        calls = []
        tasks, config, report = chain(tmpdir, RbxThreadTaskBase, calls)
        wf = RbxThreadWorkflow(nThreads=1)
        wf.addTasks(tasks)
        wf.refreshTargets([report])
        config.writeJSON({"scale": 20})
        later = os.stat(report.path).st_mtime + 10
        os.utime(config.path, (later, later))
        for t in tasks:
            t.setStatus(TaskInitialized)
        wf = RbxThreadWorkflow(nThreads=1)
        wf.addTasks(tasks)
        wf.refreshTargets([report])
        assert report.readJSON() == [20, 21]

    def test_only_thread_tasks(self, tmpdir):
        tasks, config, report = chain(tmpdir, RbxTaskBase, [])
        with pytest.raises(TaskTypeError):
            RbxThreadWorkflow(nThreads=1).addTasks(tasks)

    def test_failure(self, tmpdir):
        tasks, config, report = chain(tmpdir, RbxThreadTaskBase, [], fail_unit=0)
        wf = RbxThreadWorkflow(nThreads=2)
        wf.addTasks(tasks)
        with pytest.raises(TaskFailureError):
            wf.refreshTargets([report])
        assert not report.exists

    def test_too_many_slots(self, tmpdir):
        out = makeRbxLocalFile(str(tmpdir.join("out.json")))
        task = RbxTask(outputs={"out": out}, parameters={"nSlots": 3}, TaskType=RbxThreadTaskBase)(
            lambda self: self.out.writeJSON({}))
        wf = RbxThreadWorkflow(nThreads=2)
        wf.addTask(task)
        with pytest.raises(TaskExecutionError):
            wf.refreshTargets([out])

    def test_nThreads(self, monkeypatch):
        monkeypatch.setenv("RBX_THREADS", "3")
        assert defaultThreadCount() == 3
        assert RbxThreadWorkflow().nThreads == 3
        monkeypatch.setenv("RBX_THREADS", "many")
        assert defaultThreadCount() == 1
        with pytest.raises(RbxError):
            RbxThreadWorkflow(nThreads=0)
