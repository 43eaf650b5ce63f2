"""

RbxTask: This module provides the RbxTask classes and the decorator that
converts a regular python function into a task of an experiment workflow.

A task reads its input files, computes, and writes its output files. It is
re-run only when its outputs are out of date, following the make-like rules
of timeStampCompare() and parameterDigestCompare().

"""

import inspect
import logging
import os
import pprint

from .common import RbxError, RbxObject, rbxNS, digest, literal
from .data import makeRbxLocalFile
from rdflib import Graph, URIRef

logger = logging.getLogger(__name__)

class TaskFunctionError(RbxError):
    pass

# These must be strings.
TaskInitialized = "TaskInitialized"
TaskDone = "done"
TaskFail = "fail"

class RbxTaskBase(RbxObject):
    """
    Represent a task. Subclass it for different kinds of task.
    """

    supportedURLScheme = ["task"]

    def __init__(self, URL, **kwargv):

        RbxObject.__init__(self, URL)

        self._taskFun = kwargv["_taskFun"]
        self._status = TaskInitialized
        self._queue = None

        self.inputDataObjs = dict(kwargv.get("inputs", {}))
        self.outputDataObjs = dict(kwargv.get("outputs", {}))
        self.parameters = dict(kwargv.get("parameters", {}))

        # the keys in inputDataObjs/outputDataObjs become task attributes
        vars(self).update(self.inputDataObjs)
        vars(self).update(self.outputDataObjs)

        self._paramMD5digest = digest(self.parameters)
        self._compareFunctions = kwargv.get("_compareFunctions",
                                            [timeStampCompare, parameterDigestCompare])

        for o in self.outputDataObjs.values():
            if o.readOnly:
                raise RbxError("Cannot assign read only data object %s for task %s" % (o.URL, self.URL))

    @property
    def status(self):
        return self._status

    def getStatus(self):
        """
        Note: Do not call this while the task is actually running!
        """
        return self._status

    def setStatus(self, status):
        assert status in (TaskInitialized, TaskDone, TaskFail)
        self._status = status

    def _getRunFlag(self):
        """Determine whether the task should be run."""
        return any(f(self.inputDataObjs, self.outputDataObjs, self.parameters) for f in self._compareFunctions)

    def isSatisfied(self):
        """Compare dependencies. (Kinda expensive: stat-calls.)"""
        return not self._getRunFlag()

    @property
    def _RDFGraph(self):
        graph = Graph()
        for f in self.inputDataObjs.values():
            graph.add((URIRef(self.URL), rbxNS["prereq"], URIRef(f.URL)))
        for f in self.outputDataObjs.values():
            graph.add((URIRef(f.URL), rbxNS["prereq"], URIRef(self.URL)))
        graph.add((URIRef(self.URL), rbxNS["hasParameters"], literal(self.parameters)))
        graph.add((URIRef(self.URL), rbxNS["parameterMD5digest"], literal(self._paramMD5digest)))
        return graph

    def __call__(self):
        """Trap all exceptions, set fail flag, log, and re-raise.
        """
        try:
            return self.run()
        except Exception:
            logger.exception("RbxTaskBase failed unexpectedly:\n%r" % self)
            self._status = TaskFail
            raise

    def run(self):
        """Call the task function, then check that it produced every output.
        """
        parameters = dict(self.parameters)
        logger.info("Running task from function %s()" % self._taskFun.__name__)
        self._taskFun(self)

        if self.parameters != parameters:
            raise TaskFunctionError("The 'parameters' should not be modified in %s" % self.URL)
        missing = [(k, o) for (k, o) in self.outputDataObjs.items() if not o.exists]
        if missing:
            logger.debug("%s fails to generate all outputs; missing:\n%s" % (self.URL, pprint.pformat(missing)))
            self._status = TaskFail
        else:
            recordParameterDigest(self.outputDataObjs, self._paramMD5digest)
            self._status = TaskDone
        return True

    def __repr__(self):
        r = dict()
        r["_status"] = self._status
        r["inputDataObjs"] = self.inputDataObjs
        r["outputDataObjs"] = self.outputDataObjs
        r["parameters"] = self.parameters
        r["__class__.__name__"] = self.__class__.__name__
        return pprint.pformat(r)

    def finalize(self):
        """
        Intended to be overridden by subclasses. For the thread workflow, this
        method is called in the main thread after a task is finished,
        regardless of the job status.
        """
        pass

class RbxThreadTaskBase(RbxTaskBase):

    """
    Represent a task that can be run within a thread.
    """

    @property
    def nSlots(self):
        """
        The number of worker slots this task occupies; set it through the
        "parameters" argument (e.g. parameters={"nSlots": 2}).
        """
        return self.parameters.get("nSlots", 1)

    def setMessageQueue(self, q):
        self._queue = q

    def __call__(self):
        """Trap all exceptions, set fail flag, SEND MESSAGE, log, and re-raise.
        """
        try:
            return self.runInThisThread()
        except Exception:
            logger.exception("RbxThreadTaskBase failed:\n%r" % self)
            self._status = TaskFail
            if self._queue is not None:
                self._queue.put((self.URL, TaskFail))
            raise

    def runInThisThread(self):
        """
        Similar to run(), but passes status back to the controlling thread
        through the message queue.
        """
        if self._queue is None:
            raise RbxError("%s has no message queue; add it to a RbxThreadWorkflow first" % self.URL)
        self._queue.put((self.URL, "started"))
        self.run()
        self._queue.put((self.URL, self._status))

def _auto_task_url(taskFun, parameters):
    return "task://localhost/%s/%s" % (taskFun.__name__, digest(parameters)[:12])

def RbxTask(**kwargv):

    """
    A decorator that converts a function into a RbxTaskBase object.

    >>> import tempfile
    >>> d = tempfile.mkdtemp()
    >>> fout = makeRbxLocalFile(os.path.join(d, "out.json"))
    >>> @RbxTask(outputs={"out": fout}, parameters={"seed": 3})
    ... def write_seed(self):
    ...     self.out.writeJSON({"seed": self.parameters["seed"]})
    >>> type(write_seed).__name__
    'RbxTaskBase'
    >>> write_seed.isSatisfied()
    False
    >>> write_seed()
    True
    >>> write_seed.status
    'done'
    >>> write_seed.isSatisfied()
    True
    """

    def f(taskFun):

        TaskType = kwargv.pop("TaskType", RbxTaskBase)
        kwargv["_taskFun"] = taskFun
        URL = kwargv.pop("URL", None)
        if URL is None:
            URL = _auto_task_url(taskFun, kwargv.get("parameters", {}))
        task = TaskType(URL, **kwargv)
        task.__doc__ = inspect.getdoc(taskFun)
        return task

    return f

def _digestFile(outputDataObjs):
    first = sorted(o.localFileName for o in outputDataObjs.values())[0]
    dirname, basename = os.path.split(first)
    return makeRbxLocalFile(os.path.join(dirname, "." + basename + ".md5"))

def recordParameterDigest(outputDataObjs, paramDigest):
    if not outputDataObjs:
        return
    with open(_digestFile(outputDataObjs).path, "w") as ofs:
        ofs.write(paramDigest)

def parameterDigestCompare(inputDataObjs, outputDataObjs, parameters):
    """
    True when the parameters differ from the digest recorded next to the
    outputs by the last successful run.
    """
    if not outputDataObjs:
        return True
    stateFile = _digestFile(outputDataObjs)
    if not stateFile.exists:
        return True
    with open(stateFile.path) as ifs:
        recorded = ifs.read().strip()
    if recorded != digest(parameters):
        logger.debug("parameter digest changed for %r" % stateFile)
        return True
    return False

def timeStampCompare(inputDataObjs, outputDataObjs, parameters):

    """
    Given the inputDataObjs and the outputDataObjs, determine whether any
    object in the inputDataObjs is created or modified later than any object
    in outputDataObjects.
    """

    runFlag = False

    inputDataObjsTS = []
    for ft, f in inputDataObjs.items():
        inputDataObjsTS.append((f.timeStamp, "A", f.URL))

    outputDataObjsTS = []
    for ft, f in outputDataObjs.items():
        if not f.exists:
            logger.debug("output does not exist yet: %r" % f)
            runFlag = True
            break
        else:
            # 'A' < 'B', so outputs are 'later' if timestamps match.
            outputDataObjsTS.append((f.timeStamp, "B", f.URL))

    if not outputDataObjs:
        # 0 outputs => always run
        runFlag = True

    if not runFlag and inputDataObjs:  # 0 inputs would imply that existence of outputs is enough.
        minOut = min(outputDataObjsTS)
        maxIn = max(inputDataObjsTS)
        if minOut < maxIn:
            logger.debug("timestamp of output < input: %r < %r" % (minOut, maxIn))
            runFlag = True

    return runFlag
