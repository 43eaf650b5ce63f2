"""

RbxController: This module provides the RbxWorkflow that controls how the
tasks of an experiment run are executed, serially or in threads.

"""

import logging
import os
import queue
import threading
import time

from rdflib import Graph, URIRef

from .common import RbxError, RbxObject, rbxNS
from .task import RbxTaskBase, RbxThreadTaskBase, TaskInitialized, TaskDone, TaskFail

logger = logging.getLogger(__name__)

class TaskExecutionError(RbxError):
    pass
class TaskTypeError(RbxError):
    pass
class TaskFailureError(RbxError):
    pass
class LateTaskFailureError(RbxError):
    pass

class RbxNode(object):
    """
    Representing a node in the dependence DAG.
    """

    def __init__(self, obj):
        self.obj = obj
        self._outNodes = set()
        self._inNodes = set()

    def addAnOutNode(self, obj):
        self._outNodes.add(obj)

    def addAnInNode(self, obj):
        self._inNodes.add(obj)

    def removeAnOutNode(self, obj):
        self._outNodes.remove(obj)

    def removeAnInNode(self, obj):
        self._inNodes.remove(obj)

    @property
    def inDegree(self):
        return len(self._inNodes)

    @property
    def outDegree(self):
        return len(self._outNodes)

class RbxGraph(object):
    """
    Representing a dependence DAG with RbxObjects.
    """

    def __init__(self, RDFGraph, subGraphNodes=None):
        """
        Construct an internal DAG given an RDF graph. A sub-graph is
        constructed if subGraphNodes is not None.
        """

        self._RDFGraph = RDFGraph
        self._allEdges = set()
        self._allNodes = set()
        self.url2Node = {}

        for row in self._RDFGraph.query("SELECT ?s ?o WHERE {?s rbx:prereq ?o . }", initNs=dict(rbx=rbxNS)):
            if subGraphNodes is not None:
                if row[0] not in subGraphNodes: continue
                if row[1] not in subGraphNodes: continue

            sURL, oURL = str(row[0]), str(row[1])

            self.url2Node[sURL] = self.url2Node.get(sURL, RbxNode(sURL))
            self.url2Node[oURL] = self.url2Node.get(oURL, RbxNode(oURL))

            n1 = self.url2Node[oURL]
            n2 = self.url2Node[sURL]

            n1.addAnOutNode(n2)
            n2.addAnInNode(n1)

            self._allNodes.add(n1)
            self._allNodes.add(n2)
            self._allEdges.add((n1, n2))

    def tSort(self):
        """
        Output topological sorted list of the graph element.
        It raises a TaskExecutionError if a circle is detected.
        """
        edges = self._allEdges.copy()

        S = sorted((x for x in self._allNodes if x.inDegree == 0), key=lambda n: n.obj, reverse=True)
        L = []
        while len(S) != 0:
            n = S.pop()
            L.append(n)
            for m in sorted(n._outNodes.copy(), key=lambda n: n.obj):
                edges.remove((n, m))
                n.removeAnOutNode(m)
                m.removeAnInNode(n)
                if m.inDegree == 0:
                    S.append(m)

        if len(edges) != 0:
            raise TaskExecutionError(" Circle detected in the dependency graph ")
        return [x.obj for x in L]

class RbxWorkflow(RbxObject):
    """
    Representing a RbxWorkflow. RbxTask and RbxDataObjects can be added
    into the workflow and executed through the instance methods.

    >>> import os, tempfile
    >>> from rbx.data import makeRbxLocalFile
    >>> from rbx.task import RbxTask
    >>> d = tempfile.mkdtemp()
    >>> fin = makeRbxLocalFile(os.path.join(d, "in.json"))
    >>> fout = makeRbxLocalFile(os.path.join(d, "out.json"))
    >>> _ = fin.writeJSON({"x": 2})
    >>> @RbxTask(inputs={"i": fin}, outputs={"o": fout}, parameters={"k": 3})
    ... def times(self):
    ...     self.o.writeJSON({"y": self.i.readJSON()["x"] * self.parameters["k"]})
    >>> wf = RbxWorkflow()
    >>> wf.addTask(times)
    >>> wf.refreshTargets([fout])
    True
    >>> fout.readJSON()
    {'y': 6}
    """

    supportedURLScheme = ["workflow"]

    def __init__(self, URL=None, **attributes):

        if URL is None:
            URL = "workflow://localhost/%d" % id(self)

        self._rbxObjects = {}

        RbxObject.__init__(self, URL, **attributes)

    def addObject(self, obj):
        self.addObjects([obj])

    def addObjects(self, objs):
        """
        Add data objects into the workflow. Task objects may be added this way
        too for a non-threaded workflow.
        """
        for obj in objs:
            if obj.URL in self._rbxObjects:
                if id(self._rbxObjects[obj.URL]) != id(obj):
                    raise RbxError("Add different objects with the same URL %s" % obj.URL)
                else:
                    continue
            self._rbxObjects[obj.URL] = obj

    def addTask(self, taskObj):
        self.addTasks([taskObj])

    def addTasks(self, taskObjs):
        """
        Add tasks into the workflow. The input and output data objects are
        added automatically too.
        """
        for taskObj in taskObjs:
            for dObj in list(taskObj.inputDataObjs.values()) + list(taskObj.outputDataObjs.values()):
                self.addObjects([dObj])
            self.addObject(taskObj)

    @property
    def _RDFGraph(self):
        # expensive to recompute
        graph = Graph()
        for URL, obj in self._rbxObjects.items():
            for s, p, o in obj._RDFGraph:
                graph.add((s, p, o))
        return graph

    @staticmethod
    def getSortedURLs(rdfGraph, objs):
        if len(objs) != 0:
            connectedNodes = set()
            for obj in objs:
                for x in rdfGraph.transitive_objects(URIRef(obj.URL), rbxNS["prereq"]):
                    connectedNodes.add(x)
            tSortedURLs = RbxGraph(rdfGraph, connectedNodes).tSort()
        else:
            tSortedURLs = RbxGraph(rdfGraph).tSort()
        return tSortedURLs

    def refreshTargets(self, objs=None, exitOnFailure=True):
        """
        Execute the DAG to reach all objects in the "objs" argument. Tasks
        whose outputs are up to date are skipped.
        """
        if objs is None:
            objs = []
        rdfGraph = self._RDFGraph
        tSortedURLs = self.getSortedURLs(rdfGraph, objs)
        updated = set()
        failed = []
        for URL in tSortedURLs:
            obj = self._rbxObjects[URL]
            if not isinstance(obj, RbxTaskBase):
                continue
            prereqs = set(str(u) for u in rdfGraph.transitive_objects(URIRef(URL), rbxNS["prereq"])) - {URL}
            if failed and prereqs & set(failed):
                logger.warning("Skipping %s: a prerequisite failed" % URL)
                continue
            if not (prereqs & updated) and obj.isSatisfied():
                logger.info(" Skipping already done task: %s" % URL)
                obj.setStatus(TaskDone)
                obj.finalize()
                continue
            try:
                obj()
            except Exception:
                failed.append(URL)
                if exitOnFailure:
                    raise TaskFailureError("Task %s failed" % URL)
                continue
            obj.finalize()
            if obj.getStatus() == TaskFail:
                failed.append(URL)
                if exitOnFailure:
                    raise TaskFailureError("Task %s did not produce all its outputs" % URL)
            updated.add(URL)
        if failed:
            raise LateTaskFailureError("Counted a total of %d failure(s)" % len(failed))
        return True

def defaultThreadCount():
    """
    Worker threads for a RbxThreadWorkflow: $RBX_THREADS, else 1.
    """
    try:
        n = int(os.environ.get("RBX_THREADS", "1"))
    except ValueError:
        logger.warning("ignoring non-integer RBX_THREADS=%r" % os.environ.get("RBX_THREADS"))
        return 1
    return max(1, n)

class _RbxThreadsHandler(object):
    """Stateless method delegator, for injection.
    """
    def create(self, target):
        thread = threading.Thread(target=target)
        thread.daemon = True  # so it will terminate on exit
        return thread
    def alive(self, threads):
        return sum(thread.is_alive() for thread in threads)
    def join(self, threads, timeout):
        then = time.time()
        for thread in threads:
            assert thread is not threading.current_thread()
            if thread.is_alive():
                thread.join(max(0, timeout - (time.time() - then)))

class RbxThreadWorkflow(RbxWorkflow):
    """
    Representing a RbxWorkflow that executes independent tasks concurrently
    in threads. Every task must be a RbxThreadTaskBase; each occupies nSlots
    of the nThreads available slots.
    """

    def __init__(self, URL=None, nThreads=None, **attributes):
        RbxWorkflow.__init__(self, URL, **attributes)
        self.nThreads = defaultThreadCount() if nThreads is None else int(nThreads)
        if self.nThreads < 1:
            raise RbxError("nThreads must be >= 1, got %d" % self.nThreads)
        self.thread_handler = _RbxThreadsHandler()
        self.messageQueue = queue.Queue()
        self.jobStatusMap = dict()

    def addTasks(self, taskObjs):
        """
        Add tasks into the workflow and hand them the message queue used for
        communicating between the task thread and the main thread.
        """
        for taskObj in taskObjs:
            if not isinstance(taskObj, RbxThreadTaskBase):
                raise TaskTypeError("Only RbxThreadTask can be added into a RbxThreadWorkflow. The task object has type %s " % repr(type(taskObj)))
            taskObj.setMessageQueue(self.messageQueue)
        RbxWorkflow.addTasks(self, taskObjs)

    def refreshTargets(self, objs=None, exitOnFailure=True):
        if objs is None:
            objs = []
        task2thread = {}
        try:
            return self._refreshTargets(task2thread, objs, exitOnFailure)
        except Exception:
            logger.critical("Exception caught in refreshTargets(); waiting for running tasks to finish")
            threads = list(task2thread.values())
            while self.thread_handler.alive(threads):
                self.thread_handler.join(threads, 2)
            raise

    def _refreshTargets(self, task2thread, objs, exitOnFailure):
        rdfGraph = self._RDFGraph  # should not change during execution
        tSortedURLs = self.getSortedURLs(rdfGraph, objs)

        sortedTaskList = [(str(u), self._rbxObjects[u]) for u in tSortedURLs
                          if isinstance(self._rbxObjects[u], RbxTaskBase)]
        self.jobStatusMap = dict((URL, t.getStatus()) for URL, t in sortedTaskList)
        logger.info("# of tasks in complete graph: %d" % len(sortedTaskList))

        prereqJobURLMap = {}
        for URL, taskObj in sortedTaskList:
            prereqJobURLMap[URL] = [str(u) for u in rdfGraph.transitive_objects(URIRef(URL), rbxNS["prereq"])
                                    if isinstance(self._rbxObjects[str(u)], RbxTaskBase) and str(u) != URL]
            if taskObj.nSlots > self.nThreads:
                raise TaskExecutionError("%s requests %s task slots which is more than %d task slots allowed" %
                                         (URL, taskObj.nSlots, self.nThreads))

        sleep_time = 0
        usedTaskSlots = 0
        updatedTaskURLs = set()  # to avoid extra stat-calls
        failedJobCount = 0
        succeededJobCount = 0
        jobsReadyToBeSubmitted = []

        while True:

            for URL, taskObj in sortedTaskList:
                if self.jobStatusMap[URL] != TaskInitialized:
                    continue
                prereqJobURLs = prereqJobURLMap[URL]
                if any(self.jobStatusMap[u] == TaskFail or self.jobStatusMap[u] == "blocked" for u in prereqJobURLs):
                    self.jobStatusMap[URL] = "blocked"
                    continue
                if any(self.jobStatusMap[u] != TaskDone for u in prereqJobURLs):
                    continue
                if not (set(prereqJobURLs) & updatedTaskURLs) and taskObj.isSatisfied():
                    logger.info(" Skipping already done task: %s" % URL)
                    taskObj.setStatus(TaskDone)
                    self.jobStatusMap[URL] = TaskDone
                    taskObj.finalize()
                    continue
                self.jobStatusMap[URL] = "ready"
                jobsReadyToBeSubmitted.append((URL, taskObj))

            numAliveThreads = self.thread_handler.alive(task2thread.values())
            if numAliveThreads == 0 and len(jobsReadyToBeSubmitted) == 0 and self.messageQueue.empty():
                logger.info("_refreshTargets() finished with no thread running and no new job to submit")
                break

            while jobsReadyToBeSubmitted:
                URL, taskObj = jobsReadyToBeSubmitted[0]
                if self.nThreads - usedTaskSlots >= taskObj.nSlots:
                    t = self.thread_handler.create(target=taskObj)
                    task2thread[URL] = t
                    usedTaskSlots += taskObj.nSlots
                    self.jobStatusMap[URL] = "submitted"
                    t.start()
                    logger.debug("Submitted %r" % URL)
                    jobsReadyToBeSubmitted.pop(0)
                else:
                    break

            time.sleep(sleep_time)
            sleep_time = sleep_time + 0.05 if (sleep_time < 0.5) else 0.5
            while not self.messageQueue.empty():
                sleep_time = 0
                URL, message = self.messageQueue.get()
                updatedTaskURLs.add(URL)
                self.jobStatusMap[URL] = message
                logger.debug("message for %s: %r" % (URL, message))

                if message in (TaskDone, TaskFail):
                    finishedTask = self._rbxObjects[URL]
                    usedTaskSlots -= finishedTask.nSlots
                    task2thread[URL].join(timeout=10)
                    finishedTask.finalize()
                    if message == TaskDone:
                        succeededJobCount += 1
                    else:
                        logger.info("Failure. Joined %r" % URL)
                        failedJobCount += 1
                elif message == "started":
                    logger.info("Started %s ..." % URL)
                else:
                    logger.warning("Got unexpected message %r from URL %r." % (message, URL))

            if failedJobCount != 0 and exitOnFailure:
                threads = list(task2thread.values())
                while self.thread_handler.alive(threads):
                    self.thread_handler.join(threads, 2)
                raise TaskFailureError("Counted %d failure(s) with %d successes so far." % (failedJobCount, succeededJobCount))

        if failedJobCount != 0:
            raise LateTaskFailureError("Counted a total of %d failure(s) and %d success(es)." % (
                failedJobCount, succeededJobCount))
        return True
