"""

RbxRunner: run an experiment as a workflow in its output directory.

    <out>/config.json      resolved configuration (rewritten only on change)
    <out>/unit-NNN.json    one file per unit, written by one task each
    <out>/report.json      written by the assembly task
    <out>/curves.csv       written by the assembly task

Unit tasks depend on config.json only, so a rerun with an unchanged
configuration skips every finished unit.

"""

import logging
import os
import time

from .controller import RbxThreadWorkflow
from .data import makeRbxLocalFile
from .experiments import assemble, timed_unit
from .report import RunReport, write_curves
from .task import RbxTask, RbxThreadTaskBase

logger = logging.getLogger(__name__)

def unit_file_name(out, i):
    return os.path.join(out, "unit-%03d.json" % i)

def _unit_task(experiment, cfg, configFile, unitFile, i, params):

    @RbxTask(inputs={"config": configFile},
             outputs={"unit": unitFile},
             parameters=dict(params),
             TaskType=RbxThreadTaskBase,
             URL="task://localhost/%s/unit-%03d" % (experiment.name, i))
    def run_unit(self):
        self.unit.writeJSON(timed_unit(experiment, cfg, self.parameters))

    return run_unit

def build_workflow(experiment, cfg, nThreads=None, force=False):
    """
    Returns (workflow, report file, curves file).
    """
    out = cfg.out
    if not os.path.isdir(out):
        os.makedirs(out)
    configFile = makeRbxLocalFile(os.path.join(out, "config.json"))
    if configFile.writeJSON(cfg.to_json()):
        logger.info("configuration written to %s" % configFile.path)

    unitParams = experiment.units(cfg)
    unitFiles = [makeRbxLocalFile(unit_file_name(out, i)) for i in range(len(unitParams))]
    reportFile = makeRbxLocalFile(os.path.join(out, "report.json"))
    curvesFile = makeRbxLocalFile(os.path.join(out, "curves.csv"))
    if force:
        for f in unitFiles + [reportFile, curvesFile]:
            f.clean()

    tasks = [_unit_task(experiment, cfg, configFile, f, i, p)
             for i, (f, p) in enumerate(zip(unitFiles, unitParams))]

    inputs = {"config": configFile}
    inputs.update(("unit%03d" % i, f) for i, f in enumerate(unitFiles))

    @RbxTask(inputs=inputs,
             outputs={"report": reportFile, "curves": curvesFile},
             parameters={"experiment": experiment.name, "n_units": len(unitFiles)},
             TaskType=RbxThreadTaskBase,
             URL="task://localhost/%s/assemble" % experiment.name)
    def assemble_report(self):
        units = [f.readJSON() for f in unitFiles]
        report = assemble(experiment, cfg, units, time.time() - wf.startTime)
        report.dump(self.report.path)
        write_curves(self.curves.path, experiment.curve_columns, units)
        logger.info("report written to %s" % self.report.path)

    wf = RbxThreadWorkflow(nThreads=nThreads)
    wf.startTime = time.time()
    wf.addTasks(tasks + [assemble_report])
    return wf, reportFile, curvesFile

def run_workflow(experiment, cfg, nThreads=None, force=False):
    """
    Bring report.json up to date and load it. Raises TaskFailureError when
    a unit fails. The report keeps the elapsed time of the run that wrote it.
    """
    wf, reportFile, curvesFile = build_workflow(experiment, cfg, nThreads, force)
    logger.info("running %s with %d thread(s) into %s" % (experiment.name, wf.nThreads, cfg.out))
    wf.startTime = time.time()
    wf.refreshTargets([reportFile])
    return RunReport.load(reportFile.path)
