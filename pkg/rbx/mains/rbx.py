"""Run one of the Rao-Blackwellization examples and write its report.

Exit status: 0 when every asserted check passed, 1 when some check failed,
2 for configuration errors, 3 when a task failed.
"""
import argparse
import json
import logging
import logging.config
import sys

from ..config import DEFAULTS, EXPERIMENT_NAMES, ConfigError, resolve
from ..controller import LateTaskFailureError, TaskFailureError
from ..experiments import EXPERIMENTS
from ..runner import run_workflow

log = logging.getLogger(__name__)

DESCRIPTION = """
Run an example experiment as a workflow of independent units (one seed of
one network or variant). Results go to DIR/report.json and DIR/curves.csv;
unchanged reruns skip finished units.
"""
EPILOG = """
Experiments: {}. Use "rbx list" to see their defaults.
RBX_THREADS sets the default number of worker threads.
""".format(", ".join(EXPERIMENT_NAMES))

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_TASK_FAILED = 3

class _Formatter(argparse.RawDescriptionHelpFormatter, argparse.ArgumentDefaultsHelpFormatter):
    pass
_FORMATTER_CLASS = _Formatter

def parse_args(args):
    parser = argparse.ArgumentParser(
        prog="rbx",
        description=DESCRIPTION,
        epilog=EPILOG,
        formatter_class=_FORMATTER_CLASS,
    )
    parser.add_argument("experiment",
        choices=EXPERIMENT_NAMES + ("list",),
        help="Which example to run, or 'list'.",
    )
    parser.add_argument("--config",
        help="JSON file of overrides; keys starting with ~ are ignored.",
    )
    parser.add_argument("--seed",
        type=int,
        help="Run this single seed instead of the configured seeds.",
    )
    parser.add_argument("--out",
        help="Output directory. (default: rbx-<experiment>)",
    )
    parser.add_argument("--bins",
        type=int,
        help="Intervals per statistic axis, for experiments that bin.",
    )
    parser.add_argument("--full-resolution",
        action="store_true",
        help="Use the full test lattice instead of the desk-scale one.",
    )
    parser.add_argument("--threads",
        type=int,
        help="Worker threads. (default: $RBX_THREADS, else 1)",
    )
    parser.add_argument("--force",
        action="store_true",
        help="Remove existing unit files and rerun everything.",
    )
    parser.add_argument("--verbose", "-v",
        action="store_true",
        help="Log at DEBUG level.",
    )
    parser.add_argument("--logging-cfg",
        help="JSON file for logging.config.dictConfig; overrides --verbose.",
    )
    return parser.parse_args(args)

def setup_logging(logging_cfg=None, verbose=False):
    if logging_cfg:
        with open(logging_cfg) as ifs:
            logging.config.dictConfig(json.load(ifs))
    else:
        logging.basicConfig(
            level=logging.DEBUG if verbose else logging.INFO,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )

def list_experiments(ofs):
    for name in EXPERIMENT_NAMES:
        ofs.write("{}\n".format(name))
        ofs.write(json.dumps(DEFAULTS[name], indent=1, sort_keys=True))
        ofs.write("\n")

def run(args):
    if args.experiment == "list":
        list_experiments(sys.stdout)
        return EXIT_OK
    try:
        cfg = resolve(args.experiment, args.config, seed=args.seed, out=args.out, bins=args.bins,
                      full_resolution=args.full_resolution)
    except (ConfigError, OSError, ValueError) as e:
        log.error("configuration error: %s" % e)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        log.error("--threads must be >= 1, got %d" % args.threads)
        return EXIT_CONFIG
    try:
        report = run_workflow(EXPERIMENTS[args.experiment], cfg, args.threads, args.force)
    except (TaskFailureError, LateTaskFailureError) as e:
        log.error("%s: %s" % (args.experiment, e))
        return EXIT_TASK_FAILED
    sys.stdout.write(report.summary() + "\n")
    return EXIT_OK if report.passed else EXIT_CHECKS_FAILED

def main(argv=sys.argv):
    args = parse_args(argv[1:])
    setup_logging(args.logging_cfg, args.verbose)
    return run(args)

if __name__ == "__main__":
    sys.exit(main())
