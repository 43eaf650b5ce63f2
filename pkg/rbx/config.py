"""

RbxConfig: experiment configuration. A configuration is resolved from the
built-in defaults, then an optional JSON file, then command-line overrides;
the resolved values are echoed into every report.

"""

import copy
import json
import logging
import math

from .common import RbxError

logger = logging.getLogger(__name__)

class ConfigError(RbxError):
    pass

EXPERIMENT_NAMES = ("yield", "microsphere", "steelbar", "damage", "rubber", "poisson")

_COMMON = {
    "seeds": [0],
    "out": None,
    "full_resolution": False,
}

DEFAULTS = {
    "yield": {
        "seeds": [0],
        "half_width": 1.75,
        "noise_band": 0.03,
        "n_train": 2000,
        "n_validation": 500,
        "test_step": 0.01,
        "bins": 1750,
        "networks": [[5], [10, 5], [200, 200, 60]],
        "assert_rounded": False,
        "hidden_activation": "tanh",
        "output_activation": "tanh",
        "train": {"optimizer": "sgd", "learning_rate": 0.05, "batch_size": 32, "epochs": 300,
                  "lr_patience": 50, "shuffle": True},
    },
    "microsphere": {
        "seeds": [0],
        "n_tensors": 10,
        "spd_shift": 0.1,
        "order": [8, 16],
        "tolerance": 1e-8,
    },
    "steelbar": {
        "seeds": list(range(20)),
        "E": 210000.0,
        "c0": 4.0e-3,
        "c1": 0.15,
        "data_seed": 0,
        "n_train": 10,
        "n_test": 21,
        "training_sets": ["constant_d", "constant_w", "random"],
        "hidden": [13, 13, 13],
        "hidden_activation": "relu",
        "output_activation": "linear",
        "train": {"optimizer": "adam", "learning_rate": 0.01, "batch_size": 10, "epochs": 2000,
                  "lr_patience": 200, "shuffle": False},
    },
    "damage": {
        "seeds": [0, 1, 2, 3, 4],
        "kappa": 3.0,
        "mu": 2.0,
        "gamma": 1.0,
        "box": 0.1,
        "n_train": 400,
        "test_step": 0.005,
        "full_test_step": 0.001,
        "bins": 40,
        "variants": ["S4", "S1", "S2", "S3", "augmented"],
        "augmentation_factor": 2,
        "hidden": [50, 50, 50, 20],
        "hidden_activation": "relu",
        "output_activation": "linear",
        "train": {"optimizer": "sgd", "learning_rate": 0.01, "batch_size": 1, "epochs": 50,
                  "lr_patience": 50, "shuffle": True},
        "n_energy_checks": 10000,
        "n_witness_pairs": 200,
        "n_bruteforce": 20,
        "bruteforce_resolution": 21,
    },
    "rubber": {
        "seeds": [0, 1, 2],
        "mc_seeds": 100,
        "nu": 0.45,
        "E": 2.0,
        "n_steps": 25,
        "n_regions": 275,
        "noise_sd": 0.03,
        "max_strain": 0.25,
        "rotation_steps": 36,
        "max_compression": 0.01016,
        "cutoff": 0.02,
        "n_compression": 8,
        "hidden": [10, 10, 10, 10],
        "hidden_activation": "tanh",
        "output_activation": "linear",
        "train": {"optimizer": "adam", "learning_rate": 0.005, "batch_size": 32, "epochs": 200,
                  "lr_patience": 50, "shuffle": True},
        "lateral_strain": 0.1,
        "n_test": 200,
    },
    "poisson": {
        "seeds": list(range(100)),
        "nu": 0.45,
        "noise_sd": 0.03,
        "n_steps": 25,
        "n_regions": 275,
        "max_strain": 0.25,
    },
}

def readjson(ifs):
    """Del keys that start with ~.
    That lets us have trailing commas on all other lines.

    >>> import io
    >>> readjson(io.StringIO('{"a": {"b": 1, "~c": 2}, "~end": {}}'))
    {'a': {'b': 1}}
    """
    content = ifs.read()
    logger.debug("content:%r" % content)
    jsonval = json.loads(content)
    def striptildes(subd):
        if not isinstance(subd, dict):
            return
        for k, v in list(subd.items()):
            if k.startswith("~"):
                del subd[k]
            else:
                striptildes(v)
    striptildes(jsonval)
    return jsonval

# keys whose value may also be null
_NULLABLE = ("lr_patience",)

def _check_type(key, default, value):
    """
    An override must have the type of its default; an int is accepted for a
    float, a bool never counts as a number.

    >>> _check_type("epochs", 300, "x")
    Traceback (most recent call last):
    ...
    rbx.config.ConfigError: config key 'epochs' must be int, got 'x'
    """
    if default is None or (value is None and key in _NULLABLE):
        return
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError("config key %r must be %s, got %r" % (key, type(default).__name__, value))

def _merge(base, update, where):
    for k, v in update.items():
        if k not in base:
            raise ConfigError("unknown config key %r%s" % (k, " in %s" % where if where else ""))
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError("config key %r must be an object" % k)
            _merge(base[k], v, k)
        else:
            _check_type(k, base[k], v)
            base[k] = copy.deepcopy(v)

class ExperimentConfig(object):

    """
    The resolved configuration of one experiment: its name plus every
    parameter, defaults included.

    >>> cfg = ExperimentConfig("poisson", {"nu": 0.4})
    >>> cfg["nu"], len(cfg["seeds"])
    (0.4, 100)
    >>> ExperimentConfig("poisson", {"nuu": 0.4})
    Traceback (most recent call last):
    ...
    rbx.config.ConfigError: unknown config key 'nuu'
    """

    def __init__(self, experiment, values=None):
        if experiment not in EXPERIMENT_NAMES:
            raise ConfigError("unknown experiment %r; choose one of %s" % (experiment, ", ".join(EXPERIMENT_NAMES)))
        self.experiment = experiment
        resolved = copy.deepcopy(_COMMON)
        resolved.update(copy.deepcopy(DEFAULTS[experiment]))
        _merge(resolved, values or {}, None)
        self.values = resolved
        self.validate()

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.to_json() == other.to_json()

    def __repr__(self):
        return "ExperimentConfig(%r, %r)" % (self.experiment, self.values)

    def to_json(self):
        obj = {"experiment": self.experiment}
        obj.update(copy.deepcopy(self.values))
        return obj

    @classmethod
    def from_json(cls, obj):
        obj = dict(obj)
        experiment = obj.pop("experiment")
        return cls(experiment, obj)

    @property
    def out(self):
        return self.values["out"] or "rbx-%s" % self.experiment

    def validate(self):
        seeds = self.values["seeds"]
        if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
            raise ConfigError("seeds must be a non-empty list of unsigned integers, got %r" % (seeds,))
        if "bins" in self.values and (not isinstance(self.values["bins"], int) or self.values["bins"] < 1):
            raise ConfigError("bins must be a positive integer, got %r" % (self.values["bins"],))
        if self.experiment == "yield" and self.values["bins"] > 1750:
            raise ConfigError("the yield example allows at most 1750 intervals, got %d" % self.values["bins"])
        layers = [self.values["hidden"]] if "hidden" in self.values else self.values.get("networks", [])
        for hidden in layers:
            if not isinstance(hidden, list) or not all(isinstance(n, int) and not isinstance(n, bool) and n > 0 for n in hidden):
                raise ConfigError("hidden layer sizes must be lists of positive integers, got %r" % (hidden,))
        train = self.values.get("train")
        if train is not None:
            if not train["learning_rate"] > 0:
                raise ConfigError("train.learning_rate must be > 0")
            if train["epochs"] < 0 or train["batch_size"] < 1:
                raise ConfigError("train.epochs must be >= 0 and train.batch_size >= 1")
        for key in ("nu",):
            if key in self.values and not 0.0 < self.values[key] < 0.5:
                raise ConfigError("%s must lie in (0, 0.5), got %r" % (key, self.values[key]))
        if self.experiment == "rubber":
            steps = self.values["rotation_steps"]
            if not isinstance(steps, int) or steps < 1:
                raise ConfigError("rotation_steps must be a positive integer, got %r" % (steps,))
        if self.experiment == "damage":
            for v in self.values["variants"]:
                if v not in ("S1", "S2", "S3", "S4", "augmented"):
                    raise ConfigError("unknown damage variant %r" % v)
            if not math.isfinite(self.values["box"]) or self.values["box"] <= 0:
                raise ConfigError("box must be positive")

def resolve(experiment, config_file=None, seed=None, out=None, bins=None, full_resolution=None):
    """
    Defaults, then the JSON config_file, then the explicit overrides.
    """
    values = {}
    if config_file is not None:
        with open(config_file) as ifs:
            values = readjson(ifs)
        if not isinstance(values, dict):
            raise ConfigError("%s must hold a JSON object" % config_file)
        named = values.pop("experiment", experiment)
        if named != experiment:
            raise ConfigError("%s configures %r, not %r" % (config_file, named, experiment))
    cfg = ExperimentConfig(experiment, values)
    overrides = {}
    if seed is not None:
        overrides["seeds"] = [int(seed)]
    if out is not None:
        overrides["out"] = out
    if bins is not None:
        if "bins" not in cfg.values:
            raise ConfigError("--bins does not apply to the %s example" % experiment)
        overrides["bins"] = int(bins)
    if full_resolution:
        overrides["full_resolution"] = True
    if overrides:
        merged = cfg.to_json()
        merged.update(overrides)
        cfg = ExperimentConfig.from_json(merged)
    logger.debug("resolved %r" % cfg)
    return cfg
