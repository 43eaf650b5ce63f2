import io
import json

import pytest

from rbx.config import DEFAULTS, EXPERIMENT_NAMES, ConfigError, ExperimentConfig, readjson, resolve

class TestReadjson:
    def test_strips_tilde_keys(self):
        ifs = io.StringIO('{"bins": 10, "train": {"epochs": 3, "~note": 1}, "~end": {}}')
        assert readjson(ifs) == {"bins": 10, "train": {"epochs": 3}}

class TestExperimentConfig:
    def test_every_experiment_has_valid_defaults(self):
        for name in EXPERIMENT_NAMES:
            cfg = ExperimentConfig(name)
            assert cfg.out == "rbx-%s" % name
            assert cfg["seeds"]

    def test_defaults(self):
        assert ExperimentConfig("yield")["networks"] == [[5], [10, 5], [200, 200, 60]]
        damage = ExperimentConfig("damage")
        assert damage["hidden"] == [50, 50, 50, 20]
        assert damage["train"]["learning_rate"] == 0.01 and damage["train"]["batch_size"] == 1
        assert len(ExperimentConfig("steelbar")["seeds"]) == 20

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("plasticity")

    def test_unknown_key(self):
        with pytest.raises(ConfigError) as e:
            ExperimentConfig("damage", {"train": {"epoch": 3}})
        assert "epoch" in str(e.value)

    def test_nested_merge(self):
        cfg = ExperimentConfig("damage", {"train": {"epochs": 3}})
        assert cfg["train"]["epochs"] == 3
        assert cfg["train"]["batch_size"] == 1

    def test_defaults_not_shared(self):
        cfg = ExperimentConfig("damage", {"train": {"epochs": 3}})
        cfg["train"]["epochs"] = 7
        assert DEFAULTS["damage"]["train"]["epochs"] == 50

    def test_validation(self):
        for name, values in [("yield", {"bins": 1751}), ("yield", {"seeds": []}), ("poisson", {"nu": 0.5}),
                             ("damage", {"variants": ["S5"]}), ("rubber", {"rotation_steps": 0}),
                             ("yield", {"train": {"learning_rate": 0.0}}), ("yield", {"seeds": [-1]})]:
            with pytest.raises(ConfigError):
                ExperimentConfig(name, values)

    def test_types(self):
        for name, values in [("yield", {"train": {"epochs": "x"}}), ("poisson", {"nu": "0.4"}),
                             ("damage", {"full_resolution": 1}), ("rubber", {"n_steps": 2.5}),
                             ("steelbar", {"training_sets": "random"}), ("damage", {"hidden": [8, "a"]}),
                             ("yield", {"networks": [[5], 10]}), ("rubber", {"mc_seeds": True})]:
            with pytest.raises(ConfigError):
                ExperimentConfig(name, values)
        assert ExperimentConfig("rubber", {"E": 3})["E"] == 3
        assert ExperimentConfig("yield", {"train": {"lr_patience": None}})["train"]["lr_patience"] is None

    def test_json(self):
        cfg = ExperimentConfig("rubber", {"seeds": [4]})
        assert ExperimentConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg

class TestResolve:
    def test_layers(self, tmpdir):
        path = str(tmpdir.join("cfg.json"))
        with open(path, "w") as ofs:
            ofs.write('{"experiment": "yield", "seeds": [1, 2], "bins": 100, "~end": {}}')
        cfg = resolve("yield", path)
        assert cfg["seeds"] == [1, 2] and cfg["bins"] == 100
        cfg = resolve("yield", path, seed=5, bins=50, out="x", full_resolution=True)
        assert cfg["seeds"] == [5] and cfg["bins"] == 50 and cfg.out == "x" and cfg["full_resolution"]

    def test_wrong_experiment_in_file(self, tmpdir):
        path = str(tmpdir.join("cfg.json"))
        with open(path, "w") as ofs:
            ofs.write('{"experiment": "damage"}')
        with pytest.raises(ConfigError):
            resolve("yield", path)

    def test_bins_not_applicable(self):
        with pytest.raises(ConfigError):
            resolve("poisson", bins=3)
