import json

import numpy as np
import numpy.testing as npt
import pytest

from rbx.config import ExperimentConfig
from rbx.experiments import (EXPERIMENTS, ExperimentError, assemble, dimensionless_targets, plane_stress_law,
                             run_damage, run_inline, run_microsphere, run_poisson, run_rubber, run_steelbar,
                             run_yield, steelbar_test_geometry, steelbar_training_geometry, timed_unit)
from rbx.datagen import dic_cloud, fit_poisson, group_by_step, homogenize, rubber_pairs
from rbx.oracles import steelbar_surrogate
from rbx.report import RunReport

QUICK_TRAIN = {"epochs": 3, "lr_patience": 2}

def tiny(name, **values):
    return ExperimentConfig(name, values)

class TestSteelbarData:
    def test_training_geometries(self):
        g = steelbar_training_geometry("constant_d", 10)
        npt.assert_array_equal(g.d, 4.0)
        g = steelbar_training_geometry("constant_w", 10)
        npt.assert_array_equal(g.w, 4.0)
        g = steelbar_training_geometry("random", 10, data_seed=3)
        assert np.all((g.ratio >= 0.1) & (g.ratio <= 0.9))
        with pytest.raises(ExperimentError):
            steelbar_training_geometry("square", 10)

    def test_dimensionless_targets_collapse(self):
        g = steelbar_test_geometry(21)
        force = steelbar_surrogate(g, 210000.0, 4.0e-3, 0.15)
        ratios, targets, spread = dimensionless_targets(g, force, 210000.0, 4.0e-3)
        assert len(ratios) == 21
        assert spread == 0.0
        assert np.all(np.diff(ratios) > 0)

class TestPlaneStress:
    def test_uniaxial(self):
        E, nu = 2.0, 0.45
        sigma = plane_stress_law([[0.1, -nu * 0.1, 0.0]], E, nu)
        npt.assert_allclose(sigma[0], [E * 0.1, 0.0, 0.0], atol=1e-15)

class TestExperiments:
    def test_registry(self):
        assert list(EXPERIMENTS) == ["yield", "microsphere", "steelbar", "damage", "rubber", "poisson"]

    def test_microsphere(self):
        report = run_microsphere(tiny("microsphere", n_tensors=3, seeds=[0, 1]))
        assert report.passed
        assert report.check("identity tensor").detail["deviation"] <= 1e-14
        assert report.aggregate["max_deviation"] < 1e-8
        assert [row[:2] for row in report.aggregate["ladder"]] == [[1, 2], [2, 4], [4, 8], [8, 16]]

    def test_yield(self):
        cfg = tiny("yield", n_train=200, n_validation=50, test_step=0.25, bins=100, networks=[[5]],
                   train=QUICK_TRAIN)
        report = run_yield(cfg)
        assert report.passed
        assert len(report.runs) == 1
        run = report.runs[0]
        assert run["layer_sizes"] == [2, 5, 1]
        assert run["improvement"]["mse_after"] <= run["improvement"]["mse_before"] + 1e-12
        assert report.check("idempotency").asserted

    def test_yield_rounded_classifier_full_lattice(self):
        # full test lattice and 1750 intervals with the two small networks
        cfg = tiny("yield", networks=[[5], [10, 5]], assert_rounded=True)
        report = run_yield(cfg)
        assert report.passed
        for tag in ("seed 0 net 2-5-1", "seed 0 net 2-10-5-1"):
            check = report.check("rounded classifier not worse, %s" % tag)
            assert check.asserted and check.passed
            assert check.detail["after"] < check.detail["before"]
        assert not tiny("yield").values["assert_rounded"]

    def test_steelbar(self):
        cfg = tiny("steelbar", seeds=[0], training_sets=["constant_d", "random"], hidden=[4],
                   train={"epochs": 5})
        report = run_steelbar(cfg)
        assert report.passed
        assert set(report.aggregate) == {"constant_d", "random"}
        assert not report.check("dimensionless not worse, random").asserted
        assert report.check("training targets collapse per ratio").passed

    def test_steelbar_defaults(self):
        report = run_steelbar(tiny("steelbar"))
        assert report.passed
        check = report.check("dimensionless not worse, constant_w")
        assert check.asserted and check.passed
        assert len(report.runs) == 3 * 20

    def test_damage(self):
        cfg = tiny("damage", seeds=[0], n_train=30, test_step=0.05, bins=5, hidden=[8],
                   variants=["S4", "S2", "augmented"], train={"epochs": 2},
                   n_energy_checks=200, n_witness_pairs=10, n_bruteforce=3, bruteforce_resolution=7)
        report = run_damage(cfg)
        for name in ("brute-force agreement", "energy split invariants", "S2 sufficient", "S1 not sufficient",
                     "output filter inequality, seed 0", "augmented targets equal source targets"):
            assert report.check(name).passed, name
        assert report.passed
        assert "S4+filter(S2)" in report.aggregate
        assert [r["variant"] for r in report.runs] == ["oracles", "S4", "S2", "augmented"]

    def test_rubber(self):
        cfg = tiny("rubber", seeds=[0], mc_seeds=10, rotation_steps=4, hidden=[6], train={"epochs": 3},
                   n_test=20)
        report = run_rubber(cfg)
        assert report.check("augmented set size").passed
        assert report.check("full data beats truncated data").passed
        for run in report.runs[1:]:
            assert run["n_pairs"] == run["n_homogenized"] * 4 + 8
        cloud = dic_cloud(0.45, 25, 275, 0.03, 0, 0.25)
        pairs = homogenize(group_by_step(rubber_pairs(cloud, 2.0)))
        nu = fit_poisson(np.array([[p.eps.xx, p.eps.yy] for p in pairs]))
        assert report.runs[0]["nu_full"][0] == nu

    def test_rubber_variants_coincide_without_noise(self):
        cfg = tiny("rubber", seeds=[0], mc_seeds=3, noise_sd=0.0, rotation_steps=4, hidden=[6],
                   train={"epochs": 3}, n_test=20)
        report = run_rubber(cfg)
        mc, rb, aux = report.runs
        assert (rb["variant"], aux["variant"]) == ("RB", "RB+inc+aux")
        for key in ("n_homogenized", "n_pairs", "nu_data", "nu_net", "test_mse", "final_loss"):
            assert rb[key] == aux[key], key
        assert mc["nu_full"] == mc["nu_truncated"]
        npt.assert_allclose(mc["nu_full"], 0.45, rtol=0, atol=1e-12)
        assert report.check("augmented set size").passed

    def test_poisson(self):
        report = run_poisson(tiny("poisson", seeds=list(range(10))))
        assert report.passed
        assert report.aggregate["bias_truncated"] < report.aggregate["bias_full"]
        assert abs(report.aggregate["bias_full"]) < 0.01

    def test_poisson_noiseless(self):
        report = run_poisson(tiny("poisson", seeds=[0, 1], noise_sd=0.0))
        assert abs(report.aggregate["bias_full"]) < 1e-12

class TestAssembly:
    def test_report_json_round_trip(self):
        experiment = EXPERIMENTS["poisson"]
        cfg = tiny("poisson", seeds=[0, 1, 2])
        units = [json.loads(json.dumps(timed_unit(experiment, cfg, p))) for p in experiment.units(cfg)]
        report = assemble(experiment, cfg, units)
        again = RunReport.from_json(json.loads(report.dumps()))
        assert again.to_json() == report.to_json()
        assert "curve" not in again.runs[0]
        assert again.config["seeds"] == [0, 1, 2]

    def test_inline_matches_units(self):
        cfg = tiny("microsphere", n_tensors=2)
        report = run_inline(EXPERIMENTS["microsphere"], cfg)
        assert report.experiment == "microsphere"
        assert report.wall_time_s >= 0.0
        assert len(report.runs) == 1
