import json
import os
from pathlib import Path

import numpy as np
import pytest

import snn_sim

ROOT = Path(os.environ.get("SNN_SIM_SOURCE_DIR", Path(__file__).resolve().parents[2]))
FIXTURE = ROOT / "tests" / "data" / "mlp_784_128_10.json"
MNIST = ROOT / "data" / "mnist"


def test_ideal_constant_drive():
    spikes = snn_sim.spike_train(snn_sim.IdealIFParams(), np.full(100, 0.25))
    assert spikes.dtype == bool
    assert int(spikes.sum()) == 25


def test_time_domain_saturates_at_headroom():
    p = snn_sim.TimeDomainParams()
    assert snn_sim.max_firing_rate(p) == pytest.approx(50e6)
    spikes = snn_sim.spike_train(p, np.full(1000, 10.0), dt=1e-9)
    assert int(spikes.sum()) == 50


def test_voltage_increment_decreases_with_v():
    p = snn_sim.VoltageDomainParams()
    p.lambda_clm = 2.0
    assert snn_sim.voltage_domain_increment(0.0, 0.4, p) == pytest.approx(p.gain * 0.4)
    assert snn_sim.voltage_domain_increment(0.9, 0.4, p) < snn_sim.voltage_domain_increment(0.1, 0.4, p)


def test_bad_parameters_raise():
    p = snn_sim.VoltageDomainParams()
    p.threshold_voltage = 2.0
    with pytest.raises(snn_sim.ConfigurationError):
        snn_sim.spike_train(p, np.zeros(3))
    with pytest.raises(snn_sim.DataError):
        snn_sim.load_bundle(ROOT / "no_such_bundle.json")


def test_convert_and_evaluate_small_subset():
    bundle = snn_sim.load_bundle(FIXTURE)
    assert bundle.spec.class_count == 10
    assert bundle.spec.layer_kinds() == ["dense", "dense"]
    calib, _ = snn_sim.read_idx(MNIST / "calib-images.idx3.gz")
    converted = snn_sim.convert(bundle, calib)
    assert converted.spec.normalized
    assert len(converted.stats.values) == 2

    images, labels = snn_sim.read_idx(MNIST / "test-images.idx3.gz", MNIST / "test-labels.idx1.gz")
    assert images.shape == (1000, 28, 28)
    scores = snn_sim.ann_forward(bundle.spec, images[0].ravel())
    assert len(scores) == 10

    r = snn_sim.evaluate(converted.spec, images[:50], labels[:50], steps=100)
    assert len(r["error_vs_step"]) == 101
    assert r["error_rate"] <= 0.2
    again = snn_sim.evaluate(converted.spec, images[:50], labels[:50], steps=100)
    assert again["predictions"] == r["predictions"]


def test_energy_anchor_fit():
    fit = snn_sim.fit_two_anchors(3e6, 80 / 3e6 + 5e-6, 0.646e-12, 15e6, 80 / 15e6 + 5e-6, 0.488e-12)
    assert snn_sim.energy_per_neuron(3e6, 80 / 3e6 + 5e-6, 0.0, fit) == pytest.approx(0.646e-12)
    assert snn_sim.power_per_neuron(0.0, fit) == pytest.approx(fit.p_static)


def test_cli_info(tmp_path):
    out = tmp_path / "info.json"
    code, stdout, _ = snn_sim.run_cli(["info", "--bundle", str(FIXTURE), "--output", str(out)])
    assert code == 0
    assert "neurons 138" in stdout
    assert json.loads(out.read_text())["bundle"]["class_count"] == 10
    code, _, _ = snn_sim.run_cli(["evaluate"])
    assert code == 1
