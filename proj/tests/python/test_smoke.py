import math

import numpy as np
import pytest

import maglab


def test_experiment_list():
    names = maglab.experiments()
    assert "orbit" in names
    assert "cohomology-theorem-a" in names
    for name in names:
        assert maglab.default_config(name)["surface"]


def test_constant_curvature_and_area():
    x = np.linspace(-0.3, 0.3, 7)
    K = maglab.curvature("constant", x, np.zeros_like(x))
    assert np.allclose(K, -1.0, atol=1e-10)
    assert maglab.area("constant") == pytest.approx(4 * math.pi, rel=1e-8)


def test_orbit_samples():
    states = maglab.orbit("constant", 0.5, [0.0, 0.0, 0.0], 1.0, dt=1e-2)
    assert states.shape == (101, 4)
    assert states[-1, 0] == pytest.approx(1.0)
    assert np.all(states[:, 1] ** 2 + states[:, 2] ** 2 < 1.0)


def test_run_orbit(tmp_path):
    report = maglab.run("orbit", {"T": 2.0, "liouville_time": 1.0}, out=tmp_path)
    assert report["pass"] is True
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "orbit.csv").exists()


def test_refusal_names_hypothesis():
    with pytest.raises(maglab.HypothesisViolation) as err:
        maglab.check_hypotheses("cohomology-theorem-a", {"lambda": 0.8})
    assert err.value.hypothesis == "2 lambda^2 + K(x) < 0 for all x in M"


def test_unknown_field_is_rejected():
    with pytest.raises(maglab.DomainError):
        maglab.default_config("nope")
    with pytest.raises(maglab.DomainError):
        maglab.run("orbit", {"lambdaa": 0.1})
