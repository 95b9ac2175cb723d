import json

import numpy as np
import pytest

import sindy_stcv as sd


def lorenz_data(duration=10.0):
    t, X = sd.simulate("lorenz", duration=duration)
    dX = sd.finite_difference(X, t[1] - t[0])
    theta, labels = sd.polynomial_library(X, 3)
    return t, X, dX, theta, labels


def test_library_columns():
    theta, labels = sd.polynomial_library(np.array([[2.0, 3.0]]), 3)
    assert labels == ["1", "x0", "x1", "x0^2", "x0*x1", "x1^2", "x0^3", "x0^2*x1", "x0*x1^2", "x1^3"]
    assert theta[0, labels.index("x0^2*x1")] == pytest.approx(12.0)


def test_simulate_lorenz_rows():
    t, X = sd.simulate("lorenz")
    assert X.shape == (1001, 3)
    assert t[-1] == pytest.approx(10.0)


def test_stlsq_recovers_lorenz():
    _, _, dX, theta, labels = lorenz_data()
    model = sd.stlsq(theta, dX, 0.5)
    assert model.active_count == 7
    assert model.support[labels.index("x0*x2"), 1]
    assert "x' = " in model.equations(["x", "y", "z"])
    assert json.loads(model.to_json())["fit_meta"]["regressor"] == "stlsq"


def test_stcv_on_normalised_noisy_lorenz():
    t, X = sd.simulate("lorenz")
    noisy = sd.add_noise(X, 0.5, seed=3)
    Xn, scales = sd.normalize(noisy)
    assert np.abs(Xn).max(axis=0) == pytest.approx(np.ones(3))
    dX = sd.finite_difference(Xn, t[1] - t[0])
    theta, _ = sd.polynomial_library(Xn, 3)
    model = sd.stcv(theta, dX, cp=0.1)
    assert model.cp is not None
    assert model.active_count >= 7


def test_esindy_identity_bag_matches_stlsq():
    _, _, dX, theta, _ = lorenz_data(4.0)
    a = sd.stlsq(theta, dX, 0.5)
    b = sd.esindy(theta, dX, 0.5, inclusion=1.0, n_bags=1, bootstrap=False)
    assert np.array_equal(a.support, b.support)


def test_posterior_of_a_mean():
    rng = np.random.default_rng(0)
    y = rng.normal(1.0, 0.2, size=500)
    st = sd.blr_posterior(np.ones((500, 1)), y, gamma=0.0)
    assert st["std"][0] == pytest.approx(y.std(ddof=1) / np.sqrt(500), rel=1e-9)


def test_errors_are_typed():
    with pytest.raises(sd.ConfigError):
        sd.simulate("pendulum")
    with pytest.raises(sd.DataQualityError):
        sd.finite_difference(np.ones((2, 1)), 0.1)
    with pytest.raises(sd.RankDeficiencyError):
        sd.blr_posterior(np.ones((10, 2)), np.ones(10), gamma=0.0)


def test_run_sweep_is_job_independent():
    cfg = json.dumps({
        "system": "lorenz",
        "simulation": {"duration": 3.0},
        "noise_levels": [0.5],
        "realisations": 2,
        "scalings": "both",
        "regressors": ["stlsq", "stcv"],
        "seed": 1,
    })
    a = sd.run_sweep(cfg, jobs=1)
    b = sd.run_sweep(cfg, jobs=2)
    assert a["results_csv"] == b["results_csv"]
    assert len(a["summary"]) == 4
    with pytest.raises(sd.ConfigError):
        sd.run_sweep(json.dumps({"realisation": 3}))
