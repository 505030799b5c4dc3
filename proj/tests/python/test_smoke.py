import math

import numpy as np
import pytest

import tglg


def test_laplacian_path():
    lap = tglg.laplacian(3, [(0, 1), (1, 2)])
    assert lap.shape == (3, 3)
    assert np.allclose(lap, lap.T)
    assert np.allclose(np.diag(lap), 1.0)
    assert lap[0, 1] == pytest.approx(-1 / math.sqrt(2))
    assert lap[0, 2] == 0.0


def test_simulate_simple():
    sim = tglg.simulate(seed=3, n_train=40, n_test=20)
    assert sim["p"] == 33
    assert sim["train"]["x"].shape == (40, 33)
    assert sim["test"]["y"].shape == (20,)
    assert len(sim["true_markers"]) == 12
    assert np.count_nonzero(sim["true_beta"]) == 12


def test_fit_short_chain():
    sim = tglg.simulate(seed=4, n_train=60, n_test=10)
    res = tglg.fit(sim["train"]["x"], sim["train"]["y"], sim["edges"],
                   n_iter=600, burn_in=300, chains=2, seed=9)
    inc = np.asarray(res["inclusion"])
    assert inc.shape == (33,)
    assert np.all((inc >= 0) & (inc <= 1))
    assert len(res["lambda"]) == 600
    assert set(res["acceptance"]) >= {"gamma", "alpha", "lambda"}
    assert "psrf_upper" in res
    again = tglg.fit(sim["train"]["x"], sim["train"]["y"], sim["edges"],
                     n_iter=600, burn_in=300, chains=2, seed=9)
    assert again["inclusion"] == res["inclusion"]
    assert 0.0 <= tglg.auc(res["inclusion"], sim["true_markers"]) <= 1.0


def test_errors_become_value_errors():
    with pytest.raises(ValueError, match="E_"):
        tglg.fit(np.zeros((5, 3)), np.zeros(4), [(0, 1)], n_iter=10, burn_in=5)
    with pytest.raises(ValueError):
        tglg.laplacian(2, [(0, 0)])


def test_psrf_identical_chains():
    x = [float(i % 7) for i in range(100)]
    assert tglg.psrf([x, x]) == pytest.approx(math.sqrt(99 / 100))
