import numpy as np
import pytest
from sklearn.base import clone

from trustfilter.estimators import (
    BootstrapParticleFilter,
    IndependentParticleFilter,
    IterativeParticleFilter,
    frames_from_matrix,
    make_filter,
)
from trustfilter.sim import standard_scenario

ALL_CLASSES = [BootstrapParticleFilter, IterativeParticleFilter, IndependentParticleFilter]


@pytest.fixture(scope="module")
def readings():
    return standard_scenario(n_nodes=5, n_steps=30, seed=4).readings_matrix()


@pytest.mark.parametrize("cls", ALL_CLASSES)
def test_get_set_params_roundtrip(cls):
    est = cls(n_particles=17, aging_factor=0.9, random_state=3)
    params = est.get_params()
    assert params["n_particles"] == 17
    assert params["aging_factor"] == 0.9
    est2 = cls().set_params(**params)
    assert est2.get_params() == params


@pytest.mark.parametrize("cls", ALL_CLASSES)
def test_clone_preserves_params(cls):
    est = cls(n_particles=23, random_state=7)
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_ipf_extra_params_exposed():
    est = IterativeParticleFilter(convergence_tol=1e-4, max_sweeps=12)
    params = est.get_params()
    assert params["convergence_tol"] == 1e-4
    assert params["max_sweeps"] == 12


@pytest.mark.parametrize("cls", ALL_CLASSES)
def test_fit_attributes(cls, readings):
    est = cls(random_state=0).fit(readings)
    k, d = readings.shape
    assert est.n_features_in_ == d
    assert est.trust_trajectory_.shape == (k, d)
    assert est.trust_.shape == (d,)
    assert est.n_sweeps_.shape == (k,)
    assert est.converged_.shape == (k,)
    assert ((est.trust_trajectory_ >= 0) & (est.trust_trajectory_ <= 1)).all()


def test_fit_does_not_mutate_params(readings):
    est = IterativeParticleFilter(random_state=5)
    before = est.get_params()
    est.fit(readings)
    assert est.get_params() == before


def test_predict_deterministic_given_seed(readings):
    a = IterativeParticleFilter(random_state=9).predict(readings)
    b = IterativeParticleFilter(random_state=9).fit_predict(readings)
    assert np.array_equal(a, b)


def test_missing_readings_accepted():
    X = np.array([[20.0, 20.1, np.nan], [20.0, np.nan, 19.9], [20.0, 20.2, 19.8]])
    est = IterativeParticleFilter(random_state=1).fit(X)
    assert est.trust_trajectory_.shape == (3, 3)


def test_masked_array_input():
    X = np.ma.masked_array(
        np.full((4, 3), 20.0), mask=[[0, 0, 1], [0, 0, 0], [0, 1, 0], [0, 0, 0]]
    )
    frames = frames_from_matrix(X)
    assert not frames[0].present[2]
    assert not frames[2].present[1]
    assert frames[1].present.all()


@pytest.mark.parametrize("bad", [np.zeros(5), np.zeros((3, 1)), np.full((3, 2), np.inf)])
def test_invalid_inputs_rejected(bad):
    with pytest.raises(ValueError):
        IterativeParticleFilter(random_state=0).fit(bad)


def test_score_is_negative_mse(readings):
    est = IterativeParticleFilter(random_state=2)
    trajectory = est.fit_predict(readings)
    assert est.score(readings, trajectory) == 0.0


def test_make_filter():
    assert isinstance(make_filter("ipf"), IterativeParticleFilter)
    assert isinstance(make_filter("bdmpf", n_particles=5), IndependentParticleFilter)
    assert isinstance(make_filter("bootstrap"), BootstrapParticleFilter)
    with pytest.raises(ValueError):
        make_filter("ukf")


def test_estimator_matches_run_filter(readings):
    # the estimator is a thin wrapper: same seed, same trajectory
    from trustfilter.filters import run_filter, trajectory_matrix
    from trustfilter.model import ModelConfig

    est = IterativeParticleFilter(random_state=31).fit(readings)
    cfg = ModelConfig(n_nodes=readings.shape[1])
    outs = run_filter("ipf", frames_from_matrix(readings), cfg, rng=31)
    assert np.array_equal(est.trust_trajectory_, trajectory_matrix(outs))
