import numpy as np
import pytest

from finitebath import ModelParams, build_model, build_propagator


def make_params(**overrides) -> ModelParams:
    """Small, fast default model; override fields as needed."""
    base = dict(delta_e=25.0, band_width=0.5, n1=20, n2=20, lam=0.0125, seed_coupling=11)
    base.update(overrides)
    return ModelParams(**base)


def paper_params(**overrides) -> ModelParams:
    base = dict(delta_e=25.0, band_width=0.5, n1=500, n2=500, lam=5e-4, seed_coupling=20603)
    base.update(overrides)
    return ModelParams(**base)


@pytest.fixture(scope="session")
def small_model():
    return build_model(make_params())


@pytest.fixture(scope="session")
def small_propagator(small_model):
    return build_propagator(small_model)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
