"""Shared fixtures of the fraktur tests.

Everything runs on desk-scale meshes so that dense linear algebra and the
active set enumeration stay fast.
"""
import numpy as np
import pytest

from fraktur import assembly, energy, fields, mesh, models, pdas


def build_model(n=2, n_steps=3, t_final=1.0, params=None, tagging=None, direction=(1.0, 0.0)):
    grid = models.TimeGrid(t_final=t_final, n_steps=n_steps)
    disc = assembly.Discretization(mesh.build_unit_square_mesh(n, tagging), direction=direction)
    return energy.PhaseFieldModel(disc, params or models.PhysParams(), grid)


def ramp_control(model, amplitude=1.0):
    profile = amplitude * model.grid.times / model.grid.t_final
    return fields.Control(q=np.outer(profile, np.ones(model.n_neumann)))


@pytest.fixture
def make_model():
    return build_model


@pytest.fixture
def make_ramp():
    return ramp_control


@pytest.fixture
def small_model():
    return build_model(n=2, n_steps=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def pull_model():
    return build_model(n=3, n_steps=6)


@pytest.fixture(scope="session")
def pull_solution(pull_model):
    phi0 = np.ones(pull_model.n_scalar)
    return pdas.pdas_forward_solve(pull_model, ramp_control(pull_model), phi0)


@pytest.fixture(scope="session")
def zero_solution(pull_model):
    phi0 = np.ones(pull_model.n_scalar)
    return pdas.pdas_forward_solve(pull_model, pull_model.zero_control(), phi0)
