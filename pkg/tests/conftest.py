import numpy as np
import pytest

from app import create_app
from app.models import DrudeParams, LifshitzSettings, OscillatorGeometry, PermittivitySpec
from app.physics.lifshitz import free_energy_per_area
from app.physics.optics import lorentz_drude_table

GOLD_DRUDE = DrudeParams(omega_p=7.54, gamma=0.051)


@pytest.fixture
def app():
    app = create_app('testing')
    yield app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture(scope='session')
def gold_table():
    """Synthetic gold Im eps from 0.1 to 100 eV"""
    return lorentz_drude_table(np.logspace(-1, 2, 300), GOLD_DRUDE)


@pytest.fixture
def geometry():
    return OscillatorGeometry(sphere_radius=150e-6, resonance_frequency=1.0e5, spring_constant=10.0, a_rms=2e-9)


@pytest.fixture(scope='session')
def ideal_plate():
    """Near-ideal metal at 1 K and 100 nm; the Matsubara sum needs ~4e4 terms"""
    spec = PermittivitySpec('PurePlasma', DrudeParams(omega_p=1.0e4, gamma=0.0))
    settings = LifshitzSettings(temperature=1.0, l_cap=100000, k_quad_tolerance=1e-5)
    return free_energy_per_area(100e-9, spec, settings)
