"""Shared fixtures: a small simulated economy and its spell panel."""

import pytest

from src.models.study import StudyWindow
from src.services.config_manager import default_sim_config
from src.services.paneldata import SpellPanel
from src.services.synthpanel import simulate_panel
from src.services.task_classifier import classify_occupations

SMALL = dict(n_border=40, n_control=80, n_districts=12, workers_per_muni=40)


@pytest.fixture(scope='session')
def small_config():
    """Fast configuration with enough districts for clustered inference."""
    return default_sim_config(seed=3, **SMALL)


@pytest.fixture(scope='session')
def small_simulation(small_config):
    return simulate_panel(small_config)


@pytest.fixture(scope='session')
def small_panel(small_simulation):
    """Simulated panel with the occupation classification of its task survey."""
    return SpellPanel(
        spells=small_simulation.spells,
        municipalities=small_simulation.municipalities,
        occupations=classify_occupations(small_simulation.tasks).frame,
    )


@pytest.fixture
def window():
    return StudyWindow(base_year=1990, end_year=1993, shock_year=1992, early_year=1991)
