"""Pytest configuration and shared fixtures."""

from collections.abc import Generator

import numpy as np
import pytest
from sqlalchemy.orm import Session

from src.config import settings
from src.database.engine import DatabaseManager
from src.env.scenario import DemandConfig, GraphConfig, ScenarioConfig
from src.policy.config import ModelConfig, TrainConfig


@pytest.fixture(autouse=True)
def debug_numerics(monkeypatch: pytest.MonkeyPatch) -> None:
    """Check every recorded op for NaN/Inf during tests."""
    monkeypatch.setattr(settings, "DEBUG_NUMERICS", True)


@pytest.fixture
def db_manager() -> Generator[DatabaseManager, None, None]:
    """In-memory SQLite registry database."""
    manager = DatabaseManager("sqlite://")
    manager.create_tables()
    yield manager
    manager.close()


@pytest.fixture
def db_session(db_manager: DatabaseManager) -> Generator[Session, None, None]:
    """Create database session for tests."""
    with db_manager.get_session() as session:
        yield session
        session.rollback()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_scenario_cfg() -> ScenarioConfig:
    """2x2 grid, small fleet, short horizon: fast enough for full rollouts."""
    return ScenarioConfig(
        name="tiny",
        graph=GraphConfig(k=2),
        fleet_size=8,
        horizon=4,
        price_per_trip=10.0,
        demand=DemandConfig(pattern="commuter_pulse", base_rate=0.5, skew=0.5),
    )


@pytest.fixture
def oracle_scenario_cfg() -> ScenarioConfig:
    """Three stations in a path, within the exhaustive-search bounds."""
    return ScenarioConfig(
        name="oracle-path",
        graph=GraphConfig(k=None, n=3, edges=[(0, 1), (1, 2)]),
        fleet_size=4,
        horizon=3,
        price_per_trip=5.0,
        demand=DemandConfig(pattern="uniform", base_rate=0.6),
    )


@pytest.fixture
def zero_demand_cfg() -> ScenarioConfig:
    return ScenarioConfig(
        name="idle",
        graph=GraphConfig(k=2),
        fleet_size=8,
        horizon=3,
        demand=DemandConfig(pattern="uniform", base_rate=0.0),
    )


@pytest.fixture
def small_model_cfg() -> ModelConfig:
    return ModelConfig(backbone="gcn", hidden_dim=8, dense_dim=8)


@pytest.fixture
def quick_train_cfg() -> TrainConfig:
    return TrainConfig(episodes=3, checkpoint_every=2)


@pytest.fixture
def skewed_pair_cfg() -> ScenarioConfig:
    """Two stations, most trips leave station 0: vehicles pile up at station 1."""
    return ScenarioConfig(
        name="skewed-pair",
        graph=GraphConfig(k=None, n=2, edges=[(0, 1)]),
        fleet_size=4,
        horizon=10,
        price_per_trip=10.0,
        demand=DemandConfig(pattern="uniform", base_rate=0.5, rate_overrides=[(0, 1, 2.0)]),
    )
