import copy
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from slicekit.catalog import load_catalog
from slicekit.config import load_config
from slicekit.events import EventLog
from slicekit.infra import load_infrastructure
from slicekit.service import Orchestrator

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

settings.register_profile(
    "suite",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def catalog():
    return load_catalog(FIXTURES / "catalog")


@pytest.fixture(scope="session")
def provider_config():
    return load_config(FIXTURES / "config.yaml")


@pytest.fixture(scope="session")
def _infra_master():
    return load_infrastructure(FIXTURES / "infra.yaml")


@pytest.fixture
def infra(_infra_master):
    # reservations mutate in place, hand every test its own copy
    return copy.deepcopy(_infra_master)


@pytest.fixture
def tenants():
    return {"acme", "volt"}


@pytest.fixture
def tokens():
    return {"tok-acme": "acme", "tok-volt": "volt"}


@pytest.fixture
def make_orch(catalog, provider_config, _infra_master, tenants, tmp_path):
    """Factory for orchestrators with isolated infra and event logs."""
    counter = [0]

    def build(log_name=None, infra=None, config=None):
        counter[0] += 1
        name = log_name or f"events-{counter[0]}.jsonl"
        return Orchestrator(
            catalog,
            infra if infra is not None else copy.deepcopy(_infra_master),
            config or provider_config,
            log=EventLog(tmp_path / name),
            tenants=tenants,
        )

    return build


@pytest.fixture
def orch(make_orch):
    return make_orch()
