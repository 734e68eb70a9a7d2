"""Shared fixtures: canonical classes, a seeded class suite and an isolated config."""

import json
from pathlib import Path

import pytest

from factories import constant_class
from shtarkov_lab.config.schema import RunConfig
from shtarkov_lab.core.experts import ConstantExpert
from shtarkov_lab.core.hypothesis import (
    ExplicitFiniteClass,
    bernoulli_full_class,
    random_explicit_class,
)
from shtarkov_lab.models.alphabets import ContextAlphabet, Distribution, LabelAlphabet
from shtarkov_lab.services.service_container import ServiceContainer


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """No stray YAML config, budget ceiling or container state between tests."""
    monkeypatch.setenv("CONFIG_PATH", str(tmp_path / "absent.yaml"))
    for name in (
        "SHTARKOV_LAB_BUDGET",
        "SHTARKOV_LAB_HORIZON",
        "SHTARKOV_LAB_SEED",
        "SHTARKOV_LAB_SPEC_PATH",
        "SHTARKOV_LAB_LOG_LEVEL",
    ):
        monkeypatch.delenv(name, raising=False)
    ServiceContainer.reset()
    yield
    ServiceContainer.reset()


@pytest.fixture
def bernoulli():
    return bernoulli_full_class()


@pytest.fixture
def singleton():
    return ExplicitFiniteClass(
        [ConstantExpert(Distribution.of([0.3, 0.7]))], LabelAlphabet(2), ContextAlphabet(1)
    )


@pytest.fixture
def two_point():
    """{f = 0.2, f = 0.8}; its Shtarkov sum at T = 2 is 1.6."""
    return constant_class(0.2, 0.8)


@pytest.fixture(params=range(6))
def seeded_class(request):
    """(class, horizon) over the small shapes |X| <= 2, K <= 3, T <= 3."""
    shapes = [(1, 2, 2), (2, 2, 2), (2, 2, 3), (1, 3, 2), (2, 3, 2), (1, 2, 3)]
    X, K, T = shapes[request.param]
    return random_explicit_class(100 + request.param, 3, K, X, T), T


@pytest.fixture
def config():
    return RunConfig.load()


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document under tmp_path and return its path."""

    def write(name: str, document) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document))
        return path

    return write
