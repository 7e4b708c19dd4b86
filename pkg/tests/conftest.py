import json
import os

import pytest
from hypothesis import settings

from circlesemi import zoo
from circlesemi.circle import standard_map

settings.register_profile("default", max_examples=40, deadline=None)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def doubling():
    return zoo.doubling()


@pytest.fixture
def folded():
    return zoo.folded()


@pytest.fixture
def plateau():
    return zoo.plateau()


@pytest.fixture
def standard05():
    return standard_map(0.5, 0.0)


@pytest.fixture
def write_spec(tmp_path):
    def write(obj, name="map.json"):
        p = tmp_path / name
        p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(p)
    return write
