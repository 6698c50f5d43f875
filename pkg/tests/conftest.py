from pathlib import Path

import pytest
from hypothesis import settings

from fpdatalog.parser import parse_program

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def fixture_text(name):
    return (FIXTURES / name).read_text()


@pytest.fixture
def i_am_sam():
    return parse_program(fixture_text("i_am_sam.dl"))


@pytest.fixture
def engine():
    return parse_program(fixture_text("engine.dl"))


@pytest.fixture
def flights():
    return parse_program(fixture_text("flights.dl"))


@pytest.fixture
def flights_cmr():
    return parse_program(fixture_text("flights_cmr.dl"))
