import pathlib

import pytest

from magpi import parse

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / f"{name}.magpi").read_text(encoding="utf-8")


def fixture_file(name: str) -> str:
    return str(FIXTURES / f"{name}.magpi")


@pytest.fixture(scope="session")
def ping():
    return parse(fixture_text("ping"))


@pytest.fixture(scope="session")
def dns():
    return parse(fixture_text("dns"))


@pytest.fixture(scope="session")
def leader():
    return parse(fixture_text("leader"))
