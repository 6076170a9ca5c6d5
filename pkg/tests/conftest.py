import pathlib

import pytest

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> pathlib.Path:
    return FIXTURES


@pytest.fixture(scope="session")
def run_config_path(fixtures_dir) -> pathlib.Path:
    return fixtures_dir / "run_config.json"


@pytest.fixture(scope="session")
def small_taxonomy(fixtures_dir):
    from emitree.taxonomy import parse_taxonomy

    return parse_taxonomy(fixtures_dir / "taxonomy_small.jsonl")
