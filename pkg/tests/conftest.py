from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
SCENARIO = sorted((FIXTURES / "scenario").iterdir())
CORPUS = SCENARIO + sorted((FIXTURES / "corpus").iterdir())
GOLDEN = Path(__file__).parent / "golden" / "scenario"


@pytest.fixture
def scenario_paths():
    return [str(p) for p in SCENARIO]


@pytest.fixture
def corpus_paths():
    return [str(p) for p in CORPUS]
