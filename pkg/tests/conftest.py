from pathlib import Path

import pytest

from modof.chem import parse_smiles
from modof.pairgen.fixtures import fixture_vocabulary, planted_single_edits

DATA = Path(__file__).parent / "data"


def read_smiles(name):
    return [line.split()[0] for line in (DATA / name).read_text().splitlines() if line.strip()]


@pytest.fixture(scope="session")
def corpus200():
    return read_smiles("corpus200.smi")


@pytest.fixture(scope="session")
def corpus100():
    return read_smiles("corpus100.smi")


@pytest.fixture(scope="session")
def mols100(corpus100):
    return [parse_smiles(s) for s in corpus100]


@pytest.fixture(scope="session")
def vocab():
    return fixture_vocabulary()


@pytest.fixture(scope="session")
def planted20():
    return planted_single_edits(20, seed=3)
