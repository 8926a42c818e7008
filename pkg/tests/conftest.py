import pathlib

import pytest

from tilephase.fileio import parse_tile_system

TILES = pathlib.Path(__file__).resolve().parent.parent / "tiles"


def load_system(name):
    path = TILES / f"{name}.tiles"
    return parse_tile_system(path.read_text(), source=path.name)


@pytest.fixture(scope="session")
def monomino():
    return load_system("monomino")


@pytest.fixture(scope="session")
def diamond():
    return load_system("diamond")


@pytest.fixture(scope="session")
def diamond_octagon():
    return load_system("diamond-octagon")


@pytest.fixture(scope="session")
def z_pentomino():
    return load_system("z-pentomino")


@pytest.fixture(scope="session")
def z_mixture():
    return load_system("z-mixture")
