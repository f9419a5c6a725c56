"""Shared fixtures: canonical connections and scene paths."""

import pathlib

import pytest

from connexion import SpherePoint, build_connection

SCENES = pathlib.Path(__file__).resolve().parents[1] / "scenes"


@pytest.fixture
def scenes_dir() -> pathlib.Path:
    return SCENES


@pytest.fixture
def circle_conn():
    """Residue -1 at 0 and at infinity: geodesics are log-spirals and circles."""
    return build_connection([(SpherePoint.of(0.0), -1.0),
                             (SpherePoint.inf(), -1.0)])


@pytest.fixture
def trivial_conn():
    """Only the forced pole at infinity: the flat plane, straight geodesics."""
    return build_connection([(SpherePoint.inf(), -2.0)])


def single_pole(rho: float):
    """One finite pole of residue rho at the origin (rest at infinity)."""
    return build_connection([(SpherePoint.of(0.0), rho)])
