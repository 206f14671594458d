from __future__ import annotations

import math

import numpy as np
import pytest

from regvec.core.config import DEFAULT_TOLERANCES, Tolerances
from regvec.core.geom_core import basis_vector
from regvec.core.lip_calculus import Hypersurface, LipFn
from regvec.core.pl_complex import PLSet
from regvec.core.scene import generate


class Bumps(LipFn):
    """Два горба высоты h над (−1.5, −0.5) и (0.5, 1.5); 1-липшицева."""

    domain_dim = 1
    lipschitz = 1.0

    def __init__(self, height: float = 0.5) -> None:
        self.height = height

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        x = points[:, 0]
        return np.maximum(0.0, self.height - np.abs(np.abs(x) - 1.0))


def scene_set(kind: str, **params: object) -> PLSet:
    return generate(kind, **params).to_plset()


@pytest.fixture
def tol() -> Tolerances:
    return DEFAULT_TOLERANCES


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1729)


@pytest.fixture
def segment() -> PLSet:
    return scene_set("segment")


@pytest.fixture
def hline() -> PLSet:
    return scene_set("hline")


@pytest.fixture
def square() -> PLSet:
    return scene_set("square")


@pytest.fixture
def vgraph() -> PLSet:
    return scene_set("vgraph")


@pytest.fixture
def polygon():
    def make(sides: int) -> PLSet:
        return scene_set("polygon", sides=sides)

    return make


@pytest.fixture
def flat_e2():
    """Горизонтальная прямая y = level как график для e_2."""

    def make(level: float = 0.0) -> Hypersurface:
        return Hypersurface.flat(basis_vector(2), level)

    return make


@pytest.fixture
def tilted() -> np.ndarray:
    """Единичный вектор под углом 20° к e_2."""
    a = math.radians(20.0)
    return np.array([math.sin(a), math.cos(a)])
