# conftest.py — shared fixtures: seeded random MDP suite and its exact values
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Dict, List, Tuple

import numpy as np
import pytest

from exact_oracle import exact_reachability
from mdp_model import Mdp, random_mdp

SUITE_SEED = 20240521
SUITE_SIZE = 200
QUICK_SIZE = 20


def make_suite(seed: int = SUITE_SEED, size: int = SUITE_SIZE) -> List[Mdp]:
    rng = np.random.default_rng(seed)
    return [random_mdp(rng, max_states=8, max_transitions=3, max_branches=4, max_den=10)
            for _ in range(size)]


@pytest.fixture(scope="session")
def suite() -> List[Mdp]:
    return make_suite()


@pytest.fixture(scope="session")
def quick_suite(suite) -> List[Mdp]:
    return suite[:QUICK_SIZE]


@pytest.fixture(scope="session")
def exact_value(suite) -> Callable[[int, str], Fraction]:
    """Oracle value at the initial state of suite model i, computed once per (i, opt)."""
    cache: Dict[Tuple[int, str], Fraction] = {}

    def value(i: int, opt: str) -> Fraction:
        if (i, opt) not in cache:
            m = suite[i]
            cache[i, opt] = exact_reachability(m, m.goal_states("goal"), opt).value
        return cache[i, opt]

    return value


@pytest.fixture
def coin_text() -> str:
    return (
        "mdp 3 0\n"
        "label goal 1\n"
        "state 0:\n"
        "  1/2 -> 1, 1/2 -> 2\n"
        "state 1:\n"
        "  1/1 -> 1\n"
        "state 2:\n"
        "  1/1 -> 2\n"
    )
