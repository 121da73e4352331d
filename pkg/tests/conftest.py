"""Shared helpers for the test suite.

er_graph deliberately re-implements Erdős–Rényi sampling with a plain
double loop so differential tests do not inherit the library's own
sampling code.
"""
from __future__ import annotations

import numpy as np
import pytest

from ptmatch.graph import Graph, from_edge_list


def er_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    edges = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if rng.random() < p
    ]
    return from_edge_list(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
