import itertools
import sys
import math

import numpy as np
import pytest

from maxfrac import PointCloud, attractor, systems


def brute_hausdorff(A, B):
    """Pure-Python sup-inf over all point pairs."""
    def d(a, b):
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

    def directed(P, Q):
        return max(min(d(p, q) for q in Q) for p in P)

    return max(directed(A, B), directed(B, A))


def brute_diameter(A):
    return max(math.dist(a, b) for a in A for b in A)


def cantor_level_endpoints(n):
    """Both endpoints of the 2^n level-n Cantor intervals, from ternary digits."""
    lefts = [sum(2 * d * 3.0 ** -(k + 1) for k, d in enumerate(digits))
             for digits in itertools.product((0, 1), repeat=n)]
    return sorted(lefts + [a + 3.0 ** -n for a in lefts])


# composition oracles on plain floats, independent of the package's map classes
CANTOR_MAPS = (lambda x: x / 3, lambda x: x / 3 + 2 / 3)
BINARY_MAPS = (lambda x: x / 2, lambda x: x / 2 + 1 / 2)


def word_sum(fs, probs, n, g, x0=0.0):
    """sum over words w of length n of p_w g(f_w(x0)), last letter applied first."""
    total = 0.0
    for w in itertools.product(range(len(fs)), repeat=n):
        x, p = x0, 1.0
        for letter in reversed(w):
            x = fs[letter](x)
            p *= probs[letter]
        total += p * g(x)
    return total


@pytest.fixture(scope="session")
def cantor():
    return systems.cantor()


@pytest.fixture(scope="session")
def binary():
    return systems.binary_uniform()


@pytest.fixture(scope="session")
def swap2():
    return systems.swap_pair(2)


@pytest.fixture(scope="session")
def cantor_cloud(cantor):
    return attractor(cantor, PointCloud([0.0]), 1e-4).cloud


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
