"""Canonical corpus instances plus seeded random space generators."""

from __future__ import annotations

import random
import re

from .core import TestSpace, ValidationError

_CLASSICAL = re.compile(r"classical-(\d+)$")

_FIXED = {
    "two-disjoint": (
        "# two-disjoint\n"
        "outcomes a b c d\n"
        "test a b\n"
        "test c d\n"
    ),
    "glued-pair": (
        "# glued-pair\n"
        "outcomes a b c d e\n"
        "test a b c\n"
        "test c d e\n"
    ),
    "triangle": (
        "# triangle\n"
        "outcomes a b c x y z\n"
        "test a x b\n"
        "test b y c\n"
        "test c z a\n"
    ),
    "mo2": (
        "# mo2\n"
        "outcomes a a' b b'\n"
        "test a a'\n"
        "test b b'\n"
    ),
    # Five pairwise near-disjoint blocks (any two share at most one outcome)
    # with no probability weight at all: the three 2-tests force a total mass
    # of 3 while the two 3-tests force a total mass of 2.
    "stateless": (
        "# stateless\n"
        "outcomes u1 u2 u3 u4 u5 u6\n"
        "test u1 u2\n"
        "test u3 u4\n"
        "test u5 u6\n"
        "test u1 u3 u5\n"
        "test u2 u4 u6\n"
    ),
}

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def names() -> list[str]:
    """Generator names accepted by gen(); classical-N is a pattern."""
    return ["classical-N"] + sorted(_FIXED)


def gen(name: str) -> str:
    """Return the canonical text of a named corpus instance (byte stable)."""
    m = _CLASSICAL.match(name)
    if m:
        n = int(m.group(1))
        if not 1 <= n <= 26:
            raise ValidationError("classical-N supports 1 <= N <= 26")
        ids = " ".join(_LETTERS[:n])
        return f"# {name}\noutcomes {ids}\ntest {ids}\n"
    try:
        return _FIXED[name]
    except KeyError:
        raise ValidationError(
            f"unknown corpus name {name!r}; expected one of {names()}"
        ) from None


def random_test_space(
    rng: random.Random,
    max_universe: int = 10,
    max_tests: int = 4,
    min_size: int = 2,
    max_size: int = 5,
) -> TestSpace:
    """A small random test space whose outcome set is the union of its tests."""
    u = rng.randint(max(3, min_size), max_universe)
    ids = [f"o{i}" for i in range(u)]
    k = rng.randint(1, max_tests)
    tests: list[frozenset[str]] = []
    seen: set[frozenset[str]] = set()
    for _ in range(k):
        size = rng.randint(min_size, min(max_size, u))
        t = frozenset(rng.sample(ids, size))
        if t not in seen:
            seen.add(t)
            tests.append(t)
    used = sorted(set().union(*tests))
    return TestSpace.build(used, tests)


def random_semiclassical(
    rng: random.Random,
    max_tests: int = 4,
    min_size: int = 2,
    max_size: int = 5,
) -> TestSpace:
    """A random space with pairwise disjoint tests of size min_size..max_size."""
    k = rng.randint(1, max_tests)
    tests = []
    counter = 0
    for _ in range(k):
        size = rng.randint(min_size, max_size)
        tests.append(frozenset(f"o{counter + i}" for i in range(size)))
        counter += size
    outcomes = sorted(set().union(*tests))
    return TestSpace.build(outcomes, tests)
