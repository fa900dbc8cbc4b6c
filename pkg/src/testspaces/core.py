"""Finite test spaces: outcomes, tests, events, orthogonality.

A test space is a nonempty set of outcome ids together with a covering
family of nonempty tests (the outcome sets of the available experiments).
Two outcomes are orthogonal when they are distinct and share a test.  An
event is any subset of a test; two events are complementary when they are
disjoint and partition a test, and perspective when they are complementary
to a common third event.

Everything here is immutable and deterministic: outcomes are kept in
lexicographic order, tests in input order, and events are ordered by
(size, sorted member tuple).
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

DEFAULT_EVENT_CAP = 1 << 20  # bound on sum of 2**len(test) before enumerating

_TOKEN = re.compile(r"\S+")


class TspError(Exception):
    """Base class for all library errors."""


class ParseError(TspError):
    """Malformed textual input, with 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class ValidationError(TspError):
    """A structural invariant of the input does not hold."""


class UnknownOutcomeError(TspError):
    """An outcome id is not part of the space."""


class CapExceededError(TspError):
    """An exhaustive enumeration would exceed its configured cap."""

    def __init__(self, message: str, needed: int, cap: int):
        super().__init__(f"{message} (needed {needed}, cap {cap})")
        self.needed = needed
        self.cap = cap


@dataclass(frozen=True)
class TestSpace:
    """Outcome ids in lexicographic order plus the covering test family."""

    outcomes: tuple[str, ...]
    tests: tuple[frozenset[str], ...]

    def __post_init__(self):
        if not self.outcomes:
            raise ValidationError("a test space needs at least one outcome")
        if len(set(self.outcomes)) != len(self.outcomes):
            raise ValidationError("duplicate outcome ids")
        if list(self.outcomes) != sorted(self.outcomes):
            raise ValidationError("outcomes must be lexicographically sorted")
        if not self.tests:
            raise ValidationError("a test space needs at least one test")
        known = set(self.outcomes)
        seen: dict[frozenset[str], int] = {}
        for i, test in enumerate(self.tests):
            if not test:
                raise ValidationError(f"test {i} is empty")
            extra = test - known
            if extra:
                raise ValidationError(f"test {i} uses unknown outcomes {sorted(extra)}")
            if test in seen:
                raise ValidationError(f"test {i} duplicates test {seen[test]}")
            seen[test] = i
        covered = set().union(*self.tests)
        if covered != known:
            raise ValidationError(
                f"outcomes not covered by any test: {sorted(known - covered)}"
            )

    @staticmethod
    def build(outcomes: Iterable[str], tests: Iterable[Iterable[str]]) -> "TestSpace":
        return TestSpace(tuple(sorted(outcomes)), tuple(frozenset(t) for t in tests))

    @cached_property
    def _containing(self) -> dict[str, frozenset[int]]:
        idx: dict[str, set[int]] = {x: set() for x in self.outcomes}
        for i, test in enumerate(self.tests):
            for x in test:
                idx[x].add(i)
        return {x: frozenset(s) for x, s in idx.items()}

    @cached_property
    def test_set(self) -> frozenset[frozenset[str]]:
        return frozenset(self.tests)

    @property
    def rank(self) -> int:
        return max(len(t) for t in self.tests)

    def containing(self, outcome: str) -> frozenset[int]:
        """Indices of the tests that contain the given outcome."""
        try:
            return self._containing[outcome]
        except KeyError:
            raise UnknownOutcomeError(f"unknown outcome {outcome!r}") from None


@dataclass(frozen=True)
class Event:
    """A subset of some test, with one witnessing test index."""

    members: frozenset[str]
    witness_test: int


EventLike = Union[Event, Iterable[str]]


def member_set(obj: EventLike) -> frozenset[str]:
    """Normalize an Event or an iterable of outcome ids to a frozenset."""
    if isinstance(obj, Event):
        return obj.members
    if isinstance(obj, str):
        raise TypeError("pass an iterable of outcome ids, not a bare string")
    return frozenset(obj)


def event_key(obj: EventLike) -> tuple[int, tuple[str, ...]]:
    """Deterministic sort key for events: size, then sorted member tuple."""
    m = member_set(obj)
    return (len(m), tuple(sorted(m)))


def is_event(ts: TestSpace, members: EventLike) -> bool:
    m = member_set(members)
    return any(m <= test for test in ts.tests)


def as_event(ts: TestSpace, members: EventLike) -> Event:
    """Wrap a member set as an Event, witnessed by the lowest containing test."""
    m = member_set(members)
    for i, test in enumerate(ts.tests):
        if m <= test:
            return Event(m, i)
    raise ValidationError(f"{sorted(m)} is not a subset of any test")


def orthogonal(ts: TestSpace, x: str, y: str) -> bool:
    """Outcomes are orthogonal iff distinct and contained in a common test."""
    if x == y:
        ts.containing(x)  # still validate the id
        return False
    return bool(ts.containing(x) & ts.containing(y))


def ortho_relation(ts: TestSpace) -> frozenset[tuple[str, str]]:
    """All orthogonal outcome pairs, each as a sorted 2-tuple."""
    pairs = set()
    for test in ts.tests:
        for x, y in itertools.combinations(sorted(test), 2):
            pairs.add((x, y))
    return frozenset(pairs)


def enumerate_events(ts: TestSpace, cap: int = DEFAULT_EVENT_CAP) -> list[Event]:
    """All events (subsets of tests), deduplicated, in deterministic order.

    The pre-enumeration work bound is sum(2**len(test)); if it exceeds
    `cap` a CapExceededError is raised before any enumeration happens.
    """
    needed = sum(2 ** len(test) for test in ts.tests)
    if needed > cap:
        raise CapExceededError("event enumeration too large", needed, cap)
    seen: dict[frozenset[str], int] = {}
    for i, test in enumerate(ts.tests):
        members = sorted(test)
        for r in range(len(members) + 1):
            for combo in itertools.combinations(members, r):
                seen.setdefault(frozenset(combo), i)
    return [
        Event(m, w)
        for m, w in sorted(seen.items(), key=lambda kv: event_key(kv[0]))
    ]


def complementary(ts: TestSpace, a: EventLike, b: EventLike) -> bool:
    """True iff the two events are disjoint and their union is a test."""
    ma, mb = member_set(a), member_set(b)
    return ma.isdisjoint(mb) and (ma | mb) in ts.test_set


def orthogonal_events(ts: TestSpace, a: EventLike, b: EventLike) -> bool:
    """True iff the two events are disjoint and their union is again an event."""
    ma, mb = member_set(a), member_set(b)
    return ma.isdisjoint(mb) and is_event(ts, ma | mb)


def complements_of(ts: TestSpace, a: EventLike) -> frozenset[frozenset[str]]:
    """All events complementary to `a`: the test remainders over tests containing it."""
    m = member_set(a)
    return frozenset(test - m for test in ts.tests if m <= test)


def perspective(ts: TestSpace, a: EventLike, b: EventLike) -> bool:
    """True iff the two events are complementary to a common third event."""
    return bool(complements_of(ts, a) & complements_of(ts, b))


def redundant_test_pairs(ts: TestSpace) -> tuple[tuple[int, int], ...]:
    """Diagnostic: pairs (i, j) where test i is a proper subset of test j."""
    out = []
    for i, j in itertools.permutations(range(len(ts.tests)), 2):
        if ts.tests[i] < ts.tests[j]:
            out.append((i, j))
    return tuple(sorted(out))


def load_test_space(text: str) -> TestSpace:
    """Parse test-space text: one `outcomes` line, then one `test` line per test.

    `#` starts a comment anywhere; blank lines are ignored.  Errors carry
    1-based line/column positions.
    """
    outcomes: list[str] | None = None
    tests: list[frozenset[str]] = []
    test_lines: dict[frozenset[str], int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(content)]
        if not toks:
            continue
        key, col = toks[0]
        if key == "outcomes":
            if outcomes is not None:
                raise ParseError("second outcomes line", lineno, col)
            if len(toks) == 1:
                raise ParseError("outcomes line lists no ids", lineno, col)
            outcomes = []
            for tok, tcol in toks[1:]:
                if tok in outcomes:
                    raise ParseError(f"duplicate outcome id {tok!r}", lineno, tcol)
                outcomes.append(tok)
        elif key == "test":
            if outcomes is None:
                raise ParseError("test line before outcomes line", lineno, col)
            if len(toks) == 1:
                raise ParseError("empty test", lineno, col)
            members: list[str] = []
            for tok, tcol in toks[1:]:
                if tok not in outcomes:
                    raise ParseError(f"unknown outcome id {tok!r}", lineno, tcol)
                if tok in members:
                    raise ParseError(
                        f"outcome id {tok!r} repeated within a test", lineno, tcol
                    )
                members.append(tok)
            fs = frozenset(members)
            if fs in test_lines:
                raise ParseError(
                    f"duplicate test (same outcome set as line {test_lines[fs]})",
                    lineno,
                    col,
                )
            test_lines[fs] = lineno
            tests.append(fs)
        else:
            raise ParseError(f"unknown directive {key!r}", lineno, col)
    if outcomes is None:
        raise ParseError("missing outcomes line", 1, 1)
    if not tests:
        raise ParseError("no test lines", 1, 1)
    return TestSpace.build(outcomes, tests)


def dump_test_space(ts: TestSpace, header: str | None = None) -> str:
    """Serialize a test space back to its textual form (deterministic)."""
    lines = []
    if header:
        for h in header.splitlines():
            lines.append(f"# {h}")
    lines.append("outcomes " + " ".join(ts.outcomes))
    for test in ts.tests:
        lines.append("test " + " ".join(sorted(test)))
    return "\n".join(lines) + "\n"
