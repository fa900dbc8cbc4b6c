"""Semi-classical test spaces and their extraction from metric samples.

A test space is semi-classical when its tests are pairwise disjoint, so
each outcome belongs to exactly one test.  Such spaces always admit plenty
of dispersion-free states (pick one outcome per test), and their logics are
horizontal sums whose size depends only on the test cardinalities.

The extraction routine walks a family of basic opens of the hyperspace and
greedily selects, per open, the first sampled test lying inside it while
staying a safe margin away from everything selected before.  The selected
tests form a semi-classical subspace of the sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import TestSpace, TspError, ValidationError
from .metric import MetricSample, VietorisBasicOpen, basic_open, pairwise_distances

DEFAULT_MARGIN = 1e-6


class NotSemiclassicalError(TspError):
    """Two tests overlap, so the space is not semi-classical."""

    def __init__(self, outcome: str, first: int, second: int):
        super().__init__(
            f"outcome {outcome!r} belongs to tests {first} and {second}"
        )
        self.outcome = outcome
        self.tests = (first, second)


class DegenerateTestError(ValidationError):
    """A single-outcome test: its outcome is certain and carries no choice."""


def overlapping_tests(ts: TestSpace) -> tuple[str, int, int] | None:
    """First outcome shared by two tests as (outcome, i, j), else None."""
    owner: dict[str, int] = {}
    for i, test in enumerate(ts.tests):
        for x in sorted(test):
            if x in owner:
                return x, owner[x], i
            owner[x] = i
    return None


def is_semiclassical(ts: TestSpace) -> bool:
    return overlapping_tests(ts) is None


def require_semiclassical(ts: TestSpace) -> None:
    witness = overlapping_tests(ts)
    if witness is not None:
        raise NotSemiclassicalError(*witness)


def horizontal_sum_size(ts: TestSpace) -> int:
    """Number of logic elements of a semi-classical space.

    Each test of size k contributes its 2**k - 2 proper nonempty events as
    pairwise inequivalent classes; the empty and full events of all tests
    merge into the shared bottom and top.
    """
    require_semiclassical(ts)
    for i, test in enumerate(ts.tests):
        if len(test) < 2:
            raise DegenerateTestError(
                f"test {i} has a single outcome {sorted(test)}"
            )
    return sum(2 ** len(test) - 2 for test in ts.tests) + 2


def disjoint_tests(space, members) -> list[frozenset[str]]:
    """All tests sharing no outcome id with the given event.

    Works on combinatorial spaces and on metric samples alike; intersection
    always means a shared outcome id.
    """
    event = frozenset(members)
    return [t for t in space.tests if not (t & event)]


@dataclass(frozen=True, eq=False)
class ExtractionResult:
    """Outcome of a greedy semi-classical extraction over a basis of opens."""

    selected: tuple[int, ...]
    open_hits: tuple[int | None, ...]
    coverage_radius: float
    separation: float
    margin: float
    density_target: float | None
    sub_test_space: TestSpace
    sub_sample: MetricSample

    @property
    def tests(self) -> tuple[frozenset[str], ...]:
        return self.sub_test_space.tests

    @property
    def basis_hits(self) -> dict[int, int]:
        return {i: k for i, k in enumerate(self.open_hits) if k is not None}

    @property
    def failures(self) -> list[int]:
        return [i for i, k in enumerate(self.open_hits) if k is None]

    @property
    def hit_fraction(self) -> float:
        if not self.open_hits:
            return 0.0
        hits = sum(1 for h in self.open_hits if h is not None)
        return hits / len(self.open_hits)

    @property
    def coverage_ok(self) -> bool:
        if self.density_target is None:
            return True
        return self.coverage_radius <= self.density_target

    @cached_property
    def summary(self) -> dict[str, float | int]:
        return {
            "opens": len(self.open_hits),
            "selected": len(self.selected),
            "hit_fraction": self.hit_fraction,
            "coverage_radius": self.coverage_radius,
            "separation": self.separation,
        }


def _frame_points(sample: MetricSample) -> np.ndarray:
    """Sample coordinates grouped by test, shape (tests, size, dim)."""
    sizes = {len(t) for t in sample.tests}
    if len(sizes) != 1:
        raise ValidationError("extraction needs tests of one common size")
    return np.stack([sample.points_of(t) for t in sample.tests])


def extract_semiclassical(
    sample: MetricSample,
    basis,
    density_target: float | None = None,
    margin: float = DEFAULT_MARGIN,
) -> ExtractionResult:
    """Greedily select one sampled test inside each basic open.

    Opens are visited in order; the qualifying test of lowest index wins.
    A test qualifies when it is a member of the open and all its points are
    at least `margin` away from every previously selected point, so the
    selection is pairwise disjoint and the subspace is semi-classical even
    when the sampled tests themselves overlap (a shared point sits at
    distance zero, below any margin).  The coverage radius is the largest
    distance from any sampled point to the selected ones; when a density
    target is given the result records whether the target was met.
    """
    if margin <= 0:
        raise ValidationError("margin must be positive")
    basis = tuple(basis)
    if not basis:
        raise ValidationError("basis must contain at least one open")
    pts = _frame_points(sample)
    count, size, dim = pts.shape
    flat = pts.reshape(count * size, dim)
    mindist = np.full(count * size, np.inf)
    selected: list[int] = []
    open_hits: list[int | None] = []
    separation = np.inf
    for open_ in basis:
        if not isinstance(open_, VietorisBasicOpen):
            raise ValidationError("basis entries must be basic opens")
        dist = pairwise_distances(flat, open_.centers).reshape(
            count, size, len(open_.balls)
        )
        inside = dist < open_.radii[None, None, :]
        member = inside.any(axis=2).all(axis=1) & inside.any(axis=1).all(axis=1)
        clearance = mindist.reshape(count, size).min(axis=1)
        ok = member & (clearance >= margin)
        if not ok.any():
            open_hits.append(None)
            continue
        k = int(np.argmax(ok))
        open_hits.append(k)
        selected.append(k)
        separation = min(separation, float(clearance[k]))
        d_new = pairwise_distances(flat, pts[k]).min(axis=1)
        np.minimum(mindist, d_new, out=mindist)
    coverage = float(mindist.max()) if selected else np.inf
    tests = [sample.tests[k] for k in selected]
    outcomes = sorted(set().union(*tests)) if tests else []
    if tests:
        sub_space = TestSpace.build(outcomes, tests)
        sub_coords = np.stack([sample.point(x) for x in sub_space.outcomes])
        sub_sample = MetricSample(
            sub_space.outcomes, sub_coords, sub_space.tests, sample.ortho_tol
        )
    else:
        raise ValidationError("no open admitted a selection; widen the basis")
    return ExtractionResult(
        selected=tuple(selected),
        open_hits=tuple(open_hits),
        coverage_radius=coverage,
        separation=float(separation),
        margin=margin,
        density_target=density_target,
        sub_test_space=sub_space,
        sub_sample=sub_sample,
    )


def _coverage_sweep(pts, flat, mind, chosen, n_new):
    """Advance the farthest-point sweep by n_new anchors, updating mind."""
    count, size, _dim = pts.shape
    anchors = []
    while len(anchors) < n_new:
        owner = int(np.argmax(mind)) // size
        if owner in chosen:  # everything already at distance zero
            owner = min(k for k in range(count) if k not in chosen)
        anchors.append(owner)
        chosen.add(owner)
        np.minimum(
            mind, pairwise_distances(flat, pts[owner]).min(axis=1), out=mind
        )
    return anchors


def _open_radius(delta: float, achieved: float) -> float:
    """Ball radius leaving room for the target after the sweep's residue.

    Any test inside such an open stays within `radius` per point of its
    anchor, so selections cover at `achieved + radius <= delta` whenever
    the sweep got below the target; otherwise a quarter of the target keeps
    the opens meaningful and the shortfall is reported honestly.
    """
    slack = delta - achieved
    return slack if slack > 0 else delta / 4


def auto_basis(sample: MetricSample, n_opens: int, delta: float):
    """Basic opens whose anchors aim to cover the sampled points at `delta`.

    Anchors are sampled tests picked by a farthest-point sweep: starting
    from test 0, each step locates the sampled point farthest from every
    anchor point and promotes its owning test to the next anchor (first
    occurrence on ties, so the sweep is deterministic).  Each anchor
    contributes one open: balls around its points, sized so that any test
    selected inside the open keeps the overall covering radius within the
    target.
    """
    if delta <= 0:
        raise ValidationError("density target must be positive")
    pts = _frame_points(sample)
    count, size, _dim = pts.shape
    if not 1 <= n_opens <= count:
        raise ValidationError(f"need between 1 and {count} opens, got {n_opens}")
    flat = pts.reshape(count * size, -1)
    chosen = {0}
    mind = pairwise_distances(flat, pts[0]).min(axis=1)
    anchors = [0] + _coverage_sweep(pts, flat, mind, chosen, n_opens - 1)
    radius = _open_radius(delta, float(mind.max()))
    return tuple(basic_open(pts[a], radius) for a in anchors)


def extend_basis(sample: MetricSample, basis, n_more: int, delta: float):
    """Continue a basis' farthest-point sweep over a (possibly larger) sample.

    The given opens are kept verbatim as a prefix; the sweep resumes from
    their anchor points, so re-extracting with the grown basis preserves
    the prefix selections when the sample itself grew by appending tests.
    """
    basis = tuple(basis)
    if not basis:
        raise ValidationError("cannot extend an empty basis")
    if n_more < 1:
        raise ValidationError("need at least one additional open")
    if delta <= 0:
        raise ValidationError("density target must be positive")
    pts = _frame_points(sample)
    flat = pts.reshape(len(pts) * pts.shape[1], -1)
    mind = np.full(len(flat), np.inf)
    for open_ in basis:
        np.minimum(
            mind, pairwise_distances(flat, open_.centers).min(axis=1), out=mind
        )
    anchors = _coverage_sweep(pts, flat, mind, set(), n_more)
    radius = _open_radius(delta, float(mind.max()))
    return basis + tuple(basic_open(pts[a], radius) for a in anchors)
