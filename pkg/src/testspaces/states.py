"""States on test spaces: probability weights summing to one on every test.

Exact rational states are found (or refuted, with a checkable certificate)
by a phase-one simplex over Fractions.  Dispersion-free states are the 0/1
weights; a space is unital/dispersion-free-complete when every outcome gets
weight 1 under some such state.  Density matrices induce float states on
metrically sampled spaces through the quadratic form x -> <Wx, x>.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .core import (
    CapExceededError,
    EventLike,
    TestSpace,
    UnknownOutcomeError,
    ValidationError,
    member_set,
)

DEFAULT_FLOAT_TOL = 1e-9
DEFAULT_DF_CAP = 24  # outcome-count bound for dispersion-free search

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_TOL = 1e-12


@dataclass(frozen=True)
class State:
    """A map outcome id -> weight; exact (Fraction) or float with a tolerance."""

    values: Mapping[str, Fraction] | Mapping[str, float]
    kind: str
    tolerance: float = DEFAULT_FLOAT_TOL

    def __post_init__(self):
        if self.kind not in ("exact", "float"):
            raise ValidationError("state kind must be 'exact' or 'float'")

    @staticmethod
    def exact(values: Mapping[str, int | Fraction]) -> "State":
        return State({x: Fraction(v) for x, v in values.items()}, "exact")

    @staticmethod
    def approx(values: Mapping[str, float], tolerance: float = DEFAULT_FLOAT_TOL) -> "State":
        return State({x: float(v) for x, v in values.items()}, "float", tolerance)

    def __getitem__(self, outcome: str):
        try:
            return self.values[outcome]
        except KeyError:
            raise UnknownOutcomeError(f"state has no value for {outcome!r}") from None


def verify_state(ts: TestSpace, state: State, tol: float | None = None):
    """Check range and per-test sums; returns (ok, worst violation).

    Exact states must hit [0, 1] and per-test sums of one on the nose;
    float states within `tol` (defaulting to the state's own tolerance).
    Every outcome must carry a value.
    """
    worst = Fraction(0) if state.kind == "exact" else 0.0
    for x in ts.outcomes:
        v = state[x]
        if v < 0:
            worst = max(worst, -v)
        elif v > 1:
            worst = max(worst, v - 1)
    for test in ts.tests:
        s = sum(state[x] for x in test)
        worst = max(worst, abs(s - 1))
    if state.kind == "exact":
        return worst == 0, worst
    limit = state.tolerance if tol is None else tol
    return worst <= limit, worst


def extend_to_event(state: State, event: EventLike):
    """The induced weight of an event: the sum over its members."""
    members = member_set(event)
    zero = Fraction(0) if state.kind == "exact" else 0.0
    return sum((state[x] for x in sorted(members)), zero)


def _phase1_simplex(ts: TestSpace):
    """Exact phase-one simplex for {w >= 0, per-test sums = 1}.

    Returns (state_values, None) when feasible, else (None, certificate) where
    the certificate y maps test index -> Fraction and satisfies
    sum(y over tests containing x) <= 0 for every outcome x while
    sum(y) > 0, which refutes feasibility over exact arithmetic.
    """
    outs = ts.outcomes
    n, m = len(outs), len(ts.tests)
    F0, F1 = Fraction(0), Fraction(1)
    cols = n + m  # outcome variables, then one artificial per test
    rows = []
    for i, test in enumerate(ts.tests):
        row = [F1 if outs[j] in test else F0 for j in range(n)]
        row.extend(F1 if k == i else F0 for k in range(m))
        row.append(F1)  # right-hand side
        rows.append(row)
    cost = [F0] * n + [F1] * m
    basis = list(range(n, cols))
    obj = [cost[j] - sum(rows[i][j] for i in range(m)) for j in range(cols)]

    while True:
        # Bland's rule: lowest-index negative reduced cost; anti-cycling.
        enter = next((j for j in range(cols) if obj[j] < 0), None)
        if enter is None:
            break
        best = None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:  # cannot happen: phase-one objective is bounded
            raise AssertionError("unbounded phase-one simplex")
        r = best[1]
        piv = rows[r][enter]
        rows[r] = [v / piv for v in rows[r]]
        for i in range(m):
            if i != r and rows[i][enter] != 0:
                f = rows[i][enter]
                rows[i] = [v - f * w for v, w in zip(rows[i], rows[r])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [v - f * w for v, w in zip(obj, rows[r][:-1])]
            # note: objective value tracked separately below
        basis[r] = enter

    value = sum(cost[basis[i]] * rows[i][-1] for i in range(m))
    if value == 0:
        x = [F0] * cols
        for i in range(m):
            x[basis[i]] = rows[i][-1]
        return {outs[j]: x[j] for j in range(n)}, None
    cert = {i: F1 - obj[n + i] for i in range(m)}
    return None, cert


def find_state(ts: TestSpace) -> State | None:
    """An exact rational state, or None when none exists."""
    values, _cert = _phase1_simplex(ts)
    if values is None:
        return None
    state = State.exact(values)
    ok, worst = verify_state(ts, state)
    if not ok:  # the solver guarantees feasibility; treat failure as a bug
        raise AssertionError(f"solver returned an invalid state (off by {worst})")
    return state


def infeasibility_certificate(ts: TestSpace) -> dict[int, Fraction] | None:
    """The refutation certificate when no state exists, else None."""
    _values, cert = _phase1_simplex(ts)
    if cert is not None and not check_certificate(ts, cert):
        raise AssertionError("solver produced an invalid certificate")
    return cert


def check_certificate(ts: TestSpace, cert: Mapping[int, Fraction]) -> bool:
    """Re-check an infeasibility certificate with exact arithmetic only."""
    y = [Fraction(cert.get(i, 0)) for i in range(len(ts.tests))]
    for x in ts.outcomes:
        if sum(y[i] for i in ts.containing(x)) > 0:
            return False
    return sum(y) > 0


def dispersion_free_states(ts: TestSpace, cap: int = DEFAULT_DF_CAP) -> list[State]:
    """All 0/1 states: exactly one outcome of weight one per test.

    Backtracking over tests, always branching on the currently most
    constrained test; deterministic output order (sorted value tuples).
    """
    if len(ts.outcomes) > cap:
        raise CapExceededError(
            "dispersion-free search over too many outcomes", len(ts.outcomes), cap
        )
    tests = [tuple(sorted(t)) for t in ts.tests]
    value: dict[str, int | None] = {x: None for x in ts.outcomes}
    undecided = set(range(len(tests)))
    solutions: list[dict[str, int]] = []

    def candidates(i: int) -> list[str]:
        out = []
        for x in tests[i]:
            if value[x] == 0:
                continue
            if any(value[y] == 1 for y in tests[i] if y != x):
                continue
            out.append(x)
        return out

    def recurse():
        if not undecided:
            solutions.append({x: value[x] for x in ts.outcomes})
            return
        i = min(undecided, key=lambda t: (len(candidates(t)), t))
        undecided.discard(i)
        for x in candidates(i):
            changed = []
            for y in tests[i]:
                want = 1 if y == x else 0
                if value[y] is None:
                    value[y] = want
                    changed.append(y)
            recurse()
            for y in changed:
                value[y] = None
        undecided.add(i)

    recurse()
    solutions.sort(key=lambda sol: tuple(sol[x] for x in ts.outcomes))
    return [State.exact(sol) for sol in solutions]


def is_udf(ts: TestSpace, cap: int = DEFAULT_DF_CAP) -> tuple[bool, str | None]:
    """Is every outcome assigned weight one by some dispersion-free state?

    Returns (True, None) or (False, first uncovered outcome).
    """
    hit: set[str] = set()
    for st in dispersion_free_states(ts, cap):
        hit.update(x for x in ts.outcomes if st[x] == 1)
    for x in ts.outcomes:
        if x not in hit:
            return False, x
    return True, None


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A positive semidefinite matrix of unit trace (entries may be complex)."""

    entries: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.entries)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValidationError("density matrix must be square")
        object.__setattr__(self, "entries", w)
        if np.abs(w - w.conj().T).max() > HERMITIAN_TOL:
            raise ValidationError("density matrix must be Hermitian")
        if abs(np.trace(w).real - 1.0) > TRACE_TOL or abs(np.trace(w).imag) > TRACE_TOL:
            raise ValidationError("density matrix must have unit trace")
        if np.linalg.eigvalsh(w).min() < -EIGENVALUE_TOL:
            raise ValidationError("density matrix must be positive semidefinite")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @staticmethod
    def maximally_mixed(d: int) -> "DensityMatrix":
        return DensityMatrix(np.eye(d) / d)

    @staticmethod
    def pure(vector) -> "DensityMatrix":
        v = np.asarray(vector, dtype=complex).ravel()
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValidationError("cannot build a pure state from the zero vector")
        v = v / nrm
        return DensityMatrix(np.outer(v, v.conj()))

    @staticmethod
    def random(d: int, rng: np.random.Generator, complex_entries: bool = False) -> "DensityMatrix":
        a = rng.standard_normal((d, d))
        if complex_entries:
            a = a + 1j * rng.standard_normal((d, d))
        w = a @ a.conj().T
        return DensityMatrix(w / np.trace(w).real)


def gleason_state(sample, density: DensityMatrix) -> State:
    """The float state x -> <Wx, x> on a metrically sampled space."""
    if density.dim != sample.dim:
        raise ValidationError(
            f"density matrix dimension {density.dim} != sample dimension {sample.dim}"
        )
    pts = sample.coords
    vals = np.einsum("ij,jk,ik->i", pts, density.entries, pts).real
    return State.approx(dict(zip(sample.ids, vals.tolist())))


def perp_separating(ts: TestSpace, states: Sequence[State]) -> bool:
    """Does the family witness exactly the non-orthogonal outcome pairs?

    For every distinct non-orthogonal pair some state must give the pair a
    total weight above one, and no state may do so for an orthogonal pair.
    """
    from .core import orthogonal

    for x, y in itertools.combinations(ts.outcomes, 2):
        sums = [st[x] + st[y] for st in states]
        if orthogonal(ts, x, y):
            if any(s > 1 for s in sums):
                return False
        else:
            if not any(s > 1 for s in sums):
                return False
    return True


def hidden_variable_state(result, seed: int = 0) -> State:
    """A dispersion-free state on an extracted pairwise-disjoint selection.

    One outcome per selected test is chosen by a seeded generator; because
    the selection is disjoint the choices never conflict.
    """
    if not result.tests:
        raise ValidationError("extraction selected no tests")
    rng = random.Random(seed)
    values: dict[str, Fraction] = {}
    for test in result.tests:
        members = sorted(test)
        pick = members[rng.randrange(len(members))]
        for x in members:
            values[x] = Fraction(1 if x == pick else 0)
    return State.exact(values)
