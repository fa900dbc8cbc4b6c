"""Metrically sampled test spaces on the unit sphere, and hyperspace checks.

A metric sample pins each outcome to a unit vector so that the members of
every test are pairwise orthogonal within a small angular tolerance.  Finite
collections of outcome points are compared through the Hausdorff distance
and the matching (bottleneck bijection) distance, and membership in basic
opens of the hyperspace topology is decided against finite unions of balls.

All distances are chordal (Euclidean in the ambient space).
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import (
    ParseError,
    TestSpace,
    TspError,
    UnknownOutcomeError,
    ValidationError,
)

DEFAULT_ORTHO_TOL = 1e-9  # angular tolerance (radians) for test orthogonality
UNIT_NORM_TOL = 1e-12
EXHAUSTIVE_MATCH_LIMIT = 8  # brute-force bijections up to this cardinality

_TOKEN = re.compile(r"\S+")


class ConvergenceError(TspError):
    """A frame sequence does not reach its declared limit within tolerance."""


class NotTotallyNonOrthogonalError(TspError):
    """A covering cap contains an orthogonal pair, so it cannot bound rank."""

    def __init__(self, center: str, pair: tuple[str, str]):
        super().__init__(
            f"cap around {center!r} contains the orthogonal pair {pair!r}"
        )
        self.center = center
        self.pair = pair


def check_sample_invariants(ids, coords, tests, ortho_tol):
    """Invariant battery for sampled spaces; list of (name, ok, detail) rows."""
    rows = []
    n, d = coords.shape if coords.ndim == 2 else (0, 0)
    rows.append(("shape", coords.ndim == 2 and n == len(ids) and d >= 2,
                 f"{len(ids)} ids, coords {coords.shape}"))
    if not rows[-1][1]:
        return rows
    rows.append(("distinct-ids", len(set(ids)) == len(ids), f"{len(ids)} ids"))
    norms = np.linalg.norm(coords, axis=1)
    dev = float(np.abs(norms - 1.0).max()) if n else 0.0
    rows.append(("unit-norm", dev <= UNIT_NORM_TOL, f"max deviation {dev:.3e}"))
    index = {x: i for i, x in enumerate(ids)}
    known = all(x in index for t in tests for x in t)
    rows.append(("test-ids-known", known, ""))
    if not known:
        return rows
    rows.append(("tests-nonempty", bool(tests) and all(tests), f"{len(tests)} tests"))
    rows.append(("test-size", all(len(t) <= d for t in tests),
                 f"max {max((len(t) for t in tests), default=0)} <= dim {d}"))
    dup = len(set(tests)) != len(tests)
    rows.append(("tests-distinct", not dup, ""))
    covered = set().union(*tests) if tests else set()
    rows.append(("covering", covered == set(ids),
                 f"{len(set(ids) - covered)} uncovered"))
    thr = math.sin(ortho_tol)
    worst = 0.0
    for t in tests:
        rowsel = coords[[index[x] for x in sorted(t)]]
        g = rowsel @ rowsel.T
        if len(rowsel) > 1:
            off = np.abs(g[~np.eye(len(rowsel), dtype=bool)]).max()
            worst = max(worst, float(off))
    rows.append(("in-test-orthogonality", worst <= thr,
                 f"max |inner| {worst:.3e} vs {thr:.3e}"))
    return rows


@dataclass(frozen=True, eq=False)
class MetricSample:
    """Outcome ids with unit-vector coordinates and near-orthogonal tests."""

    ids: tuple[str, ...]
    coords: np.ndarray
    tests: tuple[frozenset[str], ...]
    ortho_tol: float = DEFAULT_ORTHO_TOL

    def __post_init__(self):
        object.__setattr__(self, "coords", np.ascontiguousarray(self.coords, dtype=float))
        for name, ok, detail in check_sample_invariants(
            self.ids, self.coords, self.tests, self.ortho_tol
        ):
            if not ok:
                raise ValidationError(f"sample invariant {name} fails: {detail}")

    @cached_property
    def _index(self) -> dict[str, int]:
        return {x: i for i, x in enumerate(self.ids)}

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def index_of(self, outcome: str) -> int:
        try:
            return self._index[outcome]
        except KeyError:
            raise UnknownOutcomeError(f"unknown outcome {outcome!r}") from None

    def point(self, outcome: str) -> np.ndarray:
        return self.coords[self.index_of(outcome)]

    def points_of(self, members) -> np.ndarray:
        return self.coords[[self.index_of(x) for x in sorted(members)]]

    def distance(self, x: str, y: str) -> float:
        return float(np.linalg.norm(self.point(x) - self.point(y)))

    def orthogonal(self, x: str, y: str) -> bool:
        """Geometric orthogonality within the sample's angular tolerance."""
        if x == y:
            self.index_of(x)
            return False
        inner = float(self.point(x) @ self.point(y))
        return abs(inner) <= math.sin(self.ortho_tol)

    @cached_property
    def orthogonal_pair_indices(self) -> np.ndarray:
        """All index pairs (i < j) of orthogonal sampled outcomes, blocked."""
        thr = math.sin(self.ortho_tol)
        n = len(self.ids)
        block = max(1, int(2e7) // max(n, 1))
        chunks = []
        for s in range(0, n, block):
            g = self.coords[s : s + block] @ self.coords.T
            ii, jj = np.nonzero(np.abs(g) <= thr)
            ii = ii + s
            keep = ii < jj
            if keep.any():
                chunks.append(np.stack([ii[keep], jj[keep]], axis=1))
        if not chunks:
            return np.empty((0, 2), dtype=int)
        return np.concatenate(chunks)

    def to_test_space(self) -> TestSpace:
        return TestSpace.build(self.ids, self.tests)


@dataclass(frozen=True, eq=False)
class VietorisBasicOpen:
    """A basic open of the hyperspace: finite sets covered by the ball union
    and meeting every ball."""

    balls: tuple[tuple[np.ndarray, float], ...]

    def __post_init__(self):
        if not self.balls:
            raise ValidationError("a basic open needs at least one ball")
        dims = {np.asarray(c).shape for c, _ in self.balls}
        if len(dims) != 1:
            raise ValidationError("ball centers must share a dimension")
        if any(r <= 0 for _, r in self.balls):
            raise ValidationError("ball radii must be positive")
        object.__setattr__(
            self,
            "balls",
            tuple((np.asarray(c, dtype=float), float(r)) for c, r in self.balls),
        )

    @cached_property
    def centers(self) -> np.ndarray:
        return np.stack([c for c, _ in self.balls])

    @cached_property
    def radii(self) -> np.ndarray:
        return np.array([r for _, r in self.balls])


def basic_open(centers, radius: float) -> VietorisBasicOpen:
    """Convenience constructor: one shared radius around each center."""
    pts = np.atleast_2d(np.asarray(centers, dtype=float))
    return VietorisBasicOpen(tuple((c, radius) for c in pts))


# Above this size the distance matrix is built by the Gram-expansion trick,
# which trades ~1e-8 absolute accuracy near zero for an O(nm) matmul.
_EXACT_DISTANCE_ELEMENTS = 1 << 21


def pairwise_distances(a, b) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] * b.shape[0] * a.shape[1] <= _EXACT_DISTANCE_ELEMENTS:
        return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    d2 = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.sqrt(np.clip(d2, 0.0, None))


def vietoris_member(points, open_: VietorisBasicOpen) -> bool:
    """Is the finite point set inside the ball union and meeting every ball?

    Balls are open: a point exactly on a boundary sphere does not count.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return False
    dist = pairwise_distances(pts, open_.centers)
    inside = dist < open_.radii[None, :]
    return bool(inside.any(axis=1).all() and inside.any(axis=0).all())


def hausdorff_distance(a, b) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValidationError("hausdorff distance needs nonempty point sets")
    dist = pairwise_distances(a, b)
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def _bottleneck(dist: np.ndarray, exhaustive_limit: int = EXHAUSTIVE_MATCH_LIMIT) -> float:
    n = dist.shape[0]
    if n <= exhaustive_limit:
        best = math.inf
        for perm in itertools.permutations(range(n)):
            worst = 0.0
            for i, j in enumerate(perm):
                v = dist[i, j]
                if v > worst:
                    worst = v
                    if worst >= best:
                        break
            else:
                best = worst
        return best
    # Threshold search: the smallest distance value admitting a perfect
    # matching in the bipartite graph of pairs within threshold.
    values = np.unique(dist)

    def feasible(t: float) -> bool:
        adj = dist <= t
        match = [-1] * n

        def augment(u: int, seen) -> bool:
            for v in range(n):
                if adj[u, v] and not seen[v]:
                    seen[v] = True
                    if match[v] == -1 or augment(match[v], seen):
                        match[v] = u
                        return True
            return False

        return all(augment(u, [False] * n) for u in range(n))

    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(float(values[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(values[lo])


def matching_distance(a, b, exhaustive_limit: int | None = None) -> float:
    """Minimum over bijections of the largest paired distance (bottleneck)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] != b.shape[0]:
        raise ValidationError(
            f"matching distance needs equal cardinalities, got {a.shape[0]} and {b.shape[0]}"
        )
    dist = pairwise_distances(a, b)
    limit = EXHAUSTIVE_MATCH_LIMIT if exhaustive_limit is None else exhaustive_limit
    return float(_bottleneck(dist, limit))


def tno_radius(sample: MetricSample, outcome: str) -> float:
    """Largest ball radius around the outcome containing no orthogonal pair.

    Computed as the minimum over sampled orthogonal pairs of the farther
    endpoint's distance; infinity when the sample has no orthogonal pair.
    """
    i = sample.index_of(outcome)
    pairs = sample.orthogonal_pair_indices
    if len(pairs) == 0:
        return math.inf
    dx = np.linalg.norm(sample.coords - sample.coords[i], axis=1)
    far = np.maximum(dx[pairs[:, 0]], dx[pairs[:, 1]])
    return float(far.min())


def rank_bound(sample: MetricSample, cap_radius: float) -> int:
    """Bound test cardinalities by a greedy cover with small caps.

    Covers the sampled points with open balls of the given radius centered
    on sample points (first uncovered point becomes the next center).  Every
    cap is then validated to contain no orthogonal pair; since a pairwise
    orthogonal set meets each such cap at most once, the number of caps
    bounds the size of every pairwise orthogonal subset.
    """
    if cap_radius <= 0:
        raise ValidationError("cap radius must be positive")
    pts = sample.coords
    n = len(sample.ids)
    covered = np.zeros(n, dtype=bool)
    centers: list[int] = []
    while not covered.all():
        c = int(np.argmax(~covered))
        centers.append(c)
        covered |= np.linalg.norm(pts - pts[c], axis=1) < cap_radius
    thr = math.sin(sample.ortho_tol)
    for c in centers:
        idx = np.flatnonzero(np.linalg.norm(pts - pts[c], axis=1) < cap_radius)
        sub = pts[idx]
        block = 2048
        for s in range(0, len(idx), block):
            g = sub[s : s + block] @ sub.T
            ii, jj = np.nonzero(np.abs(g) <= thr)
            ii = ii + s
            bad = ii < jj
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                pair = (sample.ids[idx[ii[k]]], sample.ids[idx[jj[k]]])
                raise NotTotallyNonOrthogonalError(sample.ids[c], pair)
    return len(centers)


def _separation(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return math.inf
    dist = pairwise_distances(pts, pts)
    return float(dist[~np.eye(len(pts), dtype=bool)].min())


def event_cardinality_locally_constant(sample: MetricSample, a, b) -> bool:
    """Nearby events of well-separated points must pair up one to one.

    When the Hausdorff distance is below half the smaller internal
    separation, the check requires equal cardinalities and exact agreement
    of matching and Hausdorff distances; otherwise it holds vacuously.
    """
    ma, mb = frozenset(a), frozenset(b)
    for m in (ma, mb):
        if not any(m <= t for t in sample.tests):
            raise ValidationError(f"{sorted(m)} is not an event of the sample")
    pa, pb = sample.points_of(ma), sample.points_of(mb)
    dist = pairwise_distances(pa, pb)
    d_h = max(dist.min(axis=1).max(), dist.min(axis=0).max())
    guard = 0.5 * min(_separation(pa), _separation(pb))
    if not d_h < guard:
        return True
    if len(ma) != len(mb):
        return False
    return _bottleneck(dist) == d_h


MAX_FRAME_COUNT = 10**6  # keeps generated ids at a fixed width


def sample_frames(d: int, count: int, seed: int) -> MetricSample:
    """Seeded orthonormal frames: rotations applied to the standard basis.

    Draws one Gaussian matrix per frame from a single generator (so a longer
    run extends a shorter one with the same seed), orthonormalizes by QR
    with the usual sign fix, and flips one column where needed to land in
    the rotation group.  Frame k contributes outcomes f<k>.0 .. f<k>.(d-1).
    """
    if d < 2:
        raise ValidationError("frame dimension must be at least 2")
    if not 1 <= count <= MAX_FRAME_COUNT:
        raise ValidationError(f"frame count must be in 1..{MAX_FRAME_COUNT}")
    rng = np.random.default_rng(seed)
    mats = rng.standard_normal((count, d, d))
    q, r = np.linalg.qr(mats)
    diag = np.einsum("kii->ki", r)
    q = q * np.where(diag < 0, -1.0, 1.0)[:, None, :]
    dets = np.linalg.det(q)
    q[dets < 0, :, -1] *= -1.0
    pts = np.transpose(q, (0, 2, 1)).reshape(count * d, d)
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    width = len(str(MAX_FRAME_COUNT - 1))
    ids = tuple(
        f"f{k:0{width}d}.{i}" for k in range(count) for i in range(d)
    )
    tests = tuple(
        frozenset(ids[k * d : (k + 1) * d]) for k in range(count)
    )
    return MetricSample(ids, pts, tests)


def closure_check(
    frames,
    limit,
    tol: float = 1e-9,
    ortho_tol: float = DEFAULT_ORTHO_TOL,
) -> bool:
    """Validate the limit of a convergent frame sequence.

    Raises ConvergenceError when the tail frame is farther than `tol` from
    the limit.  Returns True iff the limit is pairwise orthogonal within
    `ortho_tol` and keeps the tail cardinality.
    """
    seqs = [np.atleast_2d(np.asarray(f, dtype=float)) for f in frames]
    if not seqs:
        raise ValidationError("empty frame sequence")
    lim = np.atleast_2d(np.asarray(limit, dtype=float))
    gap = hausdorff_distance(seqs[-1], lim)
    if gap > tol:
        raise ConvergenceError(
            f"tail frame is {gap:.6g} from the limit, tolerance {tol:.6g}"
        )
    if len(lim) != len(seqs[-1]):
        return False
    g = lim @ lim.T
    off = g[~np.eye(len(lim), dtype=bool)]
    if off.size and np.abs(off).max() > math.sin(ortho_tol):
        return False
    return True


@dataclass(frozen=True)
class LipschitzCheck:
    difference: float
    bound: float
    ok: bool


FLOAT_SLACK = 1e-12  # absolute slack for float-evaluated inequalities


def sum_map_lipschitz(f, lipschitz_constant: float, a, b) -> LipschitzCheck:
    """Check |sum f(A) - sum f(B)| <= n * L * matching_distance(A, B)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[0] != b.shape[0]:
        raise ValidationError("lipschitz check needs equal cardinalities")
    sa = float(sum(f(p) for p in a))
    sb = float(sum(f(p) for p in b))
    diff = abs(sa - sb)
    bound = a.shape[0] * lipschitz_constant * matching_distance(a, b)
    return LipschitzCheck(diff, bound, diff <= bound + FLOAT_SLACK)


def save_sample(sample: MetricSample, tsp_path, coords_path=None, header: str | None = None):
    """Write the combinatorial file plus the coordinate sidecar; returns paths."""
    import os

    tsp_path = os.fspath(tsp_path)
    if coords_path is None:
        base = tsp_path[:-4] if tsp_path.endswith(".tsp") else tsp_path
        coords_path = base + ".coords"
    lines = []
    if header:
        for h in header.splitlines():
            lines.append(f"# {h}")
    lines.append("outcomes " + " ".join(sample.ids))
    for test in sample.tests:
        lines.append("test " + " ".join(sorted(test)))
    with open(tsp_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(coords_path, "w") as fh:
        for x in sample.ids:
            coords = " ".join(repr(float(c)) for c in sample.point(x))
            fh.write(f"outcome {x} {coords}\n")
    return tsp_path, coords_path


def parse_coords(text: str) -> dict[str, tuple[float, ...]]:
    """Parse sidecar lines `outcome <id> <c1> ... <cd>`."""
    out: dict[str, tuple[float, ...]] = {}
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in _TOKEN.finditer(content)]
        if not toks:
            continue
        key, col = toks[0]
        if key != "outcome":
            raise ParseError(f"unknown directive {key!r}", lineno, col)
        if len(toks) < 3:
            raise ParseError("outcome line needs an id and coordinates", lineno, col)
        ident = toks[1][0]
        if ident in out:
            raise ParseError(f"duplicate coordinates for {ident!r}", lineno, toks[1][1])
        vals = []
        for tok, tcol in toks[2:]:
            try:
                vals.append(float(tok))
            except ValueError:
                raise ParseError(f"bad coordinate {tok!r}", lineno, tcol) from None
        if dim is None:
            dim = len(vals)
        elif len(vals) != dim:
            raise ParseError(
                f"expected {dim} coordinates, got {len(vals)}", lineno, toks[2][1]
            )
        out[ident] = tuple(vals)
    if not out:
        raise ParseError("no outcome lines", 1, 1)
    return out


def load_sample(tsp_path, coords_path=None, ortho_tol: float = DEFAULT_ORTHO_TOL) -> MetricSample:
    """Load a sampled space from a combinatorial file plus coordinate sidecar."""
    import os

    from .core import load_test_space

    tsp_path = os.fspath(tsp_path)
    if coords_path is None:
        base = tsp_path[:-4] if tsp_path.endswith(".tsp") else tsp_path
        coords_path = base + ".coords"
    with open(tsp_path) as fh:
        ts = load_test_space(fh.read())
    with open(coords_path) as fh:
        coords = parse_coords(fh.read())
    missing = [x for x in ts.outcomes if x not in coords]
    if missing:
        raise ValidationError(f"coordinates missing for outcomes {missing[:5]}")
    extra = sorted(set(coords) - set(ts.outcomes))
    if extra:
        raise ValidationError(f"coordinates for unknown outcomes {extra[:5]}")
    pts = np.array([coords[x] for x in ts.outcomes], dtype=float)
    return MetricSample(ts.outcomes, pts, ts.tests, ortho_tol)
