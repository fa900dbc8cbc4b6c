from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from testspaces.core import UnknownOutcomeError, ValidationError
from testspaces.metric import (
    ConvergenceError,
    MetricSample,
    NotTotallyNonOrthogonalError,
    VietorisBasicOpen,
    basic_open,
    check_sample_invariants,
    closure_check,
    event_cardinality_locally_constant,
    hausdorff_distance,
    load_sample,
    matching_distance,
    parse_coords,
    rank_bound,
    sample_frames,
    save_sample,
    sum_map_lipschitz,
    tno_radius,
    vietoris_member,
)
from testspaces.core import ParseError

from oracles import bottleneck_oracle, hausdorff_oracle

E1, E2, E3 = np.eye(3)
ROOT2 = math.sqrt(2.0)


def rotation_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def seeded_points(seed: int, n: int, d: int = 3) -> np.ndarray:
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, d))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


# ------------------------------------------------------------ basic opens


def test_vietoris_membership_examples():
    opens = basic_open([E1, E2, E3], 0.5)
    assert vietoris_member([E1, E2, E3], opens)
    assert not vietoris_member([E1, E2], opens)  # contained, misses ball 3
    stray = np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
    assert not vietoris_member([E1, stray], opens)  # containment fails


def test_vietoris_membership_is_strict():
    opens = basic_open([E2], ROOT2)
    assert not vietoris_member([E1], opens)  # boundary point is outside
    assert vietoris_member([E1], basic_open([E2], ROOT2 + 1e-9))


def test_basic_open_validation():
    with pytest.raises(ValidationError):
        VietorisBasicOpen(())
    with pytest.raises(ValidationError):
        basic_open([E1], 0.0)


# -------------------------------------------------------------- distances


def test_hausdorff_examples():
    assert hausdorff_distance([E1, E2], [E1, E2]) == 0.0
    assert hausdorff_distance([E1, E2], [E1, E3]) == pytest.approx(ROOT2)
    assert hausdorff_distance([E1], [E1, E2]) == pytest.approx(ROOT2)
    with pytest.raises(ValidationError):
        hausdorff_distance([], [E1])


def test_matching_examples():
    assert matching_distance([E1, E2], [E2, E1]) == 0.0
    assert matching_distance([E1, E2], [E1, E3]) == pytest.approx(ROOT2)
    with pytest.raises(ValidationError):
        matching_distance([E1], [E1, E2])


def test_matching_routes_agree_with_oracle():
    for seed in range(30):
        n = 2 + seed % 5
        a, b = seeded_points(seed, n), seeded_points(seed + 1000, n)
        exact = matching_distance(a, b)
        threshold_route = matching_distance(a, b, exhaustive_limit=0)
        assert exact == threshold_route
        assert exact == pytest.approx(bottleneck_oracle(a, b), abs=1e-12)
        d_h = hausdorff_distance(a, b)
        assert d_h == pytest.approx(hausdorff_oracle(a, b), abs=1e-12)
        assert d_h <= exact + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_hausdorff_metric_axioms_and_union_continuity(seed):
    rng = np.random.default_rng(seed)
    sizes = rng.integers(1, 6, size=3)
    a, b, c = (seeded_points(seed + k, int(n)) for k, n in enumerate(sizes))
    ab = hausdorff_distance(a, b)
    assert ab == hausdorff_distance(b, a)
    assert hausdorff_distance(a, a) == 0.0
    assert ab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12
    union_ab = np.vstack([a, b])
    union_ac = np.vstack([a, c])
    assert hausdorff_distance(union_ab, union_ac) <= hausdorff_distance(b, c)


# ---------------------------------------------------------------- samples


def frame_sample(theta: float = 0.0, **kwargs) -> MetricSample:
    pts = (rotation_z(theta) @ np.eye(3)).T
    return MetricSample(("a", "b", "c"), pts, (frozenset("abc"),), **kwargs)


def test_metric_sample_accessors():
    s = frame_sample()
    assert s.dim == 3
    assert s.index_of("b") == 1
    assert np.allclose(s.point("c"), E3)
    assert s.distance("a", "b") == pytest.approx(ROOT2)
    assert s.orthogonal("a", "b")
    assert sorted(map(tuple, s.orthogonal_pair_indices)) == [(0, 1), (0, 2), (1, 2)]
    ts = s.to_test_space()
    assert ts.outcomes == ("a", "b", "c")
    with pytest.raises(UnknownOutcomeError):
        s.index_of("zzz")


def test_metric_sample_rejects_bad_data():
    with pytest.raises(ValidationError):  # non-unit point
        MetricSample(("a", "b"), np.array([[2.0, 0.0], [0.0, 1.0]]), (frozenset("ab"),))
    with pytest.raises(ValidationError):  # test not orthogonal
        MetricSample(
            ("a", "b"),
            np.array([[1.0, 0.0], [math.sqrt(0.5), math.sqrt(0.5)]]),
            (frozenset("ab"),),
        )
    with pytest.raises(ValidationError):  # uncovered outcome
        MetricSample(("a", "b"), np.eye(2), (frozenset("a"),))


def test_invariant_battery_rows_all_pass():
    s = sample_frames(3, 5, seed=1)
    rows = check_sample_invariants(s.ids, s.coords, s.tests, s.ortho_tol)
    assert [name for name, _, _ in rows] == [
        "shape",
        "distinct-ids",
        "unit-norm",
        "test-ids-known",
        "tests-nonempty",
        "test-size",
        "tests-distinct",
        "covering",
        "in-test-orthogonality",
    ]
    assert all(ok for _, ok, _ in rows)


def test_invariant_battery_flags_corruption():
    s = sample_frames(3, 2, seed=1)
    bad = s.coords.copy()
    bad[0] *= 1.5
    rows = {name: ok for name, ok, _ in check_sample_invariants(s.ids, bad, s.tests, s.ortho_tol)}
    assert not rows["unit-norm"]
    merged = (frozenset(s.ids),)  # one big non-orthogonal "test"
    rows = {name: ok for name, ok, _ in check_sample_invariants(s.ids, s.coords, merged, s.ortho_tol)}
    assert not rows["test-size"]
    assert not rows["in-test-orthogonality"]


# -------------------------------------------------------------- tno radius


def test_tno_radius_single_frame():
    assert tno_radius(frame_sample(), "a") == pytest.approx(ROOT2)


def test_tno_radius_without_orthogonal_pairs():
    pts = np.array([[1.0, 0.0], [math.cos(0.3), math.sin(0.3)]])
    s = MetricSample(("a", "b"), pts, (frozenset("a"), frozenset("b")))
    assert tno_radius(s, "a") == math.inf


def test_tno_radius_scans_all_pairs():
    pts = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    s = MetricSample(("a", "b", "c"), pts, (frozenset("ab"), frozenset("c")))
    # orthogonal pairs: (a,b) and (b,c); from c the nearer pair is (b,c)
    assert tno_radius(s, "c") == pytest.approx(ROOT2)
    assert tno_radius(s, "b") == pytest.approx(ROOT2)
    with pytest.raises(UnknownOutcomeError):
        tno_radius(s, "zzz")


# -------------------------------------------------------------- rank bound


def test_rank_bound_single_frame_small_caps():
    assert rank_bound(frame_sample(), 0.1) == 3


def test_rank_bound_rejects_wide_caps():
    with pytest.raises(NotTotallyNonOrthogonalError) as exc:
        rank_bound(frame_sample(), 2.5)
    assert exc.value.center == "a"
    assert set(exc.value.pair) <= {"a", "b", "c"}
    with pytest.raises(ValidationError):
        rank_bound(frame_sample(), 0.0)


def test_rank_bound_under_45_degree_caps():
    s = sample_frames(3, 50, seed=3)
    cap = 2.0 * math.sin(math.radians(15.0))  # chordal radius of a 30 degree cap
    bound = rank_bound(s, cap)
    assert bound >= 3
    assert all(len(t) <= 3 for t in s.tests)


# ------------------------------------------------- cardinality constancy


def two_frame_sample(theta: float) -> MetricSample:
    first = np.eye(3)
    second = (rotation_z(theta) @ np.eye(3)).T
    pts = np.vstack([first, second])
    ids = ("a", "b", "c", "d", "e", "f")
    tests = (frozenset("abc"), frozenset("def"))
    return MetricSample(ids, pts, tests)


def test_cardinality_constancy_under_small_rotation():
    s = two_frame_sample(0.01)
    assert event_cardinality_locally_constant(s, {"a", "b"}, {"d", "e"})
    assert event_cardinality_locally_constant(s, {"a"}, {"a"})


def test_cardinality_constancy_vacuous_beyond_guard():
    s = two_frame_sample(0.01)
    # d_H between {a,b} and {d} is about sqrt(2): guard not met
    assert event_cardinality_locally_constant(s, {"a", "b"}, {"d"})


def test_cardinality_constancy_rejects_non_events():
    s = two_frame_sample(0.01)
    with pytest.raises(ValidationError):
        event_cardinality_locally_constant(s, {"a", "d"}, {"b"})


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=0, max_value=5_000),
    st.floats(min_value=1e-4, max_value=0.2),
)
def test_cardinality_constancy_on_rotated_frames(seed, theta):
    rng = np.random.default_rng(seed)
    base = sample_frames(3, 1, seed=seed).coords
    second = base @ rotation_z(theta).T
    ids = ("a", "b", "c", "d", "e", "f")
    s = MetricSample(ids, np.vstack([base, second]), (frozenset("abc"), frozenset("def")))
    pick = rng.integers(1, 4)
    left = ["a", "b", "c"][: int(pick)]
    right = ["d", "e", "f"][: int(pick)]
    assert event_cardinality_locally_constant(s, left, right)


# ------------------------------------------------------------- generation


def test_sample_frames_reproducible_prefix():
    small = sample_frames(3, 10, seed=9)
    large = sample_frames(3, 20, seed=9)
    assert small.ids == large.ids[:30]
    assert np.array_equal(small.coords, large.coords[:30])
    again = sample_frames(3, 10, seed=9)
    assert np.array_equal(small.coords, again.coords)
    assert not np.array_equal(small.coords, sample_frames(3, 10, seed=10).coords)


def test_sample_frames_are_rotations():
    s = sample_frames(3, 200, seed=4)
    mats = s.coords.reshape(200, 3, 3)
    gram = np.einsum("kij,klj->kil", mats, mats)
    assert np.abs(gram - np.eye(3)).max() <= 1e-12
    assert np.allclose(np.linalg.det(mats), 1.0)
    assert s.ids[0] == "f000000.0" and s.ids[5] == "f000001.2"


def test_sample_frames_dimension_two_and_errors():
    s = sample_frames(2, 10, seed=0)
    assert all(len(t) == 2 for t in s.tests)
    with pytest.raises(ValidationError):
        sample_frames(1, 5, seed=0)
    with pytest.raises(ValidationError):
        sample_frames(3, 0, seed=0)


# ----------------------------------------------------------------- closure


def shrinking_rotations(base: np.ndarray, count: int = 12):
    return [base @ rotation_z(1.0 / (k + 1)).T for k in range(count)]


def test_closure_check_accepts_convergent_rotations():
    base = np.eye(3)
    frames = shrinking_rotations(base)
    limit = base @ rotation_z(1.0 / 12.0).T
    assert closure_check(frames, limit, tol=1e-9)


def test_closure_check_constant_sequence_zero_tolerance():
    assert closure_check([np.eye(3)] * 4, np.eye(3), tol=0.0)


def test_closure_check_flags_non_orthogonal_limit():
    tilt = np.vstack([E1, (E1 + E2) / ROOT2, E3])
    assert not closure_check([tilt] * 6, tilt, tol=1e-9)


def test_closure_check_flags_cardinality_drop():
    assert not closure_check([np.eye(3)] * 4, np.eye(3)[:2], tol=2.0)


def test_closure_check_rejects_divergence():
    frames = [np.eye(3), (rotation_z(0.5) @ np.eye(3)).T]
    with pytest.raises(ConvergenceError):
        closure_check(frames, np.eye(3), tol=1e-9)
    with pytest.raises(ValidationError):
        closure_check([], np.eye(3))


# ---------------------------------------------------------- lipschitz sums


def test_sum_map_lipschitz_identity_and_constant():
    a = np.vstack([E1, E2])
    check = sum_map_lipschitz(lambda p: p[0], 1.0, a, a)
    assert check.ok and check.difference == 0.0
    check = sum_map_lipschitz(lambda p: 7.0, 0.0, a, np.vstack([E2, E3]))
    assert check.ok and check.difference == 0.0


def test_sum_map_lipschitz_first_coordinate_under_rotation():
    a = np.vstack([E1, E2])
    b = a @ rotation_z(0.3).T
    check = sum_map_lipschitz(lambda p: p[0], 1.0, a, b)
    assert check.ok
    assert check.bound == pytest.approx(2.0 * matching_distance(a, b))
    with pytest.raises(ValidationError):
        sum_map_lipschitz(lambda p: p[0], 1.0, a, np.vstack([E1]))


# ------------------------------------------------------------ persistence


def test_save_load_roundtrip_is_exact(tmp_path):
    s = sample_frames(3, 7, seed=21)
    tsp, coords = save_sample(s, tmp_path / "frames.tsp", header="frames dim=3")
    text = (tmp_path / "frames.tsp").read_text()
    assert text.startswith("# frames dim=3\n")
    loaded = load_sample(tsp)
    assert loaded.ids == s.ids
    assert np.array_equal(loaded.coords, s.coords)  # repr() round-trips floats
    assert set(loaded.tests) == set(s.tests)


def test_load_sample_reports_missing_coordinates(tmp_path):
    s = sample_frames(2, 2, seed=0)
    tsp, coords_path = save_sample(s, tmp_path / "s.tsp")
    lines = (tmp_path / "s.coords").read_text().splitlines()
    (tmp_path / "s.coords").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValidationError, match="missing"):
        load_sample(tsp)


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("point a 1.0\n", 1, 1),
        ("outcome a\n", 1, 1),
        ("outcome a 1.0 q\n", 1, 15),
        ("outcome a 1.0 0.0\noutcome a 0.0 1.0\n", 2, 9),
        ("outcome a 1.0 0.0\noutcome b 0.0\n", 2, 11),
        ("", 1, 1),
    ],
)
def test_parse_coords_error_positions(text, line, col):
    with pytest.raises(ParseError) as exc:
        parse_coords(text)
    assert (exc.value.line, exc.value.column) == (line, col)


def test_parse_coords_accepts_comments_and_blanks():
    got = parse_coords("# header\n\noutcome a 1.0 0.0  # trailing\noutcome b 0.0 1.0\n")
    assert got == {"a": (1.0, 0.0), "b": (0.0, 1.0)}
