from __future__ import annotations

import io

import pytest

from testspaces import corpus
from testspaces.cli import main
from testspaces.logic import boolean_oa
from testspaces.metric import load_sample

MO2_DIGEST = "9a129d0256736bd8399387e0c2b5d3d316ca33a1f62b35cb5e23d1e50b1a7db8"

PATH5 = "outcomes a b c d e\ntest a b\ntest b c\ntest c d\ntest d e\n"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def machine_rows(out: str) -> dict[str, str]:
    rows = {}
    for line in out.splitlines():
        key, sep, value = line.partition("\t")
        assert sep == "\t", f"machine line without a tab: {line!r}"
        rows[key] = value
    return rows


def oa_file_text(oa) -> str:
    lines = [
        f"elements {' '.join(oa.elements)}",
        f"zero {oa.zero}",
        f"one {oa.one}",
    ]
    seen = set()
    for p, q, r in oa.sum_triples():
        if p == oa.zero or q == oa.zero or frozenset((p, q)) in seen:
            continue
        seen.add(frozenset((p, q)))
        lines.append(f"sum {p} {q} {r}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- gen


def test_gen_list(capsys):
    code, out, _ = run(capsys, "gen", "--list")
    assert code == 0
    names = out.split()
    for expected in ("classical-N", "two-disjoint", "glued-pair", "triangle", "mo2"):
        assert expected in names


def test_gen_emits_corpus_bytes(capsys):
    code, out, _ = run(capsys, "gen", "triangle")
    assert code == 0
    assert out == corpus.gen("triangle")


def test_gen_error_paths(capsys):
    code, _, err = run(capsys, "gen", "no-such-space")
    assert code == 2
    assert "error" in err
    code, _, err = run(capsys, "gen")
    assert code == 2


# ------------------------------------------------------------------ info


def space_file(tmp_path, name: str):
    path = tmp_path / f"{name}.tsp"
    path.write_text(corpus.gen(name))
    return str(path)


def test_info_triangle_machine(capsys, tmp_path):
    code, out, _ = run(
        capsys, "--format", "machine", "info", space_file(tmp_path, "triangle")
    )
    assert code == 0
    rows = machine_rows(out)
    assert rows["outcomes"] == "6"
    assert rows["tests"] == "3"
    assert rows["rank"] == "3"
    assert rows["events"] == "19"
    assert rows["algebraic"] == "yes"
    assert rows["semiclassical"] == "no"


def test_info_non_algebraic_witness_and_strict(capsys, tmp_path):
    path = tmp_path / "path5.tsp"
    path.write_text(PATH5)
    code, out, _ = run(capsys, "--format", "machine", "info", str(path))
    assert code == 0
    rows = machine_rows(out)
    assert rows["algebraic"] == "no"
    assert rows["witness"] == "a|c|d"
    code, _, _ = run(capsys, "--strict", "info", str(path))
    assert code == 1


def test_info_reads_stdin(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(corpus.gen("mo2")))
    code, out, _ = run(capsys, "--format", "machine", "info", "-")
    assert code == 0
    assert machine_rows(out)["outcomes"] == "4"


# ----------------------------------------------------------------- logic


def test_logic_triangle_rows(capsys, tmp_path):
    code, out, _ = run(
        capsys, "--format", "machine", "logic", space_file(tmp_path, "triangle")
    )
    assert code == 0
    rows = machine_rows(out)
    assert rows["size"] == "14"
    assert rows["orthocoherent"] == "no"
    assert rows["osum_is_join"] == "no"
    assert rows["omp"] == "no"
    assert rows["flags_agree"] == "yes"
    assert len(rows["digest"]) == 64


def test_logic_mo2_digest_is_stable(capsys, tmp_path):
    code, out, _ = run(
        capsys, "--format", "machine", "logic", space_file(tmp_path, "mo2")
    )
    assert code == 0
    assert machine_rows(out)["digest"] == MO2_DIGEST


def test_logic_rejects_non_algebraic_space(capsys, tmp_path):
    path = tmp_path / "path5.tsp"
    path.write_text(PATH5)
    code, _, err = run(capsys, "logic", str(path))
    assert code == 2
    assert "not algebraic" in err


# ---------------------------------------------------------------- states


def test_states_triangle_with_dispersion_free(capsys, monkeypatch):
    monkeypatch.setattr("sys.stdin", io.StringIO(corpus.gen("triangle")))
    code, out, _ = run(
        capsys, "--format", "machine", "--strict", "states", "--dispersion-free", "-"
    )
    assert code == 0
    rows = machine_rows(out)
    assert rows["feasible"] == "yes"
    assert rows["state a"] == "1/2"
    assert rows["state x"] == "0"
    assert rows["dispersion_free"] == "4"
    assert rows["df 0"] == "x,y,z"
    assert rows["unital"] == "yes"


def test_states_infeasible_strict_exit(capsys, tmp_path):
    path = space_file(tmp_path, "stateless")
    code, out, _ = run(capsys, "--format", "machine", "states", path)
    assert code == 0  # reporting is not an error
    rows = machine_rows(out)
    assert rows["feasible"] == "no"
    assert rows["weight 0"] == "1"
    assert rows["weight 3"] == "-1"
    code, _, _ = run(capsys, "--strict", "states", path)
    assert code == 1


# -------------------------------------------------------------------- oa


def test_oa_roundtrip_report(capsys, tmp_path):
    path = tmp_path / "bool3.oa"
    path.write_text(oa_file_text(boolean_oa(3)))
    code, out, _ = run(
        capsys, "--format", "machine", "--strict", "oa", "--roundtrip", str(path)
    )
    assert code == 0
    rows = machine_rows(out)
    assert rows["elements"] == "8"
    assert rows["sums"] == "27"
    assert rows["induced_outcomes"] == "7"
    assert rows["induced_tests"] == "5"
    assert rows["roundtrip"] == "yes"


def test_oa_rejects_broken_table(capsys, tmp_path):
    path = tmp_path / "bad.oa"
    path.write_text("elements 0 a 1\nzero 0\none 1\n")
    code, _, err = run(capsys, "oa", str(path))
    assert code == 2
    assert "complements" in err


# ---------------------------------------------------------------- metric


def frames_file(capsys, tmp_path, n=6, seed=3):
    path = str(tmp_path / "frames.tsp")
    code, _, _ = run(
        capsys, "sample-frames", "-d", "3", "-n", str(n), "--seed", str(seed), "-o", path
    )
    assert code == 0
    return path


def test_metric_check_battery_ok(capsys, tmp_path):
    path = frames_file(capsys, tmp_path)
    code, out, _ = run(capsys, "--format", "machine", "metric", "check", path)
    assert code == 0
    rows = machine_rows(out)
    assert set(rows.values()) == {"ok"}
    assert "in-test-orthogonality" in rows


def test_metric_check_flags_corruption(capsys, tmp_path):
    path = frames_file(capsys, tmp_path)
    coords = tmp_path / "frames.coords"
    text = coords.read_text().splitlines()
    first = text[0].split()
    first[2] = repr(float(first[2]) * 1.4)  # stretch one coordinate
    text[0] = " ".join(first)
    coords.write_text("\n".join(text) + "\n")
    code, out, _ = run(capsys, "--format", "machine", "metric", "check", path)
    assert code == 0
    rows = machine_rows(out)
    assert rows["unit-norm"].startswith("fail")
    code, _, _ = run(capsys, "--strict", "metric", "check", path)
    assert code == 1


def test_sample_frames_deterministic_output(capsys, tmp_path):
    a = tmp_path / "a.tsp"
    b = tmp_path / "b.tsp"
    for path in (a, b):
        code, _, _ = run(
            capsys, "sample-frames", "-d", "2", "-n", "5", "--seed", "7", "-o", str(path)
        )
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.coords").read_bytes() == (tmp_path / "b.coords").read_bytes()
    head = a.read_text().splitlines()[0]
    assert head == "# frames dim=2 count=5 seed=7"


# --------------------------------------------------------------- extract


def test_extract_auto_basis_and_saved_basis_agree(capsys, tmp_path):
    path = frames_file(capsys, tmp_path, n=30, seed=1)
    basis_path = str(tmp_path / "b.basis")
    code, first, _ = run(
        capsys, "--format", "machine", "extract", path,
        "--basis", "auto:5", "--delta", "0.9", "--save-basis", basis_path,
    )
    assert code == 0
    rows = machine_rows(first)
    assert rows["opens"] == "5"
    assert rows["hidden_state_valid"] == "yes"
    assert rows["coverage_ok"] == "yes"
    code, second, _ = run(
        capsys, "--format", "machine", "extract", path,
        "--basis", f"file:{basis_path}", "--delta", "0.9",
    )
    assert code == 0
    assert first == second


def test_extract_resample_reports_preserved_hits(capsys, tmp_path):
    path = frames_file(capsys, tmp_path, n=20, seed=2)
    code, out, _ = run(
        capsys, "--format", "machine", "--strict", "extract", path,
        "--basis", "auto:4", "--delta", "0.9", "--resample-factor", "2",
    )
    assert code == 0
    rows = machine_rows(out)
    assert rows["resampled_opens"] == "8"
    assert rows["hits_preserved"] == "yes"
    assert float(rows["resampled_coverage_radius"]) <= float(rows["coverage_radius"])


def test_extract_resample_needs_header(capsys, tmp_path):
    path = frames_file(capsys, tmp_path, n=8, seed=4)
    text = (tmp_path / "frames.tsp").read_text().splitlines()
    (tmp_path / "frames.tsp").write_text("\n".join(text[1:]) + "\n")
    code, _, err = run(
        capsys, "extract", path, "--basis", "auto:2", "--delta", "0.9",
        "--resample-factor", "2",
    )
    assert code == 2
    assert "header" in err


def test_extract_saves_loadable_subspace(capsys, tmp_path):
    path = frames_file(capsys, tmp_path, n=12, seed=5)
    out_path = str(tmp_path / "sub.tsp")
    code, out, _ = run(
        capsys, "--format", "machine", "extract", path,
        "--basis", "auto:3", "--delta", "0.9", "--out", out_path,
    )
    assert code == 0
    rows = machine_rows(out)
    sub = load_sample(out_path)
    assert len(sub.tests) == int(rows["selected"])
    code, check_out, _ = run(capsys, "--format", "machine", "metric", "check", out_path)
    assert code == 0
    assert set(machine_rows(check_out).values()) == {"ok"}


def test_extract_rejects_bad_basis_spec(capsys, tmp_path):
    path = frames_file(capsys, tmp_path, n=4, seed=6)
    code, _, err = run(capsys, "extract", path, "--basis", "auto:zap")
    assert code == 2
    assert "basis spec" in err


# ------------------------------------------------------------ exit codes


def test_missing_file_is_an_input_error(capsys):
    code, _, err = run(capsys, "info", "/no/such/file.tsp")
    assert code == 2
    assert "error" in err


def test_parse_errors_carry_positions(capsys, tmp_path):
    path = tmp_path / "broken.tsp"
    path.write_text("test a b\n")
    code, _, err = run(capsys, "info", str(path))
    assert code == 2
    assert "line 1" in err
