import json

import pytest
from click.testing import CliRunner

from tropic.cli import main
from tropic.export import dumps, load_export
from tropic.problem import builtin, builtin_dict


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def bad_problem(tmp_path, quartic):
    """Quartic with a stellar subdivision of one vertical cone by the ray (1,1,1,2)."""
    st = quartic.sigma_tilde.to_json()
    rays = st["rays"] + [[1, 1, 1, 2]]
    new = len(rays) - 1
    cone = next(c for c in st["cones"] if sorted(c) == [1, 2, 3, 4])
    cones = [c for c in st["cones"] if c is not cone]
    cones += [sorted(new if x == k else x for x in cone) for k in cone]
    obj = builtin_dict("quartic-k3")
    obj["sigma_tilde_prime"] = {"rays": rays, "cones": cones}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(obj))
    return path


def run(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


def test_polar_of_builtin(runner):
    res = run(runner, "polar", "--builtin", "quartic-k3")
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["reflexive"] is True
    assert sorted(body["polar"]["vertices"]) == [[-1, -1, -1], [0, 0, 1], [0, 1, 0], [1, 0, 0]]


def test_polar_of_vertices_and_bad_input(runner):
    res = run(runner, "polar", "--vertices", "1,0;0,1;-1,-1")
    assert res.exit_code == 0
    assert len(json.loads(res.stdout)["polar"]["vertices"]) == 3
    # the polar has fractional vertices
    res = run(runner, "polar", "--vertices", "2,0;0,2;-1,-1")
    assert res.exit_code == 0 and json.loads(res.stdout)["reflexive"] is False
    # origin outside: no polar
    assert run(runner, "polar", "--vertices", "1,0;2,0;2,1").exit_code == 2
    assert run(runner, "polar", "--vertices", "1,a;0,1").exit_code == 2


def test_nefcheck_exit_codes(runner, bad_problem):
    ok = run(runner, "nefcheck", "--builtin", "quartic-k3")
    assert ok.exit_code == 0
    assert json.loads(ok.stdout)["conditions"]["pass"] is True
    bad = run(runner, "nefcheck", "--input", str(bad_problem))
    assert bad.exit_code == 1
    clauses = json.loads(bad.stdout)["conditions"]["clauses"]
    assert clauses["vertical_rays"]["witness"] == [1, 1, 1, 2]
    assert clauses["restriction"]["pass"] is True


def test_schema_errors_exit_2(runner, tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"schema": "tropic-problem/1", "rank": 3, "delta": [[1, "x", 0]]}))
    res = run(runner, "dualcomplex", "--input", str(path))
    assert res.exit_code == 2
    assert "/delta/0/1" in res.output
    path.write_text("{not json")
    assert run(runner, "dualcomplex", "--input", str(path)).exit_code == 2
    assert run(runner, "dualcomplex", "--input", str(tmp_path / "missing.json")).exit_code == 2
    assert run(runner, "dualcomplex", "--input", str(path), "--builtin", "quintic").exit_code == 2


def test_unknown_stage_is_a_usage_error(runner):
    res = run(runner, "verify", "bogus", "--builtin", "quartic-k3")
    assert res.exit_code == 2
    assert "unknown stage" in res.output


def test_verify_reports_and_skips_dependents(runner, bad_problem):
    res = run(runner, "verify", "tropci", "--input", str(bad_problem))
    assert res.exit_code == 1
    body = json.loads(res.stdout)
    assert body["skipped"]["tropci"] == "depends on failed stage dualcomplex"
    assert "subdivision conditions fail" in body["skipped"]["dualcomplex"]
    assert body["checks"] == []
    ok = run(runner, "verify", "dualcomplex", "--builtin", "quartic-k3")
    assert ok.exit_code == 0
    body = json.loads(ok.stdout)
    assert body["pass"] and [c["check"] for c in body["checks"]][:2] == ["polar_involution", "subdivision_conditions"]
    assert "all checks pass" in ok.stderr


def test_verify_output_is_deterministic(runner):
    a = run(runner, "verify", "dualcomplex", "tropci", "--builtin", "quartic-k3")
    b = run(runner, "verify", "dualcomplex", "tropci", "--builtin", "quartic-k3")
    assert a.exit_code == 0 and a.stdout == b.stdout
    assert "seconds" not in a.stdout
    timed = run(runner, "verify", "dualcomplex", "--builtin", "quartic-k3", "--timings")
    assert all("seconds" in c for c in json.loads(timed.stdout)["checks"])


def test_trunc_below_four_is_rejected(runner):
    assert run(runner, "verify", "valuation", "--builtin", "quartic-k3", "--trunc", "3").exit_code == 2


def test_export_off_header_carries_f_vector(runner):
    res = run(runner, "export", "B", "--format", "off", "--builtin", "quartic-k3")
    lines = res.stdout.splitlines()
    assert lines[0] == "OFF"
    assert "# f-vector: 4 6 4" in lines
    counts = next(l for l in lines[1:] if not l.startswith("#"))
    assert counts == "4 4 6"
    tri = run(runner, "export", "triangulation", "--format", "off", "--builtin", "quartic-k3")
    assert "# f-vector: 4 6 4" in tri.stdout.splitlines()
    assert run(runner, "export", "problem", "--format", "off", "--builtin", "quartic-k3").exit_code == 2


@pytest.mark.parametrize("obj", ["problem", "B", "triangulation"])
def test_export_load_round_trip(runner, obj):
    res = run(runner, "export", obj, "--builtin", "quartic-k3")
    assert res.exit_code == 0
    loaded = load_export(json.loads(res.stdout))
    assert dumps(loaded.to_json()) == res.stdout
    again = run(runner, "export", obj, "--builtin", "quartic-k3")
    assert again.stdout == res.stdout


def test_export_samples_round_trip(runner, tmp_path):
    out = tmp_path / "s.json"
    res = run(runner, "export", "samples", "--builtin", "quartic-k3", "--samples", "2", "--out", str(out))
    assert res.exit_code == 0
    text = out.read_text()
    loaded = load_export(json.loads(text))
    assert len(loaded.points) == 2 and loaded.summary["samples"] == 2
    assert dumps(loaded.to_json()) == text


def test_loaded_problem_matches_builtin(runner, tmp_path):
    path = tmp_path / "q.json"
    run(runner, "export", "problem", "--builtin", "quintic", "--out", str(path))
    res = run(runner, "dualcomplex", "--input", str(path))
    assert json.loads(res.stdout)["f_vector"] == list(builtin("quintic").B.f_vector)


def test_contract_point(runner):
    res = run(runner, "contract", "--builtin", "quartic-k3", "--point", "3/2,1/4,0")
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert body["point"] == ["3/2", "1/4", 0]
    assert body["delta"] == ["3/4", "1/4", 0]
    assert len(body["chart"]["barycentric"]) == len(body["chart"]["chain"])
    # a point of B is fixed
    fixed = json.loads(run(runner, "contract", "--builtin", "quartic-k3", "--point", "1/2,1/4,1/4").stdout)
    assert fixed["delta"] == fixed["point"]


def test_contract_rejects_bad_points(runner):
    assert run(runner, "contract", "--builtin", "quartic-k3", "--point", "1,2").exit_code == 2
    assert run(runner, "contract", "--builtin", "quartic-k3", "--point", "0,0,0").exit_code == 2


def test_shuffle_tri(runner):
    res = run(runner, "shuffle-tri", "--degree", "2,1", "--verify")
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert len(body["simplices"]) == 3 and body["degree"] == [2, 1]
    assert json.loads(res.stderr)["pass"] is True
    off = run(runner, "shuffle-tri", "--degree", "1,1", "--export", "off")
    assert off.stdout.splitlines()[:2] == ["nOFF", "2"]
    assert run(runner, "shuffle-tri", "--degree", "1,-1").exit_code == 2


def test_tropci_finite_part(runner):
    res = run(runner, "tropci", "--builtin", "quartic-k3", "--finite")
    assert res.exit_code == 0
    body = json.loads(res.stdout)
    assert len(body["polynomials"]) == 1
