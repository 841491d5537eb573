import itertools
import math

import pytest

from tropic.checks import Report
from tropic.pipeline import (
    CheckResult,
    STAGES,
    VerificationReport,
    _closure,
    expand_stages,
    run_pipeline,
    shuffle_degrees,
    threads,
    verify_shuffle_counts,
)


def test_expand_stages():
    assert expand_stages(["all"]) == list(STAGES)
    assert expand_stages(["valuation", "dualcomplex", "valuation"]) == ["dualcomplex", "valuation"]
    with pytest.raises(ValueError, match="unknown stage"):
        expand_stages(["dualcomplex", "nope"])


def test_closure_adds_prerequisites_in_order():
    assert _closure(["valuation"]) == ["dualcomplex", "tropci", "contraction", "valuation"]
    assert _closure(["shuffles"]) == ["dualcomplex", "shuffles"]
    assert _closure(["dualcomplex"]) == ["dualcomplex"]


def test_shuffle_degrees_are_compositions():
    got = shuffle_degrees(6)
    # compositions of n into at least two parts: 2^(n-1) - 1
    assert len(got) == sum(2 ** (n - 1) - 1 for n in range(2, 7))
    assert len(set(got)) == len(got)
    brute = {c for n in range(2, 7) for k in range(2, n + 1) for c in itertools.product(range(1, n), repeat=k) if sum(c) == n}
    assert set(got) == brute


def test_shuffle_count_report():
    rep = verify_shuffle_counts(5)
    assert rep.passed and rep.checked == len(shuffle_degrees(5))


def test_threads_env(monkeypatch):
    monkeypatch.setenv("TROPIC_THREADS", "3")
    assert threads() == 3
    monkeypatch.setenv("TROPIC_THREADS", "zero")
    assert threads() == 1
    monkeypatch.setenv("TROPIC_THREADS", "-2")
    assert threads() == 1


def test_report_json_and_summary():
    rep = VerificationReport("demo", ["dualcomplex"])
    assert rep.passed
    rep.results.append(CheckResult("dualcomplex", Report("x", True, 3), 0.5))
    rep.results.append(CheckResult("dualcomplex", Report("y", False, 1, {"at": 1}), 0.25))
    body = rep.to_json()
    assert body["pass"] is False
    assert "seconds" not in body["checks"][0]
    assert rep.to_json(timings=True)["checks"][1]["seconds"] == 0.25
    assert rep.summary().splitlines()[-1] == "verification FAILED"


def test_run_pipeline_each_check_once(quartic):
    rep = run_pipeline(quartic, ["dualcomplex", "tropci"])
    assert rep.passed and not rep.skipped
    names = [(r.stage, r.report.name) for r in rep.results]
    assert len(names) == len(set(names))
    assert {s for s, _ in names} == {"dualcomplex", "tropci"}


def test_stage_exception_is_reported(quartic, monkeypatch):
    import tropic.pipeline as pl

    def boom(B, X):
        raise RuntimeError("broken")

    monkeypatch.setattr(pl, "verify_B_in_trop", boom)
    rep = run_pipeline(quartic, ["tropci"])
    assert not rep.passed
    last = rep.results[-1]
    assert last.report.name == "tropci_error" and "broken" in last.report.witness["error"]


def test_prerequisite_only_stage_runs_no_checks(quartic):
    rep = run_pipeline(quartic, ["shuffles"], count_pbar=4, tri_pbar=3)
    assert {r.stage for r in rep.results} == {"shuffles"}
    assert rep.passed
    tri = next(r for r in rep.results if r.report.name == "product_triangulations")
    assert tri.report.checked == len(shuffle_degrees(3))
    counts = next(r for r in rep.results if r.report.name == "shuffle_counts")
    assert counts.report.checked == sum(2 ** (n - 1) - 1 for n in range(2, 5))
    assert math.isfinite(tri.seconds)
