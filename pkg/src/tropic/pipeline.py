"""Stage orchestration and the aggregated verification report."""
from __future__ import annotations

import itertools
import logging
import os
import time
from dataclasses import dataclass, field

from .checks import Report
from .contraction import (
    build_atlas,
    verify_affine_compat,
    verify_laws,
    verify_preimage,
    verify_sigma_cone,
)
from .polyhedra import polar_dual
from .problem import ProblemInstance
from .shuffles import enumerate_shuffles, multinomial, triangulate_B, verify_pa_iso, verify_triangulation
from .tropical import TropicalCI, nef_polynomials, verify_B_in_trop
from .valuation import (
    TorusSystem,
    ValuationLab,
    sample_series_points,
    verify_chart_identities,
    verify_commutation,
    verify_divisorial,
)

log = logging.getLogger(__name__)

STAGES = ("dualcomplex", "tropci", "contraction", "shuffles", "valuation")
DEPENDS = {
    "dualcomplex": (),
    "tropci": ("dualcomplex",),
    "contraction": ("tropci",),
    "shuffles": ("dualcomplex",),
    "valuation": ("contraction",),
}


def threads() -> int:
    try:
        return max(1, int(os.environ.get("TROPIC_THREADS", "1")))
    except ValueError:
        return 1


def expand_stages(stages) -> list[str]:
    out: list[str] = []
    for s in stages:
        if s == "all":
            names = list(STAGES)
        elif s in STAGES:
            names = [s]
        else:
            raise ValueError(f"unknown stage {s!r}; choose from {', '.join(STAGES + ('all',))}")
        for n in names:
            if n not in out:
                out.append(n)
    return [s for s in STAGES if s in out]


def _closure(stages: list[str]) -> list[str]:
    need = set(stages)
    for s in reversed(STAGES):
        if s in need:
            need.update(DEPENDS[s])
    return [s for s in STAGES if s in need]


@dataclass
class CheckResult:
    stage: str
    report: Report
    seconds: float

    def to_json(self, timings: bool = False) -> dict:
        out = {"stage": self.stage, **self.report.to_json()}
        if timings:
            out["seconds"] = round(self.seconds, 3)
        return out


@dataclass
class VerificationReport:
    problem: str
    stages: list
    results: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)  # stage -> reason

    @property
    def passed(self) -> bool:
        return not self.skipped and all(r.report.passed for r in self.results)

    def to_json(self, timings: bool = False) -> dict:
        return {
            "problem": self.problem,
            "stages": list(self.stages),
            "pass": self.passed,
            "checks": [r.to_json(timings) for r in self.results],
            "skipped": dict(self.skipped),
        }

    def summary(self) -> str:
        lines = []
        for r in self.results:
            mark = "PASS" if r.report.passed else "FAIL"
            lines.append(f"{mark}  {r.stage:12s} {r.report.name:28s} checked={r.report.checked:<6d} {r.seconds:7.2f}s")
        for s, why in self.skipped.items():
            lines.append(f"SKIP  {s:12s} {why}")
        lines.append("all checks pass" if self.passed else "verification FAILED")
        return "\n".join(lines)


class _Context:
    def __init__(self, problem: ProblemInstance, options: dict):
        self.problem = problem
        self.options = options
        self.X = None
        self.atlas = None


def _run(stage: str, fn, report: VerificationReport) -> bool:
    """Consume the stage's reports one at a time so each gets its own timing."""
    ok = True
    t = time.perf_counter()
    it = iter(fn())
    while True:
        try:
            rep = next(it)
        except StopIteration:
            break
        except Exception as exc:  # a stage failure is reported, not raised
            log.exception("stage %s failed", stage)
            rep = Report(f"{stage}_error", False, 0, {"error": f"{type(exc).__name__}: {exc}"})
            report.results.append(CheckResult(stage, rep, time.perf_counter() - t))
            return False
        now = time.perf_counter()
        report.results.append(CheckResult(stage, rep, now - t))
        t = now
        ok = ok and rep.passed
    return ok


def _raises(name: str, fn) -> Report:
    try:
        fn()
    except Exception as exc:
        return Report(name, False, 0, {"error": str(exc)})
    return Report(name, True, 1)


def _stage_dualcomplex(ctx: _Context):
    P = ctx.problem
    dual = polar_dual(P.delta)
    yield Report(
        "polar_involution",
        P.delta.is_reflexive() and dual.is_reflexive() and polar_dual(dual) == P.delta,
        2,
        details={"delta_vertices": len(P.delta.vertices), "dual_vertices": len(dual.vertices)},
    )
    cond = P.conditions
    yield Report("subdivision_conditions", cond.ok, len(cond.clauses), None if cond.ok else cond.to_json())
    if not cond.ok:
        return  # B is undefined; dependents are skipped
    B = P.B
    for name in ("check_complex", "check_boundary", "check_direct_sums", "check_anchors"):
        yield _raises(name[6:], getattr(B, name))
    yield Report("f_vector", True, 1, details={"f_vector": list(B.f_vector), "gamma": len(B.gamma)})


def _build_tropci(ctx: _Context) -> None:
    P = ctx.problem
    ctx.X = TropicalCI(nef_polynomials(P.nef.parts, P.h_check), P.sigma_prime, seed=P.seed)


def _build_contraction(ctx: _Context) -> None:
    ctx.atlas = build_atlas(ctx.problem.B, ctx.X)


def _stage_tropci(ctx: _Context):
    yield verify_B_in_trop(ctx.problem.B, ctx.X)


def _stage_contraction(ctx: _Context):
    B = ctx.problem.B
    atlas = ctx.atlas
    yield verify_laws(atlas)
    pre = [verify_preimage(atlas, c.index) for c in B.cells]
    bad = [r for r in pre if not r.passed]
    yield Report("preimage", not bad, sum(r.checked for r in pre), bad[0].witness if bad else None)
    sig = []
    for s in B.maximal_cells:
        for v in B.vertices:
            if v.index in B.faces_of[s.index]:
                sig.append(verify_sigma_cone(atlas, s, v))
    bad = [r for r in sig if not r.passed]
    yield Report("sigma_cone", not bad, sum(r.checked for r in sig), bad[0].witness if bad else None, {"pairs": len(sig)})
    yield verify_affine_compat(atlas)


def shuffle_degrees(max_pbar: int) -> list[tuple]:
    """Compositions of 1..max_pbar into at least two positive parts."""
    out = []
    for n in range(2, max_pbar + 1):
        for cuts in itertools.product((0, 1), repeat=n - 1):
            parts, cur = [], 1
            for c in cuts:
                if c:
                    parts.append(cur)
                    cur = 1
                else:
                    cur += 1
            parts.append(cur)
            if len(parts) >= 2:
                out.append(tuple(parts))
    return out


def verify_shuffle_counts(max_pbar: int) -> Report:
    checked = 0
    for deg in shuffle_degrees(max_pbar):
        got = len(enumerate_shuffles(deg))
        if got != multinomial(deg):
            return Report("shuffle_counts", False, checked, {"degree": list(deg), "count": got})
        checked += 1
    return Report("shuffle_counts", True, checked)


def verify_product_triangulations(max_pbar: int) -> Report:
    checked = 0
    for deg in shuffle_degrees(max_pbar):
        rep = verify_pa_iso(deg)
        if not rep["pass"]:
            return Report("product_triangulations", False, checked, {"degree": list(deg), **rep})
        checked += 1
    return Report("product_triangulations", True, checked)


def _stage_shuffles(ctx: _Context):
    P = ctx.problem
    o = ctx.options
    yield verify_shuffle_counts(o.get("count_pbar", 8))
    yield verify_product_triangulations(o.get("tri_pbar", 6))
    B = P.B
    tri = triangulate_B(B, B.default_orders(P.distinguished_vertex))
    rep = verify_triangulation(B, tri)
    yield Report(
        "B_triangulation",
        rep["pass"],
        rep["top_simplices"],
        rep.get("witness"),
        {"top_simplices": rep["top_simplices"], "expected": rep["expected"]},
    )


def _stage_valuation(ctx: _Context):
    P = ctx.problem
    o = ctx.options
    B = P.B
    v = P.distinguished_vertex
    lab = ValuationLab(B, v, B.default_orders(v))
    yield verify_chart_identities(lab.all_charts)
    yield verify_divisorial(B, lab.all_charts)
    n = o.get("samples", 100)
    if n > 0:
        seed = o.get("seed", P.seed)
        trunc = o.get("trunc", P.trunc)
        system = TorusSystem.of(ctx.X.polys, seed)
        ss = sample_series_points(ctx.atlas, v, ctx.X.polys, system, n, seed, trunc, workers=threads())
        rep = verify_commutation(lab, ctx.atlas, ss.points)
        rep.details.update(ss.summary())
        if len(ss.points) < n:
            rep.passed = False
            rep.witness = {"too_few_samples": len(ss.points), "failures": ss.failures[:5]}
        yield rep


_BUILD = {
    "dualcomplex": lambda ctx: ctx.problem.B,
    "tropci": _build_tropci,
    "contraction": _build_contraction,
    "shuffles": lambda ctx: None,
    "valuation": lambda ctx: None,
}

_STAGE_FN = {
    "dualcomplex": _stage_dualcomplex,
    "tropci": _stage_tropci,
    "contraction": _stage_contraction,
    "shuffles": _stage_shuffles,
    "valuation": _stage_valuation,
}


def _build_and_check(stage: str, ctx: _Context):
    if stage != "dualcomplex":  # that stage checks the conditions before building B
        _BUILD[stage](ctx)
    yield from _STAGE_FN[stage](ctx)


def run_pipeline(problem: ProblemInstance, stages=("all",), **options) -> VerificationReport:
    """Run the requested stages (and what they depend on); failures halt dependents only."""
    wanted = expand_stages(stages)
    report = VerificationReport(problem.name, wanted)
    ctx = _Context(problem, options)
    ok: dict[str, bool] = {}
    for s in _closure(wanted):
        blocked = [d for d in DEPENDS[s] if not ok.get(d, False)]
        if blocked:
            report.skipped[s] = f"depends on failed stage {blocked[0]}"
            ok[s] = False
            continue
        if s in wanted:
            ok[s] = _run(s, lambda: _build_and_check(s, ctx), report)
        else:
            # prerequisite only: build what dependents need, without its checks
            try:
                _BUILD[s](ctx)
                ok[s] = True
            except Exception as exc:
                report.skipped[s] = f"prerequisite failed: {type(exc).__name__}: {exc}"
                ok[s] = False
    return report
