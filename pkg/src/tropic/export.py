"""Deterministic JSON and OFF mesh writers, and readers for exported JSON."""
from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .rational import Q, Vec, centroid, dot, fmt, fmt_vec, sub, vec


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, two-space indent, lists of scalars kept on one line."""
    return _encode(json.loads(json.dumps(obj, default=_default)), 0) + "\n"


def _encode(x, depth: int) -> str:
    pad = "  " * (depth + 1)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(x[k], depth + 1)}" for k in sorted(x)]
        return "{\n" + ",\n".join(items) + "\n" + "  " * depth + "}"
    if isinstance(x, list):
        if all(not isinstance(y, (dict, list)) for y in x):
            return json.dumps(x)
        if all(isinstance(y, list) and all(not isinstance(z, (dict, list)) for z in y) for y in x) and len(x) <= 8:
            return json.dumps(x)
        items = [pad + _encode(y, depth + 1) for y in x]
        return "[\n" + ",\n".join(items) + "\n" + "  " * depth + "]"
    return json.dumps(x)


def _default(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if hasattr(x, "to_json"):
        return x.to_json()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _num(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return repr(float(x))


def _cyclic(points: Sequence[Vec]) -> list[int]:
    """Indices of the vertices of a convex polygon in cyclic order (exact comparisons)."""
    c = centroid(points)
    rel = [sub(p, c) for p in points]
    e1 = next(r for r in rel if any(r))
    e2 = next(r for r in rel if dot(r, r) * dot(e1, e1) != dot(r, e1) ** 2)
    # orthogonalize e2 against e1 to get plane coordinates
    f = tuple(b - dot(e2, e1) / dot(e1, e1) * a for a, b in zip(e1, e2))
    uv = [(dot(r, e1), dot(r, f)) for r in rel]

    def half(p):
        return 0 if (p[1] > 0 or (p[1] == 0 and p[0] > 0)) else 1

    def cmp(a, b):
        pa, pb = uv[a], uv[b]
        if half(pa) != half(pb):
            return half(pa) - half(pb)
        cross = pa[0] * pb[1] - pa[1] * pb[0]
        return -1 if cross > 0 else (1 if cross < 0 else 0)

    return sorted(range(len(points)), key=functools.cmp_to_key(cmp))


def off_mesh(vertices: Sequence[Vec], faces: Sequence[Sequence[int]], header: Sequence[str] = ()) -> str:
    """OFF for three coordinates, nOFF otherwise. Faces are vertex index lists."""
    n = len(vertices[0]) if vertices else 3
    lines = []
    if n == 3:
        lines.append("OFF")
    else:
        lines.append("nOFF")
        lines.append(str(n))
    lines.extend(f"# {h}" for h in header)
    edges = set()
    for f in faces:
        for a, b in zip(f, list(f[1:]) + [f[0]]):
            if a != b:
                edges.add((min(a, b), max(a, b)))
    lines.append(f"{len(vertices)} {len(faces)} {len(edges)}")
    for v in vertices:
        lines.append(" ".join(_num(x) for x in v))
    for f in faces:
        lines.append(" ".join([str(len(f))] + [str(k) for k in f]))
    return "\n".join(lines) + "\n"


def simplicial_off(complex_, label: str = "") -> str:
    """Triangles of a simplicial complex (edges when it is one-dimensional)."""
    k = min(complex_.dim, 2)
    faces = sorted(complex_.faces(k))
    head = [f"f-vector: {' '.join(str(x) for x in complex_.f_vector)}"]
    if label:
        head.insert(0, label)
    return off_mesh(list(complex_.vertices), faces, head)


def dual_complex_off(B, label: str = "") -> str:
    """Vertices and two-dimensional cells of B as polygons."""
    verts = [B.vertex_point(v) for v in B.vertices]
    index = {p: k for k, p in enumerate(verts)}
    faces = []
    for c in B.cells_of_dim(2) if B.d >= 2 else B.cells_of_dim(1):
        pts = list(c.vertices)
        order = _cyclic(pts) if len(pts) > 2 else range(len(pts))
        faces.append([index[pts[k]] for k in order])
    head = [f"f-vector: {' '.join(str(x) for x in B.f_vector)}"]
    if label:
        head.insert(0, label)
    return off_mesh(verts, faces, head)


# ---------------------------------------------------------------------------
# reading exports back


@dataclass(frozen=True)
class CellRecord:
    index: int
    dim: int
    vertices: tuple
    mu: tuple
    nu: tuple
    faces: tuple
    anchor: Vec

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "dim": self.dim,
            "vertices": [fmt_vec(v) for v in self.vertices],
            "mu": [fmt_vec(v) for v in self.mu],
            "nu": [fmt_vec(v) for v in self.nu],
            "faces": list(self.faces),
            "anchor": fmt_vec(self.anchor),
        }


@dataclass(frozen=True)
class DualComplexRecord:
    """Exported B with exact coordinates; enough to inspect cells, anchors and charts offline."""

    rank: int
    dim: int
    f_vector: tuple
    cells: tuple
    gamma: tuple
    charts: dict  # vertex index -> rows of the chart matrix
    warnings: tuple

    @staticmethod
    def from_json(obj: dict) -> "DualComplexRecord":
        cells = tuple(
            CellRecord(
                c["index"],
                c["dim"],
                tuple(vec(v) for v in c["vertices"]),
                tuple(vec(v) for v in c["mu"]),
                tuple(vec(v) for v in c["nu"]),
                tuple(c["faces"]),
                vec(c["anchor"]),
            )
            for c in obj["cells"]
        )
        charts = {int(k): tuple(tuple(Q(x) for x in r) for r in rows) for k, rows in obj["charts"].items()}
        return DualComplexRecord(
            obj["rank"], obj["dim"], tuple(obj["f_vector"]), cells,
            tuple(tuple(ch) for ch in obj["gamma"]), charts, tuple(obj["warnings"]),
        )

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "dim": self.dim,
            "f_vector": list(self.f_vector),
            "cells": [c.to_json() for c in self.cells],
            "gamma": [list(ch) for ch in self.gamma],
            "charts": {str(k): [[fmt(x) for x in r] for r in rows] for k, rows in self.charts.items()},
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class SampleRecord:
    points: tuple
    summary: dict

    def to_json(self) -> dict:
        return {"points": [p.to_json() for p in self.points], **self.summary}


def load_export(obj: dict):
    """Rebuild the object behind an exported JSON document (problem, B, triangulation or samples)."""
    if "schema" in obj:
        from .problem import from_dict

        return from_dict(obj)
    if "points" in obj:
        from .valuation import SeriesPoint

        rest = {k: v for k, v in obj.items() if k != "points"}
        return SampleRecord(tuple(SeriesPoint.from_json(p) for p in obj["points"]), rest)
    if "cells" in obj:
        return DualComplexRecord.from_json(obj)
    if "simplices" in obj and "expected" in obj:
        from .shuffles import BTriangulation

        return BTriangulation.from_json(obj)
    raise ValueError("unrecognized export document")
