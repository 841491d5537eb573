"""Problem instances: JSON schema, loading, builtins and derived objects."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import jsonschema

from .dualcomplex import DualComplex, build_dual_complex
from .fans import (
    Fan,
    PLFunction,
    build_sigma_tilde,
    check_conditions,
    is_refinement,
    newton_polytope,
)
from .nef import NefPartition, validate_nef_partition
from .polyhedra import GeometryError, Polytope, from_inequalities, hull
from .rational import Q, fmt_vec, vec

SCHEMA_VERSION = "tropic-problem/1"

_rat = {"anyOf": [{"type": "integer"}, {"type": "string", "pattern": r"^\s*-?\d+(/\d+)?\s*$"}]}
_vec = {"type": "array", "items": _rat, "minItems": 1}
_fan = {
    "anyOf": [
        {"const": "trivial"},
        {
            "type": "object",
            "required": ["rays", "cones"],
            "properties": {
                "rank": {"type": "integer"},
                "lattice": {"enum": ["M", "N"]},
                "rays": {"type": "array", "items": _vec},
                "cones": {"type": "array", "items": {"type": "array", "items": {"type": "integer", "minimum": 0}}},
            },
        },
    ]
}

SCHEMA = {
    "type": "object",
    "required": ["schema", "rank", "delta"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "rank": {"type": "integer", "minimum": 2},
        "delta": {"type": "array", "items": _vec, "minItems": 1},
        "parts": {"type": "array", "items": {"type": "array", "items": _vec, "minItems": 1}},
        "sigma_prime": _fan,
        "sigma_check_prime": _fan,
        "sigma_tilde_prime": _fan,
        "h_check": {
            "anyOf": [
                {"const": "phi_check"},
                {"type": "object", "required": ["ray_values"], "properties": {"ray_values": {"type": "array", "items": _rat}}},
            ]
        },
        "distinguished_vertex": _vec,
        "anchors": {"type": "object", "additionalProperties": _vec},
        "seed": {"type": "integer"},
        "trunc": {"type": "integer", "minimum": 4},
    },
    "additionalProperties": False,
}


class ProblemError(ValueError):
    """Input error; ``path`` is a JSON pointer into the offending document."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path or "/"


def _pointer(parts) -> str:
    return "".join(f"/{p}" for p in parts)


@dataclass(eq=False)
class ProblemInstance:
    name: str
    rank: int
    delta: Polytope
    parts: list
    sigma_prime_spec: Any = "trivial"
    sigma_check_prime_spec: Any = "trivial"
    sigma_tilde_prime_spec: Any = "trivial"
    h_check_spec: Any = "phi_check"
    distinguished: tuple | None = None
    anchors: dict = field(default_factory=dict)
    seed: int = 42
    trunc: int = 12
    raw: dict = field(default_factory=dict)

    @cached_property
    def nef(self) -> NefPartition:
        return validate_nef_partition(self.delta, self.parts)

    @property
    def r(self) -> int:
        return len(self.parts)

    @property
    def d(self) -> int:
        return self.rank - self.r

    @cached_property
    def sigma_prime(self) -> Fan:
        if self.sigma_prime_spec == "trivial":
            return self.nef.sigma
        fan = Fan.from_json({"rank": self.rank, "lattice": "N", **self.sigma_prime_spec})
        if not is_refinement(fan, self.nef.sigma):
            raise ProblemError("does not refine the normal fan of delta", "/sigma_prime")
        return fan

    @cached_property
    def sigma_check_prime(self) -> Fan:
        if self.sigma_check_prime_spec == "trivial":
            return self.nef.sigma_check
        fan = Fan.from_json({"rank": self.rank, "lattice": "M", **self.sigma_check_prime_spec})
        if not is_refinement(fan, self.nef.sigma_check):
            raise ProblemError("does not refine the normal fan of nabla", "/sigma_check_prime")
        return fan

    @cached_property
    def phi_check(self) -> PLFunction:
        out = self.nef.phi_checks[0]
        for p in self.nef.phi_checks[1:]:
            out = out + p
        return out

    @cached_property
    def h_check(self) -> PLFunction:
        fan = self.sigma_check_prime
        if self.h_check_spec == "phi_check":
            return self.phi_check.restrict_to(fan)
        vals = [Q(x) for x in self.h_check_spec["ray_values"]]
        if len(vals) != len(fan.rays):
            raise ProblemError("one value per ray is required", "/h_check/ray_values")
        return PLFunction.from_ray_values(fan, vals)

    @cached_property
    def h_prime(self) -> PLFunction:
        return self.h_check - self.phi_check.restrict_to(self.sigma_check_prime)

    @cached_property
    def nabla_hp(self) -> Polytope:
        return newton_polytope(self.h_prime)

    @cached_property
    def sigma_tilde(self) -> Fan:
        return build_sigma_tilde(self.nef.dstar, self.nabla_hp)

    @cached_property
    def sigma_tilde_prime(self) -> Fan:
        if self.sigma_tilde_prime_spec == "trivial":
            return self.sigma_tilde
        return Fan.from_json({"rank": self.rank + 1, "lattice": "N", **self.sigma_tilde_prime_spec})

    @cached_property
    def conditions(self):
        return check_conditions(self.sigma_tilde_prime, self.sigma_tilde, self.sigma_prime, self.nabla_hp)

    @cached_property
    def B(self) -> DualComplex:
        rep = self.conditions
        if not rep.ok:
            bad = [k for k, v in rep.clauses.items() if not v["pass"]]
            raise GeometryError(f"subdivision conditions fail: {', '.join(bad)}")
        return build_dual_complex(self.nef, self.sigma_prime, self.sigma_tilde_prime, self.h_check, self.anchors)

    @cached_property
    def distinguished_vertex(self):
        B = self.B
        if self.distinguished is None:
            return max(B.vertices, key=lambda c: c.vertices[0])
        for v in B.vertices:
            if v.vertices[0] == self.distinguished:
                return v
        raise ProblemError(f"{fmt_vec(self.distinguished)} is not a vertex of B", "/distinguished_vertex")

    def to_json(self) -> dict:
        return dict(self.raw)


def from_dict(obj: dict) -> ProblemInstance:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(obj), key=lambda e: list(e.absolute_path))
    if errs:
        e = errs[0]
        raise ProblemError(e.message, _pointer(e.absolute_path))
    rank = obj["rank"]
    for k, p in enumerate(obj["delta"]):
        if len(p) != rank:
            raise ProblemError(f"expected {rank} coordinates", f"/delta/{k}")
    try:
        delta = hull(obj["delta"], lattice="M")
        parts = [hull(p, lattice="M") for p in obj.get("parts", [obj["delta"]])]
    except (GeometryError, ValueError) as exc:
        raise ProblemError(str(exc), "/delta") from exc
    dv = obj.get("distinguished_vertex")
    return ProblemInstance(
        name=obj.get("name", "problem"),
        rank=rank,
        delta=delta,
        parts=parts,
        sigma_prime_spec=obj.get("sigma_prime", "trivial"),
        sigma_check_prime_spec=obj.get("sigma_check_prime", "trivial"),
        sigma_tilde_prime_spec=obj.get("sigma_tilde_prime", "trivial"),
        h_check_spec=obj.get("h_check", "phi_check"),
        distinguished=vec(dv) if dv is not None else None,
        anchors=obj.get("anchors", {}),
        seed=obj.get("seed", 42),
        trunc=obj.get("trunc", 12),
        raw=obj,
    )


def load(path: str | Path) -> ProblemInstance:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON: {exc}") from exc
    return from_dict(obj)


# ---------------------------------------------------------------------------
# builtins


def _simplex_polar(rank: int, scale: int) -> list[list[int]]:
    """Vertices of the reflexive simplex polar to conv(e_1, ..., e_n, -sum e)."""
    out = []
    for i in range(rank):
        out.append([scale - 1 if j == i else -1 for j in range(rank)])
    out.append([-1] * rank)
    return out


def _cayley_parts(rank: int, blocks: list[set[int]]) -> list[list[list]]:
    rays = [[1 if j == i else 0 for j in range(rank)] for i in range(rank)] + [[-1] * rank]
    parts = []
    for blk in blocks:
        p = from_inequalities([(e, -1 if k in blk else 0) for k, e in enumerate(rays)], lattice="M")
        parts.append([fmt_vec(v) for v in p.vertices])
    return parts


def builtin_dict(name: str) -> dict:
    if name == "quartic-k3":
        return {
            "schema": SCHEMA_VERSION,
            "name": name,
            "rank": 3,
            "delta": _simplex_polar(3, 4),
            "distinguished_vertex": [1, 0, 0],
            "seed": 42,
            "trunc": 12,
        }
    if name == "quintic":
        return {
            "schema": SCHEMA_VERSION,
            "name": name,
            "rank": 4,
            "delta": _simplex_polar(4, 5),
            "distinguished_vertex": [1, 0, 0, 0],
            "seed": 42,
            "trunc": 12,
        }
    if name == "k3-2-3":
        return {
            "schema": SCHEMA_VERSION,
            "name": name,
            "rank": 4,
            "delta": _simplex_polar(4, 5),
            "parts": _cayley_parts(4, [{0, 1}, {2, 3, 4}]),
            "distinguished_vertex": [1, 0, 1, 0],
            "seed": 42,
            "trunc": 12,
        }
    raise ProblemError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")


BUILTINS = ("quartic-k3", "quintic", "k3-2-3")


def builtin(name: str) -> ProblemInstance:
    return from_dict(builtin_dict(name))
