"""Strict JSON scenario schema.

A scenario names a generator family on a torus chart and lists the checks
to run.  Unknown keys anywhere are rejected with :class:`SchemaError`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ParseError, SchemaError
from .exterior import TorusChart
from .generators import GENERATORS, build_family
from .tertiary import CycleSpec

__all__ = [
    "SCHEMA_VERSION",
    "CHECKS",
    "FLAT_ONLY_CHECKS",
    "CheckSpec",
    "Scenario",
    "parse_scenario",
    "load_scenario",
]

SCHEMA_VERSION = 1

# name -> (default tolerance, default params)
CHECKS: dict[str, tuple[float, dict]] = {
    "identity_suite": (1e-11, {"cases": 20}),
    "chern_oracle": (1e-10, {}),
    "transgression_stokes": (1e-10, {}),
    "flat_eta_vanishing": (1e-12, {}),
    "beta_exactness": (1e-10, {}),
    "character_difference": (1e-8, {}),
    "endpoint_rigidity": (1e-8, {}),
    "tertiary_character": (1e-10, {}),
    "reparametrization_invariance": (1e-9, {}),
    "variational_consistency": (1e-4, {"h": 1e-3, "s_values": [0.3, 0.7], "flat_tol": 1e-11}),
    "rigidity_sweep": (1e-8, {}),
    "holonomy_crosscheck": (1e-8, {"steps": 2048}),
    "period_integrality": (1e-9, {}),
}

# These assume a flat family; running them on a non-flat generator is a schema error.
FLAT_ONLY_CHECKS = frozenset(
    {
        "flat_eta_vanishing",
        "endpoint_rigidity",
        "tertiary_character",
        "reparametrization_invariance",
        "rigidity_sweep",
    }
)

_TOP_KEYS = {
    "schema",
    "name",
    "description",
    "chart",
    "rank",
    "k_max",
    "generator",
    "checks",
    "cycles",
    "p_values",
    "s_grid",
    "seed",
}
_REQUIRED = ("name", "chart", "rank", "k_max", "generator", "checks")


@dataclass(frozen=True)
class CheckSpec:
    name: str
    tol: float
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "tol": self.tol, "params": dict(self.params)}


@dataclass(frozen=True)
class Scenario:
    name: str
    dim: int
    rank: int
    k_max: int
    generator: str
    generator_params: dict
    checks: tuple
    cycles: tuple = ()
    p_values: tuple = (1, 2)
    s_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    seed: int = 0
    description: str = ""

    @property
    def chart(self) -> TorusChart:
        return TorusChart(self.dim, self.k_max)

    def with_seed(self, seed: int) -> Scenario:
        return replace(self, seed=int(seed))

    def to_json(self) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "chart": {"dim": self.dim},
            "rank": self.rank,
            "k_max": self.k_max,
            "generator": {"name": self.generator, "params": dict(self.generator_params)},
            "checks": [c.to_json() for c in self.checks],
            "cycles": [z.to_json() for z in self.cycles],
            "p_values": list(self.p_values),
            "s_grid": list(self.s_grid),
            "seed": self.seed,
        }
        if self.description:
            out["description"] = self.description
        return out


def _int(value, key: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(key, "expected an integer")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise SchemaError(key, f"must lie in [{lo}, {hi}]")
    return value


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(key, "expected a number")
    return float(value)


def _object(value, key: str, allowed: set[str]) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(key, "expected an object")
    for k in value:
        if k not in allowed:
            raise SchemaError(f"{key}.{k}" if key else k, "unknown key")
    return value


def _parse_check(entry, index: int) -> CheckSpec:
    key = f"checks[{index}]"
    if isinstance(entry, str):
        entry = {"name": entry}
    entry = _object(entry, key, {"name", "tol", "params"})
    name = entry.get("name")
    if name not in CHECKS:
        raise SchemaError(f"{key}.name", f"unknown check {name!r}")
    default_tol, default_params = CHECKS[name]
    tol = _number(entry.get("tol", default_tol), f"{key}.tol")
    if not tol > 0:
        raise SchemaError(f"{key}.tol", "tolerance must be > 0")
    params = dict(default_params)
    given = _object(entry.get("params", {}), f"{key}.params", set(default_params))
    for k, v in given.items():
        want = default_params[k]
        if isinstance(want, list):
            if not isinstance(v, list) or not v:
                raise SchemaError(f"{key}.params.{k}", "expected a non-empty list")
            v = [_number(x, f"{key}.params.{k}") for x in v]
        elif isinstance(want, int):
            v = _int(v, f"{key}.params.{k}", 1)
        else:
            v = _number(v, f"{key}.params.{k}")
            if not v > 0:
                raise SchemaError(f"{key}.params.{k}", "must be > 0")
        params[k] = v
    return CheckSpec(name, tol, params)


def _parse_cycle(entry, index: int, dim: int) -> CycleSpec:
    key = f"cycles[{index}]"
    entry = _object(entry, key, {"axes", "basepoint"})
    axes = entry.get("axes")
    if not isinstance(axes, list) or not axes:
        raise SchemaError(f"{key}.axes", "expected a non-empty list of axes")
    axes = [_int(a, f"{key}.axes", 0, dim - 1) for a in axes]
    if len(set(axes)) != len(axes):
        raise SchemaError(f"{key}.axes", "axes must be distinct")
    base = entry.get("basepoint", [0.0] * (dim - len(axes)))
    if not isinstance(base, list) or len(base) != dim - len(axes):
        raise SchemaError(f"{key}.basepoint", f"expected {dim - len(axes)} angles")
    return CycleSpec(tuple(axes), tuple(_number(b, f"{key}.basepoint") for b in base))


def parse_scenario(data) -> Scenario:
    top = _object(data, "", _TOP_KEYS)
    for k in _REQUIRED:
        if k not in top:
            raise SchemaError(k, "missing required key")
    if "schema" in top and top["schema"] != SCHEMA_VERSION:
        raise SchemaError("schema", f"unsupported schema version {top['schema']!r}")
    name = top["name"]
    if not isinstance(name, str) or not name:
        raise SchemaError("name", "expected a non-empty string")
    chart = _object(top["chart"], "chart", {"dim"})
    if "dim" not in chart:
        raise SchemaError("chart.dim", "missing required key")
    dim = _int(chart["dim"], "chart.dim", 1, 6)
    rank = _int(top["rank"], "rank", 1, 4)
    k_max = _int(top["k_max"], "k_max", 0, 31)

    gen = _object(top["generator"], "generator", {"name", "params"})
    gen_name = gen.get("name")
    if gen_name not in GENERATORS:
        raise SchemaError("generator.name", f"unknown generator {gen_name!r}")
    spec = GENERATORS[gen_name]
    gen_params = _object(gen.get("params", {}), "generator.params", set(spec.defaults))

    raw_checks = top["checks"]
    if not isinstance(raw_checks, list) or not raw_checks:
        raise SchemaError("checks", "expected a non-empty list")
    checks = tuple(_parse_check(c, i) for i, c in enumerate(raw_checks))
    if len({c.name for c in checks}) != len(checks):
        raise SchemaError("checks", "each check may appear once")
    if not spec.flat:
        for i, c in enumerate(checks):
            if c.name in FLAT_ONLY_CHECKS:
                raise SchemaError(f"checks[{i}].name", f"{c.name} needs a flat generator")

    p_values = top.get("p_values", [1, 2] if dim >= 2 else [1])
    if not isinstance(p_values, list) or not p_values:
        raise SchemaError("p_values", "expected a non-empty list")
    p_values = [_int(p, "p_values", 1, 4) for p in p_values]
    for p in p_values:
        if 2 * p - 2 > dim:
            raise SchemaError("p_values", f"p = {p} needs 2p - 2 <= dim = {dim}")

    cycles = top.get("cycles", [])
    if not isinstance(cycles, list):
        raise SchemaError("cycles", "expected a list")
    cycles = tuple(_parse_cycle(z, i, dim) for i, z in enumerate(cycles))

    s_grid = top.get("s_grid", [0.0, 0.25, 0.5, 0.75, 1.0])
    if not isinstance(s_grid, list) or not s_grid:
        raise SchemaError("s_grid", "expected a non-empty list")
    s_grid = [_number(s, "s_grid") for s in s_grid]
    if any(not 0.0 <= s <= 1.0 for s in s_grid):
        raise SchemaError("s_grid", "values must lie in [0, 1]")

    seed = _int(top.get("seed", 0), "seed", 0)
    description = top.get("description", "")
    if not isinstance(description, str):
        raise SchemaError("description", "expected a string")

    scenario = Scenario(
        name=name,
        dim=dim,
        rank=rank,
        k_max=k_max,
        generator=gen_name,
        generator_params=dict(gen_params),
        checks=checks,
        cycles=cycles,
        p_values=tuple(p_values),
        s_grid=tuple(s_grid),
        seed=seed,
        description=description,
    )
    # Build once so generator-level constraints surface as schema errors.
    try:
        build_family(gen_name, scenario.chart, rank, dict(gen_params), seed, max(p_values))
    except SchemaError:
        raise
    except (TypeError, ValueError) as exc:
        raise SchemaError("generator.params", str(exc)) from exc
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(str(path), 0, 0, str(exc)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), exc.lineno, exc.colno, exc.msg) from exc
    return parse_scenario(data)
