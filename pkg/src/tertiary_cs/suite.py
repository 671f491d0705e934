"""Run the registered checks of a scenario and assemble a JSON-ready report.

Checks run in declaration order.  A check that raises is recorded as
``fail`` with the error message; it never aborts the run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import __version__
from .connections import ConnectionPath, curvature, holonomy
from .exterior import exterior_derivative, sup_norm, wedge
from .generators import Family, build_family
from .identities import run_battery
from .polynomials import InvariantPolynomial, chern_form, flux_curvature, polarized_chern, total_chern_oracle
from .scenario import SCHEMA_VERSION, CheckSpec, Scenario
from .tertiary import (
    IMAG_FINDING_TOL,
    CharacterValue,
    CycleSpec,
    character_difference_check,
    character_of_connection,
    coordinate_cycles,
    mod_z_distance,
    reduce_mod_z,
    rigidity_sweep,
    tertiary_form,
    variational_finite_difference,
    variational_integrand,
)
from .transgression import beta_for_pair, double_transgression, eta_form, fiber_transgression

__all__ = ["run_suite", "render_report", "overall_status", "REPARAMETRIZATIONS"]

# t -> t^2 and t -> 3t^2 - 2t^3, ascending coefficients; both fix 0 and 1
REPARAMETRIZATIONS = (("t^2", (0.0, 0.0, 1.0)), ("3t^2-2t^3", (0.0, 0.0, 3.0, -2.0)))


@dataclass
class _Context:
    scenario: Scenario
    family: Family

    @property
    def dim(self) -> int:
        return self.scenario.dim

    def cycles(self, k: int) -> list[CycleSpec]:
        if k < 1 or k > self.dim:
            return []
        listed = [z for z in self.scenario.cycles if z.dim == k]
        return listed or coordinate_cycles(self.dim, k)

    def sample_connections(self):
        path, sheet = self.family.path, self.family.sheet
        return [
            ("t=0", path.at(0.0)),
            ("t=0.5", path.at(0.5)),
            ("t=1", path.at(1.0)),
            ("s=0.5,t=0.5", sheet.at(0.5, 0.5)),
        ]


@dataclass
class _Result:
    status: str = "pass"
    residuals: dict = None
    values: list = None
    notes: list = None

    def __post_init__(self) -> None:
        self.residuals = {} if self.residuals is None else self.residuals
        self.values = [] if self.values is None else self.values
        self.notes = [] if self.notes is None else self.notes

    def worst(self, key: str, value: float) -> None:
        self.residuals[key] = max(self.residuals.get(key, 0.0), float(value))

    def demand(self, ok: bool) -> None:
        if not ok:
            self.status = "fail"

    def finding(self, note: str) -> None:
        if self.status == "pass":
            self.status = "finding"
        self.notes.append(note)


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _value(label: str, z: CycleSpec | None, p: int, s, raw: complex) -> dict:
    raw = complex(raw)
    return {
        "label": label,
        "cycle": None if z is None else z.to_json(),
        "p": p,
        "s": s,
        "raw": _pair(raw),
        "reduced": _pair(reduce_mod_z(raw)),
    }


def _ps(ctx: _Context, low: int = 1, grade=lambda p: 2 * p - 1) -> list[int]:
    return [p for p in ctx.scenario.p_values if p >= low and grade(p) <= ctx.dim]


# checks ---------------------------------------------------------------------


def _identity_suite(ctx: _Context, tol: float, params: dict) -> _Result:
    sc = ctx.scenario
    res = _Result()
    battery = run_battery(
        params["cases"], seed=sc.seed, max_dim=sc.dim, max_rank=sc.rank, k_max=sc.k_max
    )
    for name, value in battery.items():
        res.worst(name, value)
    for _, c in ctx.sample_connections():
        theta = curvature(c)
        resid = exterior_derivative(theta, strict=False) - wedge(theta, c.A) + wedge(c.A, theta)
        res.worst("bianchi_family", sup_norm(resid))
    res.demand(all(v <= tol for v in res.residuals.values()))
    return res


def _chern_oracle(ctx: _Context, tol: float, params: dict) -> _Result:
    sc = ctx.scenario
    res = _Result()
    use_oracle = sc.rank <= 3 and sc.dim <= 4
    if not use_oracle:
        res.notes.append("determinant oracle skipped: needs rank <= 3 and dim <= 4")
    for _, c in ctx.sample_connections():
        oracle = total_chern_oracle(c) if use_oracle else None
        for p in range(1, min(sc.rank, 4) + 1):
            form = chern_form(c, p)
            if oracle is not None:
                res.worst("oracle", sup_norm(form - oracle[p]))
            if 2 * p < sc.dim:
                res.worst("closed", sup_norm(exterior_derivative(form)))
    res.residuals.setdefault("closed", 0.0)
    res.demand(all(v <= tol for v in res.residuals.values()))
    return res


def _transgression_stokes(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    paths = [("path", ctx.family.path), ("sheet s=0.5", ctx.family.sheet.path_at(0.5))]
    for p in _ps(ctx):
        for _, path in paths:
            report = fiber_transgression(path, p)
            res.worst(f"stokes_p{p}", report.stokes_residual)
            if report.quadrature_nodes:
                doubled = eta_form(path, p, 2 * report.quadrature_nodes)[0]
                res.worst(f"quadrature_p{p}", sup_norm(doubled - report.form))
    res.demand(all(v <= tol for v in res.residuals.values()))
    return res


def _flat_eta_vanishing(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    paths = [ctx.family.path] + [ctx.family.sheet.path_at(s) for s in ctx.scenario.s_grid]
    for p in ctx.scenario.p_values:
        if p < 2:
            continue
        if 2 * p - 1 > ctx.dim:
            res.notes.append(f"p={p}: eta vanishes by degree on T^{ctx.dim}")
        for path in paths:
            res.worst(f"eta_p{p}", sup_norm(eta_form(path, p)[0]))
    res.demand(all(v <= tol for v in res.residuals.values()))
    return res


def _beta_exactness(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    sheet = ctx.family.sheet
    gammas = [("path", ctx.family.path), ("sheet s=0.5", sheet.path_at(0.5))]
    for p in _ps(ctx, 2, lambda p: 2 * p - 2):
        beta = double_transgression(sheet, p, check=False)
        edge = eta_form(sheet.path_at(1.0), p)[0] - eta_form(sheet.path_at(0.0), p)[0]
        res.worst(f"square_stokes_p{p}", sup_norm(exterior_derivative(beta, strict=False) - edge))
        for label, gamma in gammas:
            report = beta_for_pair(gamma, p, tol)
            res.worst(f"exactness_p{p}", report.exactness_residual)
            if report.hodge_status == "ok":
                res.worst(f"hodge_p{p}", report.hodge_residual)
            elif report.hodge_status == "harmonic_obstruction":
                res.worst(f"harmonic_p{p}", report.harmonic_residual)
            else:
                res.demand(False)
                res.notes.append(f"p={p} {label}: TP - eta is not closed")
    res.demand(
        all(v <= tol for k, v in res.residuals.items() if not k.startswith("harmonic"))
    )
    for k in sorted(res.residuals):
        if k.startswith("harmonic"):
            res.finding(f"{k}: TP - eta has a harmonic part, Hodge cross-check skipped")
    return res


def _character_difference(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    for p in _ps(ctx):
        for z in ctx.cycles(2 * p - 1):
            rep = character_difference_check(ctx.family.path, p, z, tol)
            res.worst(f"difference_p{p}", rep.residual)
            res.values.append(_value("start", z, p, None, rep.start.raw))
            res.values.append(_value("end", z, p, None, rep.end.raw))
            res.values.append(_value("eta", z, p, None, rep.eta_integral))
    res.demand(all(v <= tol for v in res.residuals.values()))
    return res


def _endpoint_rigidity(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    path = ctx.family.path
    ps = _ps(ctx, 2)
    if not ps:
        res.notes.append(f"no p >= 2 with 2p - 1 <= {ctx.dim}")
    for p in ps:
        for z in ctx.cycles(2 * p - 1):
            start = character_of_connection(path.at(0.0), p, z)
            end = character_of_connection(path.at(1.0), p, z)
            res.worst(f"spread_p{p}", start.distance(end))
            res.values.append(_value("start", z, p, None, start.raw))
            res.values.append(_value("end", z, p, None, end.raw))
    res.demand(all(v <= tol for v in res.residuals.values()))
    return res


def _tertiary_values(res: _Result, tf, p: int, cycles, s, label: str) -> list[CharacterValue]:
    out = []
    for z in cycles:
        raw = z.integrate(tf.form)
        cv = CharacterValue.from_raw(raw)
        res.values.append(_value(label, z, p, s, raw))
        res.worst("imag", abs(raw.imag))
        out.append(cv)
    for k, v in tf.residuals.items():
        res.worst(f"{k}_p{p}", v)
    return out


def _imag_finding(res: _Result) -> None:
    imag = res.residuals.get("imag", 0.0)
    if imag > IMAG_FINDING_TOL:
        res.finding(f"character values carry imaginary parts up to {imag:.3e}")


def _tertiary_character(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    for p in _ps(ctx, 2, lambda p: 2 * p - 2):
        tf = tertiary_form(ctx.family.path, p)
        _tertiary_values(res, tf, p, ctx.cycles(2 * p - 2), None, "tertiary")
    res.demand(all(v <= tol for k, v in res.residuals.items() if k != "imag"))
    _imag_finding(res)
    return res


def _reparametrization_invariance(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    path = ctx.family.path
    for p in _ps(ctx, 2, lambda p: 2 * p - 2):
        cycles = ctx.cycles(2 * p - 2)
        base = _tertiary_values(res, tertiary_form(path, p), p, cycles, None, "identity")
        for label, phi in REPARAMETRIZATIONS:
            if path.degree * (len(phi) - 1) > 8:
                res.notes.append(f"{label}: reparametrized path degree exceeds 8, skipped")
                continue
            other = _tertiary_values(
                res, tertiary_form(path.reparametrize(phi), p), p, cycles, None, label
            )
            for a, b in zip(base, other):
                res.worst(f"spread_p{p}", a.distance(b))
    internal = {k: v for k, v in res.residuals.items() if not k.startswith("spread") and k != "imag"}
    spreads = {k: v for k, v in res.residuals.items() if k.startswith("spread")}
    res.demand(all(v <= tol for v in spreads.values()))
    res.demand(all(v <= 1e-10 for v in internal.values()))
    _imag_finding(res)
    return res


def _variational_consistency(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    sheet = ctx.family.sheet
    flat = ctx.family.flat
    for p in _ps(ctx, 2):
        for s in params["s_values"]:
            integrand = variational_integrand(sheet, p, s)
            size = sup_norm(integrand)
            if flat:
                res.worst(f"flat_sup_p{p}", size)
                res.demand(size <= params["flat_tol"])
                continue
            fd = variational_finite_difference(sheet, p, s, params["h"])
            scale = max(sup_norm(fd), size)
            rel = sup_norm(integrand - fd) / scale if scale > 1e-14 else 0.0
            res.worst(f"rel_err_p{p}", rel)
            res.demand(rel <= tol)
    if flat and 2 in _ps(ctx, 2):
        res.finding("p=2: integrand vanishes on this flat sheet; recorded, not asserted")
    return res


def _rigidity_sweep(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    s_grid = ctx.scenario.s_grid
    statuses = []
    for p in _ps(ctx, 2, lambda p: 2 * p - 2):
        cycles = ctx.cycles(2 * p - 2)
        sweep = rigidity_sweep(ctx.family.sheet, p, cycles, s_grid, tol)
        statuses.append(sweep.status)
        res.worst(f"spread_p{p}", sweep.spread)
        res.worst(f"dbeta_variation_p{p}", sweep.dbeta_variation)
        for k, v in sweep.residuals.items():
            res.worst(f"{k}_p{p}" if k != "imag" else "imag", v)
        for s, row in zip(sweep.s_grid, sweep.values):
            for z, cv in zip(cycles, row):
                res.values.append(_value("tertiary", z, p, s, cv.raw))
        if sweep.status == "finding":
            res.notes.append(f"p={p}: spread {sweep.spread:.3e} recorded, not asserted")
    if "fail" in statuses:
        res.status = "fail"
    elif "finding" in statuses:
        res.status = "finding"
    _imag_finding(res)
    return res


def _holonomy_basepoint(z: CycleSpec, dim: int) -> list[float]:
    point = [0.0] * dim
    rest = [j for j in range(dim) if j not in z.axes]
    for j, angle in zip(rest, z.basepoint):
        point[j] = angle
    return point


def _holonomy_crosscheck(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    steps = params["steps"]
    path: ConnectionPath = ctx.family.path
    for label, t in (("start", 0.0), ("end", 1.0)):
        c = path.at(t)
        for z in ctx.cycles(1):
            cv = character_of_connection(c, 1, z, allow_nonflat=True)
            point = _holonomy_basepoint(z, ctx.dim)
            hol = holonomy(c, z.axes[0], point, steps)
            fine = holonomy(c, z.axes[0], point, 2 * steps)
            from_hol = complex(np.log(np.linalg.det(hol))) / (2j * math.pi)
            res.worst("character_vs_holonomy", mod_z_distance(cv.value, from_hol))
            res.worst("step_doubling", float(np.max(np.abs(hol - fine))))
            res.worst("unitarity", float(np.max(np.abs(hol.conj().T @ hol - np.eye(c.rank)))))
            res.values.append(_value(label, z, 1, None, cv.raw))
            res.values.append(_value(f"{label} holonomy", z, 1, None, from_hol))
    res.demand(res.residuals.get("character_vs_holonomy", 0.0) <= tol)
    return res


def _period_integrality(ctx: _Context, tol: float, params: dict) -> _Result:
    res = _Result()
    ps = [p for p in ctx.scenario.p_values if 2 * p <= ctx.dim]
    if not ps:
        res.notes.append(f"no p with 2p <= {ctx.dim}")
    for p in ps:
        cycles = ctx.cycles(2 * p)
        for label, c in ctx.sample_connections():
            form = chern_form(c, p)
            for z in cycles:
                period = z.integrate(form)
                res.worst(f"integrality_p{p}", mod_z_distance(period, 0.0))
                res.values.append(_value(f"period {label}", z, p, None, period))
        _flux_periods(ctx, p, cycles, res)
    res.demand(all(v <= tol for v in res.residuals.values()))
    return res


def _flux_periods(ctx: _Context, p: int, cycles, res: _Result) -> None:
    # line bundles of degree (1, -2, 3, ...) on the pairs (0, 1), (2, 3), ...
    # give c_p periods that are non-zero integers
    if ctx.scenario.rank < p:
        return
    n = ctx.dim
    pairs = [(2 * j % (n - n % 2), 2 * j % (n - n % 2) + 1) for j in range(ctx.scenario.rank)]
    fluxes = [((-1) ** j * (j + 1), pair) for j, pair in enumerate(pairs)]
    theta = flux_curvature(ctx.scenario.chart, fluxes)
    form = polarized_chern(InvariantPolynomial(p, ctx.scenario.rank), [theta] * p)
    for z in cycles:
        period = z.integrate(form)
        res.worst(f"flux_integrality_p{p}", mod_z_distance(period, 0.0))
        res.values.append(_value("period flux", z, p, None, period))


CHECK_FUNCTIONS: dict[str, Callable[[_Context, float, dict], _Result]] = {
    "identity_suite": _identity_suite,
    "chern_oracle": _chern_oracle,
    "transgression_stokes": _transgression_stokes,
    "flat_eta_vanishing": _flat_eta_vanishing,
    "beta_exactness": _beta_exactness,
    "character_difference": _character_difference,
    "endpoint_rigidity": _endpoint_rigidity,
    "tertiary_character": _tertiary_character,
    "reparametrization_invariance": _reparametrization_invariance,
    "variational_consistency": _variational_consistency,
    "rigidity_sweep": _rigidity_sweep,
    "holonomy_crosscheck": _holonomy_crosscheck,
    "period_integrality": _period_integrality,
}


def _scaled(spec: CheckSpec, tol_scale: float) -> tuple[float, dict]:
    params = dict(spec.params)
    if "flat_tol" in params:
        params["flat_tol"] = params["flat_tol"] * tol_scale
    return spec.tol * tol_scale, params


def _run_check(ctx: _Context, spec: CheckSpec, tol_scale: float, timing: bool) -> dict:
    tol, params = _scaled(spec, tol_scale)
    start = time.perf_counter()
    try:
        res = CHECK_FUNCTIONS[spec.name](ctx, tol, params)
    except Exception as exc:  # recorded, never propagated
        res = _Result(status="fail", notes=[f"{type(exc).__name__}: {exc}"])
    elapsed = (time.perf_counter() - start) * 1000.0
    return {
        "name": spec.name,
        "status": res.status,
        "tol": tol,
        "residuals": {k: res.residuals[k] for k in sorted(res.residuals)},
        "values": res.values,
        "notes": res.notes,
        "runtime_ms": round(elapsed, 3) if timing else None,
    }


def overall_status(report: dict) -> str:
    statuses = [c["status"] for c in report["checks"]]
    if "fail" in statuses:
        return "fail"
    return "finding" if "finding" in statuses else "pass"


def run_suite(scenario: Scenario, tol_scale: float = 1.0, timing: bool = False) -> dict:
    """Report dictionary for ``scenario``; ``runtime_ms`` is ``None`` unless ``timing``."""
    sc = scenario
    family = build_family(
        sc.generator, sc.chart, sc.rank, dict(sc.generator_params), sc.seed, max(sc.p_values)
    )
    ctx = _Context(sc, family)
    report = {
        "schema": SCHEMA_VERSION,
        "engine": f"tertiary_cs {__version__}",
        "scenario": sc.to_json(),
        "tol_scale": tol_scale,
        "checks": [_run_check(ctx, spec, tol_scale, timing) for spec in sc.checks],
    }
    report["status"] = overall_status(report)
    return report


def _headline(check: dict) -> str:
    if check["residuals"]:
        key = max(check["residuals"], key=lambda k: check["residuals"][k])
        text = f"max {key} = {check['residuals'][key]:.3e}"
    else:
        text = "no residuals"
    if check["notes"]:
        text += f"; {check['notes'][0]}"
    if check.get("runtime_ms") is not None:
        text += f" ({check['runtime_ms']:.0f} ms)"
    return text


def render_report(report: dict) -> str:
    """One header line per scenario, then exactly one line per check."""
    reports = report["reports"] if "reports" in report else [report]
    lines = []
    for r in reports:
        sc = r["scenario"]
        lines.append(
            f"{sc['name']}: {sc['generator']['name']} on T^{sc['chart']['dim']}, "
            f"rank {sc['rank']} -> {r['status'].upper()}"
        )
        for check in r["checks"]:
            lines.append(f"  [{check['status'].upper():7}] {check['name']:<29} {_headline(check)}")
    return "\n".join(lines) + "\n"
