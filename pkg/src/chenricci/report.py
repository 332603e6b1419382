"""Batch verification over sampled points, with deterministic reports."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import hineva
from .errors import ChenRicciError, ConfigError
from .inequalities import (
    InequalityVerdict,
    scalar_decomposition_audit,
    vertical_ricci_verify,
    combined_ricci_verify,
    real_spaceform_verify,
    complex_spaceform_verify,
)
from .manifold import (
    SignConvention,
    kaehler_audit,
    riemann_at,
    validate_complex_space_form,
    validate_real_space_form,
)
from .rmap import (
    gauss_audit,
    map_spaceform_verify,
    map_theorem_verify,
    range_split_at,
    ricci_identity_residual,
    second_fundamental_at,
)
from .scenarios import Scenario, resolve
from .submersion import vertical_gauss_audit, horizontal_curvature_audit, mixed_curvature_audit, point_geometry, vertical_ricci_identity

SUBMERSION_THEOREMS = ("t31", "t41", "t53", "t54")
MAP_THEOREMS = ("t62", "t65", "t66")
THEOREMS = SUBMERSION_THEOREMS + MAP_THEOREMS + ("audits", "hineva-fuzz")
POLICIES = ("auto", "modern", "oneill")
FORMATS = ("json", "csv")
FAMILY_DEFAULT = {"submersion": SignConvention.ONEILL, "map": SignConvention.MODERN}
CSV_COLUMNS = ("point_index", "theorem", "lhs", "rhs", "slack", "equality", "convention")

EXIT_OK, EXIT_VIOLATED, EXIT_AUDIT, EXIT_CONFIG = 0, 1, 2, 3


class RunError(ChenRicciError):
    """A hard numeric failure at a specific point and operation."""

    def __init__(self, message: str, point_index: int | None, point, operation: str):
        super().__init__(message)
        self.point_index = point_index
        self.point = None if point is None else [float(x) for x in point]
        self.operation = operation

    def record(self) -> dict:
        return {
            "error": type(self.__cause__).__name__ if self.__cause__ else "RunError",
            "message": str(self),
            "point_index": self.point_index,
            "point": self.point,
            "operation": self.operation,
        }


@dataclass(frozen=True)
class RunConfig:
    scenario: str | None = "warped-s3"
    theorems: tuple[str, ...] = ("all",)
    samples: int = 25
    seed: int = 0
    tol_slack: float = 1e-6
    tol_identity: float = 1e-5
    tol_equality: float = 1e-8
    convention: str = "auto"
    format: str = "json"
    out: str | None = None
    hineva_trials: int = 10_000
    hineva_sizes: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)

    def __post_init__(self):
        if self.samples < 1:
            raise ConfigError("sample count must be >= 1")
        for name in ("tol_slack", "tol_identity", "tol_equality"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(f"{name} must be a positive number")
        if self.convention not in POLICIES:
            raise ConfigError(f"convention must be one of {POLICIES}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}")
        bad = [t for t in self.theorems if t not in THEOREMS + ("all",)]
        if bad:
            raise ConfigError(f"unknown theorem id(s) {bad}; choose from {THEOREMS}")
        if self.hineva_trials < 1:
            raise ConfigError("hineva trial count must be >= 1")
        if any(n < 2 for n in self.hineva_sizes):
            raise ConfigError("hineva sizes must be >= 2")
        if self.scenario is None and set(self.theorems) != {"hineva-fuzz"}:
            raise ConfigError("a scenario is required unless only hineva-fuzz is run")

    def echo(self) -> dict:
        d = asdict(self)
        d["theorems"] = list(self.theorems)
        d["hineva_sizes"] = list(self.hineva_sizes)
        d.pop("out")
        return d


@dataclass
class Report:
    config: dict
    identity_audits: dict
    verdicts: list[dict]
    summary: dict
    wall_time: float = field(default=0.0, compare=False)

    @property
    def exit_code(self) -> int:
        return int(self.summary["exit_code"])

    def payload(self) -> dict:
        """The serialized part; wall time is left out so reports stay byte-identical."""
        return {
            "config": self.config,
            "identity_audits": self.identity_audits,
            "verdicts": self.verdicts,
            "summary": self.summary,
        }


# --- theorem selection -----------------------------------------------------------------


def _selected_theorems(config: RunConfig, scn: Scenario | None) -> list[str]:
    explicit = "all" not in config.theorems
    wanted = list(THEOREMS) if not explicit else [t for t in THEOREMS if t in config.theorems]
    if scn is None:
        return wanted
    out = []
    for t in wanted:
        ok, why = _applicable(t, scn)
        if ok:
            out.append(t)
        elif explicit:
            raise ConfigError(f"{t} does not apply to scenario {scn.name}: {why}")
    if not explicit:
        # the fuzz is scenario-independent; "all" on a scenario means the geometric checks
        out = [t for t in out if t != "hineva-fuzz"]
    return out


def _applicable(t: str, scn: Scenario) -> tuple[bool, str]:
    if t in ("audits", "hineva-fuzz"):
        return True, ""
    if t in SUBMERSION_THEOREMS:
        if scn.kind != "submersion":
            return False, "needs a submersion"
        if scn.mapping.ell < 2:
            return False, "needs fiber dimension >= 2"
        if t == "t53" and scn.real_space_form is None:
            return False, "domain is not declared a real space form"
        if t == "t54" and scn.complex_space_form is None:
            return False, "domain is not declared a complex space form"
        return True, ""
    if scn.kind != "map":
        return False, "needs a Riemannian map"
    if scn.mapping.rank < 2:
        return False, "needs rank >= 2"
    if t == "t65" and scn.real_space_form is None:
        return False, "target is not declared a real space form"
    if t == "t66" and scn.complex_space_form is None:
        return False, "target is not declared a complex space form"
    return True, ""


# --- records ----------------------------------------------------------------------------


def _clean(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    return v


def _record(index: int, v: InequalityVerdict, audit_residual: float | None) -> dict:
    rec = {
        "point_index": index,
        "point": list(v.point),
        "theorem": v.theorem,
        "lhs": v.lhs,
        "rhs": v.rhs,
        "slack": v.slack,
        "equality": v.equality,
        "convention": v.convention,
        "audit_residual": audit_residual,
    }
    extra = {k: x for k, x in v.extra.items() if isinstance(x, (bool, int, float, np.floating))}
    if v.diagnostics is not None:
        extra["diagonal_residual"] = v.diagnostics.max_diagonal_residual
        extra["rho_spread"] = v.diagnostics.rho_spread
        extra["cauchy_schwarz_residual"] = v.diagnostics.cauchy_schwarz_residual
    rec["extra"] = _clean(extra)
    return rec


def _guard(index, point, operation, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ChenRicciError as err:
        raise RunError(f"{operation} failed at point {index}: {err}", index, point, operation) from err


# --- runners ------------------------------------------------------------------------------


def _pick(residuals: dict[str, float], family: str) -> SignConvention:
    m, o = residuals["modern"], residuals["oneill"]
    if m == o:
        return FAMILY_DEFAULT[family]
    return SignConvention.MODERN if m < o else SignConvention.ONEILL


def _max(values) -> float:
    values = list(values)
    return float(max(values)) if values else 0.0


def _run_submersion(config: RunConfig, scn: Scenario, theorems: list[str]):
    F = scn.mapping
    pts = scn.points(config.samples, config.seed)
    need_delta = any(t in theorems for t in ("t41", "t53", "t54", "audits"))
    geoms = [_guard(k, p, "point geometry", point_geometry, F, p, with_delta=need_delta) for k, p in enumerate(pts)]
    independent = all(pg.Rker is not None for pg in geoms)
    selector = "vertical_gauss" if independent else "horizontal_curvature"
    select_fn = vertical_gauss_audit if independent else horizontal_curvature_audit
    per_point = {c: [select_fn(pg, c) for pg in geoms] for c in ("modern", "oneill")}
    residuals = {c: _max(per_point[c]) for c in per_point}
    if config.convention == "auto":
        conv = _pick(residuals, "submersion")
    else:
        conv = SignConvention.parse(config.convention)
    audits = {
        "family": "submersion",
        "selector": selector,
        "selected": conv.value,
        "policy": config.convention,
        "gating": {selector: residuals},
        "independent_fiber_curvature": independent,
    }
    if "audits" in theorems:
        extra = {}
        for name, fn in (
            ("horizontal_curvature", lambda pg, c: horizontal_curvature_audit(pg, c)),
            ("vertical_ricci", vertical_ricci_identity),
            ("scalar_decomposition", lambda pg, c: scalar_decomposition_audit(F, pg, c)),
            ("mixed_curvature", lambda pg, c: mixed_curvature_audit(F, pg, c)),
        ):
            if name == selector:
                continue
            extra[name] = {
                c: _max(_guard(k, pg.frame.point, name, fn, pg, c) for k, pg in enumerate(geoms)) for c in ("modern", "oneill")
            }
        audits["reported"] = extra
    records = []
    for k, pg in enumerate(geoms):
        ar = per_point[conv.value][k]
        for t in theorems:
            p = pg.frame.point
            if t == "t31":
                records.append(_record(k, _guard(k, p, t, vertical_ricci_verify, F, pg, conv, config.tol_equality), ar))
            elif t == "t41":
                records.append(_record(k, _guard(k, p, t, combined_ricci_verify, F, pg, conv, config.tol_equality), ar))
            elif t == "t53":
                for v in _guard(k, p, t, real_spaceform_verify, F, pg, scn.real_space_form, conv, config.tol_equality):
                    records.append(_record(k, v, ar))
            elif t == "t54":
                for v in _guard(k, p, t, complex_spaceform_verify, F, pg, scn.complex_space_form, conv, config.tol_equality):
                    records.append(_record(k, v, ar))
    return audits, records


def _run_map(config: RunConfig, scn: Scenario, theorems: list[str]):
    F = scn.mapping
    pts = scn.points(config.samples, config.seed)
    splits = [_guard(k, p, "range split", range_split_at, F, p) for k, p in enumerate(pts)]
    sffs = [_guard(k, p, "second fundamental form", second_fundamental_at, F, s) for k, (p, s) in enumerate(zip(pts, splits))]
    per_point = {c: [gauss_audit(F, s, c, b) for s, b in zip(splits, sffs)] for c in ("modern", "oneill")}
    residuals = {c: _max(per_point[c]) for c in per_point}
    conv = _pick(residuals, "map") if config.convention == "auto" else SignConvention.parse(config.convention)
    audits = {
        "family": "map",
        "selector": "gauss",
        "selected": conv.value,
        "policy": config.convention,
        "gating": {"gauss": residuals},
    }
    if "audits" in theorems:
        audits["reported"] = {
            "ricci_identity": {c: _max(ricci_identity_residual(F, s, c, b) for s, b in zip(splits, sffs)) for c in ("modern", "oneill")},
            "range_containment": _max(b.containment_residual for b in sffs),
            "symmetry": _max(b.symmetry_residual for b in sffs),
            "isometry": _max(s.isometry_residual for s in splits),
        }
    records = []
    for k, s in enumerate(splits):
        ar = per_point[conv.value][k]
        for t in theorems:
            if t == "t62":
                records.append(_record(k, _guard(k, s.point, t, map_theorem_verify, F, s, conv, config.tol_equality), ar))
            elif t == "t65":
                records.append(_record(k, _guard(k, s.point, t, map_spaceform_verify, F, s, "real", scn.real_space_form, conv, config.tol_equality), ar))
            elif t == "t66":
                records.append(_record(k, _guard(k, s.point, t, map_spaceform_verify, F, s, "complex", scn.complex_space_form, conv, config.tol_equality), ar))
    return audits, records


def _run_manifold(config: RunConfig, scn: Scenario):
    M = scn.domain
    pts = scn.points(config.samples, config.seed)
    out = {"family": "manifold", "gating": {}}
    if scn.real_space_form is not None:
        out["gating"]["real_space_form"] = _guard(None, None, "real space form", validate_real_space_form, M, scn.real_space_form, pts)
    if scn.complex_space_form is not None:
        out["gating"]["complex_space_form"] = _guard(None, None, "complex space form", validate_complex_space_form, M, scn.complex_space_form, pts)
        out["gating"]["kaehler"] = _guard(None, None, "kaehler", kaehler_audit, M, pts)
    out["reported"] = {"curvature_symmetry": _max(riemann_at(M, p).symmetry_residual() for p in pts)}
    return out


def _run_hineva(config: RunConfig) -> list[dict]:
    records = []
    for k, n in enumerate(config.hineva_sizes):
        worst = hineva.oracle_min_slack(n, config.hineva_trials, config.seed)
        records.append(
            {
                "point_index": k,
                "point": [float(n)],
                "theorem": f"hineva-{n}",
                "lhs": worst,
                "rhs": 0.0,
                "slack": worst,
                "equality": bool(abs(worst) <= config.tol_equality),
                "convention": "none",
                "audit_residual": None,
                "extra": {"trials": config.hineva_trials},
            }
        )
    return records


def _summary(config: RunConfig, audits: dict, records: list[dict]) -> dict:
    per: dict[str, dict] = {}
    for r in records:
        s = per.setdefault(r["theorem"], {"points": 0, "min_slack": math.inf, "max_slack": -math.inf, "equality_points": 0, "violations": 0})
        s["points"] += 1
        s["min_slack"] = min(s["min_slack"], r["slack"])
        s["max_slack"] = max(s["max_slack"], r["slack"])
        s["equality_points"] += int(r["equality"])
        s["violations"] += int(r["slack"] < -config.tol_slack)
    gating = []
    for fam in audits.values():
        for name, val in fam.get("gating", {}).items():
            gating.append(val[fam["selected"]] if isinstance(val, dict) else val)
    max_res = _max(gating)
    audit_failed = max_res > config.tol_identity
    violated = any(s["violations"] for s in per.values())
    code = EXIT_AUDIT if audit_failed else (EXIT_VIOLATED if violated else EXIT_OK)
    return {
        "theorems": per,
        "max_identity_residual": max_res,
        "audit_failed": audit_failed,
        "inequality_violated": violated,
        "exit_code": code,
    }


def recompute_summary(config: RunConfig, identity_audits: dict, verdicts: list[dict]) -> dict:
    """Summary fields from the per-point records alone."""
    return _summary(config, identity_audits, verdicts)


def run(config: RunConfig) -> Report:
    start = time.perf_counter()
    scn = resolve(config.scenario) if config.scenario is not None else None
    theorems = _selected_theorems(config, scn)
    audits: dict = {}
    records: list[dict] = []
    if scn is not None:
        if scn.kind == "submersion":
            geo = [t for t in theorems if t != "hineva-fuzz"]
            fam, records = _run_submersion(config, scn, geo)
            audits["submersion"] = fam
        elif scn.kind == "map":
            geo = [t for t in theorems if t != "hineva-fuzz"]
            fam, records = _run_map(config, scn, geo)
            audits["map"] = fam
        else:
            audits["manifold"] = _run_manifold(config, scn)
    if "hineva-fuzz" in theorems:
        records.extend(_run_hineva(config))
    records = [_clean(r) for r in records]
    audits = _clean(audits)
    cfg = config.echo()
    cfg["resolved_theorems"] = theorems
    if scn is not None:
        cfg["scenario_name"] = scn.name
    return Report(cfg, audits, records, _summary(config, audits, records), time.perf_counter() - start)


# --- emission ----------------------------------------------------------------------------------


def _num(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def _dump(v, out: list[str]) -> None:
    if v is None or isinstance(v, bool):
        out.append(json.dumps(v))
    elif isinstance(v, int):
        out.append(str(v))
    elif isinstance(v, float):
        out.append(_num(v))
    elif isinstance(v, str):
        out.append(json.dumps(v))
    elif isinstance(v, dict):
        out.append("{")
        for i, (k, x) in enumerate(v.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _dump(x, out)
        out.append("}")
    elif isinstance(v, (list, tuple)):
        out.append("[")
        for i, x in enumerate(v):
            if i:
                out.append(", ")
            _dump(x, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps_json(obj) -> str:
    out: list[str] = []
    _dump(obj, out)
    return "".join(out)


def emit(report: Report, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (dumps_json(report.payload()) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in report.verdicts:
            w.writerow([r["point_index"], r["theorem"], _num(r["lhs"]), _num(r["rhs"]), _num(r["slack"]), str(r["equality"]).lower(), r["convention"]])
        return buf.getvalue().encode()
    raise ConfigError(f"unknown format {fmt!r}")


def parse_csv(data: bytes) -> list[dict]:
    rows = []
    for row in csv.DictReader(io.StringIO(data.decode())):
        rows.append(
            {
                "point_index": int(row["point_index"]),
                "theorem": row["theorem"],
                "lhs": float(row["lhs"]) if row["lhs"] != "null" else math.nan,
                "rhs": float(row["rhs"]) if row["rhs"] != "null" else math.nan,
                "slack": float(row["slack"]) if row["slack"] != "null" else math.nan,
                "equality": row["equality"] == "true",
                "convention": row["convention"],
            }
        )
    return rows
