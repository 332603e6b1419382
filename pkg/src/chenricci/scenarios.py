"""Bundled geometries with closed-form expectations, and the scenario file format.

A scenario file is INI-style::

    [scenario]
    name = warped-s3
    kind = submersion            ; submersion | map | manifold
    real_space_form = 1          ; optional, curvature of the domain (target for maps)

    [manifold.domain]
    dim = 3
    box_1 = 0.3, 2.84
    g_1_1 = 1
    g_2_2 = sin(x1)^2
    J_1_2 = -1                   ; optional complex structure, 1-based

    [manifold.target]
    ...

    [map]
    F_1 = x1
    rank = 2                     ; maps only

Metric entries are 1-based and symmetric; give each off-diagonal pair once.
"""

from __future__ import annotations

import configparser
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import expr as ex
from .errors import ExprError, GeometryError, ScenarioError
from .jets import Jet
from .manifold import Box, ChartManifold, metric_jet
from .rmap import RiemannianMapSpec
from .submersion import RiemannianSubmersion

KINDS = ("submersion", "map", "manifold")
SUBMERSION_FAMILY = "submersion"
MAP_FAMILY = "map"


@dataclass(frozen=True)
class Expectation:
    """A closed-form value as a function of the sample point."""

    value: Callable[[np.ndarray], object]
    tol: float
    source: str = "closed form"

    def __call__(self, p):
        return self.value(np.asarray(p, dtype=float))


@dataclass(eq=False)
class Scenario:
    name: str
    kind: str
    domain: ChartManifold
    target: ChartManifold | None = None
    mapping: RiemannianSubmersion | RiemannianMapSpec | None = None
    real_space_form: float | None = None
    complex_space_form: float | None = None
    expectations: dict[str, Expectation] = field(default_factory=dict)
    equality: dict[str, bool] = field(default_factory=dict)
    conventions: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScenarioError(f"unknown scenario kind {self.kind!r}")
        if self.kind != "manifold" and self.mapping is None:
            raise ScenarioError(f"{self.kind} scenario needs a map")
        if not self.conventions:
            self.conventions = {"submersion": "oneill", "map": "modern"}

    @property
    def sampling_box(self) -> Box:
        return self.domain.sampling_box

    def points(self, count: int, seed: int) -> np.ndarray:
        return self.sampling_box.sample(count, seed)

    @property
    def space_form_manifold(self) -> ChartManifold:
        return self.target if self.kind == "map" else self.domain


# --- helpers for building manifolds ---------------------------------------------------


def _box(lo, hi) -> Box:
    return Box(tuple(float(x) for x in lo), tuple(float(x) for x in hi))


def _cube(n: int, half: float) -> Box:
    return _box([-half] * n, [half] * n)


def _sum_sq(n: int, offset: int = 0) -> str:
    return "+".join(f"x{k + 1 + offset}^2" for k in range(n))


def _standard_J(n: int) -> np.ndarray:
    """J ∂_{x(2j-1)} = ∂_{x(2j)}."""
    J = np.zeros((n, n))
    for j in range(0, n, 2):
        J[j + 1, j] = 1.0
        J[j, j + 1] = -1.0
    return J


def _flat(n: int, box: Box, J=None, name: str = "flat") -> ChartManifold:
    return ChartManifold.euclidean(n, box, J, name)


def stereographic_sphere(n: int, c: float, box: Box | None = None) -> ChartManifold:
    """4/(1 + c|x|²)² δ: constant curvature c."""
    if box is None:
        half = 2.0 / math.sqrt(c) if c > 0 else (0.9 / math.sqrt(-c) if c < 0 else 2.0)
        box = _cube(n, half)
    conf = f"4/(1+{c!r}*({_sum_sq(n)}))^2"
    return ChartManifold.from_entries(n, {(i, i): conf for i in range(n)}, box, name=f"S^{n}({c:g})")


def fubini_study(n: int, c: float, box: Box | None = None) -> ChartManifold:
    """Fubini–Study metric of holomorphic curvature c on the affine chart of CPⁿ."""
    if c <= 0:
        raise ScenarioError("fubini-study needs c > 0")
    dim = 2 * n
    box = box or _cube(dim, 1.5)
    kappa = 4.0 / c
    S = f"(1+{_sum_sq(dim)})"
    entries = {}
    for j in range(n):
        for k in range(j, n):
            aj, bj, ak, bk = f"x{2 * j + 1}", f"x{2 * j + 2}", f"x{2 * k + 1}", f"x{2 * k + 2}"
            delta = S if j == k else "0"
            re_h = f"{kappa!r}*({delta}-({aj}*{ak}+{bj}*{bk}))/{S}^2"
            entries[(2 * j, 2 * k)] = re_h
            entries[(2 * j + 1, 2 * k + 1)] = re_h
            if j != k:
                im_jk = f"-{kappa!r}*({aj}*{bk}-{bj}*{ak})/{S}^2"  # g(a_j, b_k)
                im_kj = f"-{kappa!r}*({ak}*{bj}-{bk}*{aj})/{S}^2"  # g(a_k, b_j) = g(b_j, a_k)
                entries[(2 * j, 2 * k + 1)] = im_jk
                entries[(2 * j + 1, 2 * k)] = im_kj
    return ChartManifold.from_entries(dim, entries, box, J=_standard_J(dim), name=f"CP^{n}({c:g})")


def _warped_domain(f: str, fiber: dict, box: Box, name: str) -> ChartManifold:
    entries = {(0, 0): "1"}
    for (i, j), e in fiber.items():
        entries[(i, j)] = f"({f})^2*({e})" if e != "1" else f"({f})^2"
    return ChartManifold.from_entries(3, entries, box, name=name)


def _log_derivatives(f: ex.Expr, t: float) -> tuple[float, float]:
    """(f'/f, (log f)'') at t for a function of x1 only."""
    env: list = [0.0] * ex.MAX_VARIABLES
    env[0] = Jet.variable(t, 0, 1, True)
    out = ex.evaluate_jet(f, env)
    if not isinstance(out, Jet):
        return 0.0, 0.0
    v, d1, d2 = out.v, float(out.g[0]), float(out.h[0, 0])
    return d1 / v, d2 / v - (d1 / v) ** 2


def _umbilical_expectations(logd: Callable[[float], tuple[float, float]], fiber_curv: Callable[[float], float], ambient: float | None) -> dict[str, Expectation]:
    """Closed forms for dt² + f(t)² g_fiber projected onto t (two-dimensional fibers)."""
    ell = 2

    def T(p):
        k, _ = logd(p[0])
        return -k * np.eye(ell)[:, :, None]

    out = {
        "T": Expectation(T, 1e-8),
        "H2": Expectation(lambda p: logd(p[0])[0] ** 2, 1e-8),
        "TV2": Expectation(lambda p: ell * logd(p[0])[0] ** 2, 1e-8),
        "A": Expectation(lambda p: np.zeros((1, 1, ell)), 1e-10),
        "delta": Expectation(lambda p: -ell * logd(p[0])[1], 1e-5),
        # intrinsic curvature of the fiber through p (modern sign)
        "fiber_ric": Expectation(lambda p: fiber_curv(p[0]), 1e-6),
    }
    if ambient is not None:
        out["ric_v"] = Expectation(lambda p: ambient * (ell - 1), 1e-6)
        out["ric_h"] = Expectation(lambda p: 0.0, 1e-6)
        out["mixed"] = Expectation(lambda p: ambient * ell, 1e-6)
    return out


def _line(lo: float, hi: float) -> ChartManifold:
    return _flat(1, _box([lo], [hi]), name="R")


# --- builtins ------------------------------------------------------------------------


def flat_projection(ell: int = 2, r: int = 1) -> Scenario:
    ell, r = int(ell), int(r)
    if ell < 1 or r < 1 or ell + r > ex.MAX_VARIABLES:
        raise ScenarioError("flat-projection needs ell, r >= 1 and ell + r <= 16")
    n = ell + r
    dom = _flat(n, _cube(n, 1.0), name=f"R^{n}")
    tgt = _flat(r, _cube(r, 1.0), name=f"R^{r}")
    F = RiemannianSubmersion(dom, tgt, tuple(ex.Var(f"x{k + 1}") for k in range(r)), f"flat-projection({ell},{r})")
    zero = Expectation(lambda p: 0.0, 1e-12, "trivial")
    exp = {k: zero for k in ("H2", "TV2", "delta", "fiber_ric", "ric_v", "ric_h", "mixed")}
    exp["T"] = Expectation(lambda p: np.zeros((ell, ell, r)), 1e-12, "trivial")
    exp["A"] = Expectation(lambda p: np.zeros((r, r, ell)), 1e-12, "trivial")
    eq = {"t31": True, "t41": True, "t53.v": True, "t53.hv": True}
    return Scenario(F.name, "submersion", dom, tgt, F, real_space_form=0.0, expectations=exp, equality=eq)


def warped_s3() -> Scenario:
    lo, hi = 0.3, math.pi - 0.3
    box = _box([lo, lo, -math.pi], [hi, hi, math.pi])
    dom = _warped_domain("sin(x1)", {(1, 1): "1", (2, 2): "sin(x2)^2"}, box, "warped-S3")
    F = RiemannianSubmersion(dom, _line(lo, hi), (ex.Var("x1"),), "warped-s3")
    exp = _umbilical_expectations(
        lambda t: (1.0 / math.tan(t), -1.0 / math.sin(t) ** 2),
        lambda t: 1.0 / math.sin(t) ** 2,
        ambient=1.0,
    )
    eq = {"t31": True, "t41": True, "t53.v": True, "t53.hv": True}
    return Scenario("warped-s3", "submersion", dom, F.target, F, real_space_form=1.0, expectations=exp, equality=eq)


def warped_h3() -> Scenario:
    box = _cube(3, 1.0)
    dom = _warped_domain("exp(x1)", {(1, 1): "1", (2, 2): "1"}, box, "warped-H3")
    F = RiemannianSubmersion(dom, _line(-1.0, 1.0), (ex.Var("x1"),), "warped-h3")
    exp = _umbilical_expectations(lambda t: (1.0, 0.0), lambda t: 0.0, ambient=-1.0)
    eq = {"t31": True, "t41": True, "t53.v": True, "t53.hv": True}
    return Scenario("warped-h3", "submersion", dom, F.target, F, real_space_form=-1.0, expectations=exp, equality=eq)


def warped_custom(f: str = "cosh(x1)", lo: float = -1.0, hi: float = 1.0) -> Scenario:
    """dt² + f(t)²(dx² + dy²) over t ∈ [lo, hi], projected onto t."""
    try:
        fe = ex.parse(f) if isinstance(f, str) else f
    except ExprError as err:
        raise ScenarioError(f"warp function: {err}") from err
    if ex.free_variables(fe) - {"x1"}:
        raise ScenarioError("warp function must depend on x1 only")
    lo, hi = float(lo), float(hi)
    for t in np.linspace(lo, hi, 257):
        env: list = [0.0] * ex.MAX_VARIABLES
        env[0] = float(t)
        try:
            v = float(ex.evaluate_jet(fe, env))
        except ExprError as err:
            raise ScenarioError(f"warp function fails at t={t:.6g}: {err}") from err
        if not v > 0.0:
            raise ScenarioError(f"warp function must be positive on [{lo}, {hi}], got {v:.6g} at t={t:.6g}")
    text = ex.to_text(fe)
    box = _box([lo, -1.0, -1.0], [hi, 1.0, 1.0])
    dom = _warped_domain(text, {(1, 1): "1", (2, 2): "1"}, box, f"warped({text})")
    F = RiemannianSubmersion(dom, _line(lo, hi), (ex.Var("x1"),), f"warped-custom({text})")

    def logd(t):
        return _log_derivatives(fe, t)

    # flat fibers with warp f have sectional curvature 0
    exp = _umbilical_expectations(logd, lambda t: 0.0, ambient=None)
    return Scenario(F.name, "submersion", dom, F.target, F, expectations=exp, equality={"t31": True, "t41": True})


def sphere_stereographic(n: int = 3, c: float = 1.0) -> Scenario:
    n, c = int(n), float(c)
    M = stereographic_sphere(n, c)
    return Scenario(f"sphere-stereographic({n},{c:g})", "manifold", M, real_space_form=c)


def fubini_study_scenario(n: int = 2, c: float = 4.0) -> Scenario:
    n, c = int(n), float(c)
    M = fubini_study(n, c)
    return Scenario(f"fubini-study({n},{c:g})", "manifold", M, complex_space_form=c)


FLAT_COMPLEX_ROWS = ((1.0, 2.0, 0.0, 2.0), (2.0, 0.0, 2.0, -1.0))  # orthogonal rows of norm 3


def flat_complex() -> Scenario:
    """ℝ⁴ with its standard complex structure, projected along a non-holomorphic plane."""
    dom = _flat(4, _cube(4, 1.0), J=_standard_J(4), name="C^2")
    tgt = _flat(2, _cube(2, 3.0), name="R^2")
    comps = tuple(
        ex.parse("(" + "+".join(f"{a:g}*x{k + 1}" for k, a in enumerate(row) if a) + ")/3") for row in FLAT_COMPLEX_ROWS
    )
    F = RiemannianSubmersion(dom, tgt, comps, "flat-complex")
    zero = Expectation(lambda p: 0.0, 1e-12, "trivial")
    exp = {k: zero for k in ("H2", "TV2", "delta", "fiber_ric", "ric_v", "ric_h", "mixed")}
    eq = {"t31": True, "t41": True, "t53.v": True, "t53.hv": True, "t54.v": True, "t54.hv": True}
    return Scenario("flat-complex", "submersion", dom, tgt, F, real_space_form=0.0, complex_space_form=0.0, expectations=exp, equality=eq)


def linear_map(n: int = 3) -> Scenario:
    """(x₁, x₂, …) ↦ (x₁, x₂, 0, …) between flat spaces; n = 4 uses flat ℂ² as target."""
    n = int(n)
    if n not in (3, 4):
        raise ScenarioError("linear-map supports n = 3 or n = 4")
    dom = _flat(n, _cube(n, 1.0), name=f"R^{n}")
    J = _standard_J(4) if n == 4 else None
    tgt = _flat(n, _cube(n, 2.0), J=J, name="C^2" if n == 4 else "R^3")
    comps = (ex.Var("x1"), ex.Var("x2")) + tuple(ex.Num(0.0) for _ in range(n - 2))
    F = RiemannianMapSpec(dom, tgt, comps, f"linear-map({n})", rank=2)
    exp = {
        "B": Expectation(lambda p: np.zeros((2, 2, n - 2)), 1e-12, "trivial"),
        "ric_range": Expectation(lambda p: 0.0, 1e-12, "trivial"),
        "ric_horizontal": Expectation(lambda p: 0.0, 1e-12, "trivial"),
    }
    if n == 4:
        # J F*h₁ = F*h₂ lies in the range
        exp["PFh1_sq"] = Expectation(lambda p: 1.0, 1e-10)
    eq = {"t62": True, "t65": True, "t66": n == 4}
    return Scenario(F.name, "map", dom, tgt, F, real_space_form=0.0, complex_space_form=0.0 if n == 4 else None, expectations=exp, equality=eq)


def cylinder_map() -> Scenario:
    dom = _flat(3, _box([-math.pi, -2.0, -2.0], [math.pi, 2.0, 2.0]), name="R^3")
    tgt = _flat(3, _cube(3, 3.0), name="R^3")
    F = RiemannianMapSpec(dom, tgt, (ex.parse("cos(x1)"), ex.parse("sin(x1)"), ex.Var("x2")), "cylinder-map", rank=2)
    exp = {
        # |B| pattern in the frame h₁ = ∂x, h₂ = ∂y
        "B_abs": Expectation(lambda p: np.array([[1.0, 0.0], [0.0, 0.0]])[:, :, None], 1e-6),
        "trace_norm2": Expectation(lambda p: 1.0, 1e-8),
        "norm2": Expectation(lambda p: 1.0, 1e-8),
        "ric_range": Expectation(lambda p: 0.0, 1e-10, "trivial"),
        "ric_horizontal": Expectation(lambda p: 0.0, 1e-10, "trivial"),
    }
    return Scenario("cylinder-map", "map", dom, tgt, F, real_space_form=0.0, expectations=exp, equality={"t62": True, "t65": True})


def clifford_torus_map(c: float = 1.0) -> Scenario:
    """Flat ℝ³ onto a flat torus in S³(c), written in the stereographic chart of S³(c)."""
    c = float(c)
    if c <= 0:
        raise ScenarioError("clifford-torus-map needs c > 0")
    R = 1.0 / math.sqrt(c)
    k = math.sqrt(2.0 * c)
    a = R / math.sqrt(2.0)
    den = f"(1-sin({k!r}*x2)/sqrt(2))"
    comps = tuple(ex.parse(f"{a!r}*{fn}({k!r}*{v})/{den}") for fn, v in (("cos", "x1"), ("sin", "x1"), ("cos", "x2")))
    half = math.pi / k
    dom = _flat(3, _box([-half, -half, -1.0], [half, half, 1.0]), name="R^3")
    tgt = stereographic_sphere(3, c, _cube(3, 3.0 * R))
    F = RiemannianMapSpec(dom, tgt, comps, f"clifford-torus-map({c:g})", rank=2)
    exp = {
        "B_eigenvalues": Expectation(lambda p: np.array([-math.sqrt(c), math.sqrt(c)]), 1e-6),
        "trace_norm2": Expectation(lambda p: 0.0, 1e-8),
        "norm2": Expectation(lambda p: 2.0 * c, 1e-8),
        "ric_range": Expectation(lambda p: c, 1e-6),
        "ric_horizontal": Expectation(lambda p: 0.0, 1e-10, "trivial"),
    }
    return Scenario(F.name, "map", dom, tgt, F, real_space_form=c, expectations=exp, equality={"t62": True, "t65": True})


def holomorphic_curve_map() -> Scenario:
    """CP¹(4) × ℝ onto a totally geodesic complex line of CP²(4)."""
    S = "(1+x1^2+x2^2)"
    dom = ChartManifold.from_entries(
        3, {(0, 0): f"1/{S}^2", (1, 1): f"1/{S}^2", (2, 2): "1"}, _cube(3, 1.5), name="CP^1(4) x R"
    )
    tgt = fubini_study(2, 4.0, _cube(4, 1.5))
    F = RiemannianMapSpec(dom, tgt, (ex.Var("x1"), ex.Var("x2"), ex.Num(0.0), ex.Num(0.0)), "holomorphic-curve-map", rank=2)
    exp = {
        "B": Expectation(lambda p: np.zeros((2, 2, 2)), 1e-8),
        "PFh1_sq": Expectation(lambda p: 1.0, 1e-8),
        "ric_range": Expectation(lambda p: 4.0, 1e-6),
        "ric_horizontal": Expectation(lambda p: 4.0, 1e-6),
    }
    return Scenario(F.name, "map", dom, tgt, F, complex_space_form=4.0, expectations=exp, equality={"t62": True, "t66": True})


BUILTINS: dict[str, Callable[..., Scenario]] = {
    "flat-projection": flat_projection,
    "warped-s3": warped_s3,
    "warped-h3": warped_h3,
    "warped-custom": warped_custom,
    "sphere-stereographic": sphere_stereographic,
    "fubini-study": fubini_study_scenario,
    "flat-complex": flat_complex,
    "linear-map": linear_map,
    "cylinder-map": cylinder_map,
    "clifford-torus-map": clifford_torus_map,
    "holomorphic-curve-map": holomorphic_curve_map,
}

_CALL_RE = re.compile(r"^\s*([a-z0-9-]+)\s*(?:\((.*)\))?\s*$", re.S)


def _split_args(text: str) -> list[str]:
    """Split on top-level commas so expression arguments may contain calls."""
    args, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            args.append("".join(cur).strip())
            cur = []
            continue
        depth += ch == "("
        depth -= ch == ")"
        cur.append(ch)
    if "".join(cur).strip():
        args.append("".join(cur).strip())
    return args


def builtin(name: str) -> Scenario:
    """Bundled scenario by name, e.g. ``warped-s3`` or ``sphere-stereographic(3,1)``."""
    m = _CALL_RE.match(name)
    if not m or m.group(1) not in BUILTINS:
        raise ScenarioError(f"unknown scenario {name!r}; known: {', '.join(BUILTINS)}")
    key, argtext = m.group(1), m.group(2)
    args = _split_args(argtext) if argtext else []
    try:
        if key == "warped-custom":
            return warped_custom(*args[:1], *(float(a) for a in args[1:]))
        return BUILTINS[key](*(float(a) for a in args))
    except TypeError as err:
        raise ScenarioError(f"bad arguments for {key}: {err}") from err
    except ValueError as err:
        raise ScenarioError(f"bad arguments for {key}: {err}") from err


def is_builtin(name: str) -> bool:
    m = _CALL_RE.match(name)
    return bool(m) and m.group(1) in BUILTINS


# --- file format ------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def _dump_manifold(cp: configparser.ConfigParser, section: str, M: ChartManifold) -> None:
    cp.add_section(section)
    s = cp[section]
    s["name"] = M.name
    s["dim"] = str(M.dim)
    for i in range(M.dim):
        s[f"box_{i + 1}"] = f"{_fmt(M.box.lo[i])}, {_fmt(M.box.hi[i])}"
    if M.sample_box is not None:
        for i in range(M.dim):
            s[f"sample_box_{i + 1}"] = f"{_fmt(M.sample_box.lo[i])}, {_fmt(M.sample_box.hi[i])}"
    for i, j, e in M.unique_entries():
        if not (isinstance(e, ex.Num) and e.value == 0.0):
            s[f"g_{i + 1}_{j + 1}"] = ex.to_text(e)
    if M.J is not None:
        for i in range(M.dim):
            for j in range(M.dim):
                if M.J[i, j] != 0.0:
                    s[f"J_{i + 1}_{j + 1}"] = _fmt(M.J[i, j])


def dump_scenario(scn: Scenario) -> str:
    """Scenario file text; closed-form expectations are not serialized."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.add_section("scenario")
    cp["scenario"]["name"] = scn.name
    cp["scenario"]["kind"] = scn.kind
    if scn.real_space_form is not None:
        cp["scenario"]["real_space_form"] = _fmt(scn.real_space_form)
    if scn.complex_space_form is not None:
        cp["scenario"]["complex_space_form"] = _fmt(scn.complex_space_form)
    _dump_manifold(cp, "manifold.domain", scn.domain)
    if scn.mapping is not None:
        _dump_manifold(cp, "manifold.target", scn.mapping.target)
        cp.add_section("map")
        for k, e in enumerate(scn.mapping.components):
            cp["map"][f"F_{k + 1}"] = ex.to_text(e)
        if isinstance(scn.mapping, RiemannianMapSpec):
            cp["map"]["rank"] = str(scn.mapping.rank)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


_G_RE = re.compile(r"g_(\d+)_(\d+)\Z")
_J_RE = re.compile(r"J_(\d+)_(\d+)\Z")
_BOX_RE = re.compile(r"(sample_)?box_(\d+)\Z")
_F_RE = re.compile(r"F_(\d+)\Z")


def _pair(text: str, key: str) -> tuple[float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ScenarioError(f"{key}: expected 'lo, hi'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as err:
        raise ScenarioError(f"{key}: {err}") from err


def _expr(text: str, where: str) -> ex.Expr:
    try:
        return ex.parse(text)
    except ExprError as err:
        raise ScenarioError(f"{where}: {err}") from err


def _load_manifold(sec: configparser.SectionProxy, where: str) -> ChartManifold:
    if "dim" not in sec:
        raise ScenarioError(f"[{where}] is missing dim")
    try:
        dim = int(sec["dim"])
    except ValueError as err:
        raise ScenarioError(f"[{where}] dim: {err}") from err
    if not 1 <= dim <= ex.MAX_VARIABLES:
        raise ScenarioError(f"[{where}] dim must be in 1..{ex.MAX_VARIABLES}")
    lo, hi, slo, shi = [None] * dim, [None] * dim, [None] * dim, [None] * dim
    entries: dict[tuple[int, int], ex.Expr] = {}
    J = None
    for key, value in sec.items():
        if key in ("dim", "name"):
            continue
        if m := _G_RE.match(key):
            i, j = sorted((int(m.group(1)) - 1, int(m.group(2)) - 1))
            if not (0 <= i and j < dim):
                raise ScenarioError(f"[{where}] {key}: index out of range for dim {dim}")
            if (i, j) in entries:
                raise ScenarioError(f"[{where}] {key}: metric entry given twice")
            entries[(i, j)] = _expr(value, f"[{where}] {key}")
        elif m := _J_RE.match(key):
            i, j = int(m.group(1)) - 1, int(m.group(2)) - 1
            if not (0 <= i < dim and 0 <= j < dim):
                raise ScenarioError(f"[{where}] {key}: index out of range for dim {dim}")
            J = np.zeros((dim, dim)) if J is None else J
            try:
                J[i, j] = float(value)
            except ValueError as err:
                raise ScenarioError(f"[{where}] {key}: {err}") from err
        elif m := _BOX_RE.match(key):
            i = int(m.group(2)) - 1
            if not 0 <= i < dim:
                raise ScenarioError(f"[{where}] {key}: index out of range for dim {dim}")
            a, b = _pair(value, key)
            if m.group(1):
                slo[i], shi[i] = a, b
            else:
                lo[i], hi[i] = a, b
        else:
            raise ScenarioError(f"[{where}] unknown key {key!r}")
    if any(v is None for v in lo):
        missing = [i + 1 for i, v in enumerate(lo) if v is None]
        raise ScenarioError(f"[{where}] missing box_i for i = {missing}")
    sample_box = None
    if any(v is not None for v in slo):
        if any(v is None for v in slo):
            raise ScenarioError(f"[{where}] sample_box must be given for every coordinate")
        sample_box = Box(tuple(slo), tuple(shi))
    try:
        M = ChartManifold.from_entries(dim, entries, Box(tuple(lo), tuple(hi)), J, sec.get("name", ""), sample_box)
    except GeometryError as err:
        raise ScenarioError(f"[{where}] {err}") from err
    _precheck_metric(M)
    return M


def _precheck_metric(M: ChartManifold) -> None:
    """Positive-definiteness at the box corners (up to 10 dimensions) and center."""
    pts = [M.box.center()]
    if M.dim <= 10:
        pts.extend(M.box.corners())
    for p in pts:
        try:
            metric_jet(M, p)
        except ExprError as err:
            raise ScenarioError(f"metric of {M.name or 'manifold'} cannot be evaluated at {list(p)}: {err}") from err


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as err:
        raise ScenarioError(f"{source}: {err}") from err
    if "manifold.domain" not in cp:
        raise ScenarioError(f"{source}: missing [manifold.domain]")
    head = cp["scenario"] if "scenario" in cp else {}
    kind = head.get("kind", "submersion" if "map" in cp else "manifold")
    name = head.get("name", Path(source).stem)

    def opt_float(key):
        if key not in head:
            return None
        try:
            return float(head[key])
        except ValueError as err:
            raise ScenarioError(f"{source}: {key}: {err}") from err

    dom = _load_manifold(cp["manifold.domain"], "manifold.domain")
    tgt = _load_manifold(cp["manifold.target"], "manifold.target") if "manifold.target" in cp else None
    mapping = None
    if kind != "manifold":
        if tgt is None or "map" not in cp:
            raise ScenarioError(f"{source}: {kind} scenario needs [manifold.target] and [map]")
        sec = cp["map"]
        comps: dict[int, ex.Expr] = {}
        rank = None
        for key, value in sec.items():
            if key == "rank":
                rank = int(value)
            elif m := _F_RE.match(key):
                comps[int(m.group(1)) - 1] = _expr(value, f"[map] {key}")
            else:
                raise ScenarioError(f"[map] unknown key {key!r}")
        if sorted(comps) != list(range(tgt.dim)):
            raise ScenarioError(f"[map] needs F_1..F_{tgt.dim} for a {tgt.dim}-dimensional target")
        components = tuple(comps[k] for k in range(tgt.dim))
        try:
            if kind == "submersion":
                mapping = RiemannianSubmersion(dom, tgt, components, name)
            else:
                if rank is None:
                    raise ScenarioError("[map] maps need rank")
                mapping = RiemannianMapSpec(dom, tgt, components, name, rank=rank)
        except GeometryError as err:
            raise ScenarioError(f"{source}: {err}") from err
    try:
        return Scenario(name, kind, dom, tgt, mapping, opt_float("real_space_form"), opt_float("complex_space_form"))
    except ScenarioError as err:
        raise ScenarioError(f"{source}: {err}") from err


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ScenarioError(f"cannot read scenario file {path}: {err}") from err
    return loads_scenario(text, str(path))


def resolve(name_or_path: str) -> Scenario:
    """Builtin name or path to a scenario file."""
    if is_builtin(name_or_path):
        return builtin(name_or_path)
    path = Path(name_or_path)
    if path.exists():
        return load_scenario(path)
    raise ScenarioError(f"{name_or_path!r} is neither a builtin scenario nor a file")


DATA_DIR = Path(__file__).parent / "data"


def bundled_file(stem: str) -> Path:
    """Path of a scenario file shipped with the package, e.g. ``warped-s3``."""
    path = DATA_DIR / f"{stem}.ini"
    if not path.exists():
        raise ScenarioError(f"no bundled scenario file {stem!r}")
    return path
