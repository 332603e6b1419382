import numpy as np
import pytest

from chenricci import rmap as rm
from chenricci import scenarios as sc
from chenricci import submersion as sm
from chenricci.errors import ScenarioError
from chenricci.manifold import metric_at, validate_complex_space_form, validate_real_space_form
from chenricci.report import RunConfig, run


def observed(scn, key, p):
    F = scn.mapping
    if scn.kind == "submersion":
        pg = sm.point_geometry(F, p)
        d = pg.data
        ell = pg.frame.ell
        R = pg.RN1_in("modern")
        simple = {
            "T": d.T, "H2": d.H2, "TV2": d.TV2, "A": d.A, "delta": d.delta,
            "fiber_ric": float(np.trace(pg.fiber("modern")[0][0, :, :, 0])),
            "ric_v": float(np.trace(R[0, :ell, :ell, 0])),
            "ric_h": float(np.trace(R[ell, ell:, ell:, ell])),
            "mixed": float(sum(R[ell + i, j, j, ell + i] for i in range(pg.frame.r) for j in range(ell))),
        }
        return simple[key]
    split = rm.range_split_at(F, p)
    sff = rm.second_fundamental_at(F, split)
    if key == "B":
        return sff.B
    if key == "B_abs":
        return np.abs(sff.B)
    if key == "B_eigenvalues":
        return np.sort(np.linalg.eigvalsh(sff.B[:, :, 0]))
    if key in ("trace_norm2", "norm2"):
        return getattr(sff, key)
    if key == "ric_range":
        return rm.ric_range_at(F, split)
    if key == "ric_horizontal":
        return rm.ric_horizontal_at(F, split)
    if key == "PFh1_sq":
        return rm.range_holomorphic_norm(F, split)
    raise KeyError(key)


CASES = [
    (name, key)
    for name in sc.BUILTINS
    for key in sc.builtin(name).expectations
]


@pytest.mark.parametrize("name, key", CASES)
def test_builtin_expectations(name, key):
    scn = sc.builtin(name)
    exp = scn.expectations[key]
    for p in scn.points(6, 11):
        np.testing.assert_allclose(observed(scn, key, p), exp(p), atol=exp.tol, rtol=0)


def test_manifold_builtins_are_space_forms():
    s = sc.builtin("sphere-stereographic")
    assert validate_real_space_form(s.domain, s.real_space_form, samples=10) < 1e-6
    f = sc.builtin("fubini-study")
    assert validate_complex_space_form(f.domain, f.complex_space_form, samples=10) < 1e-5
    assert sc.builtin("sphere-stereographic(2, 0.5)").real_space_form == 0.5


def test_stereographic_metric_at_the_origin():
    np.testing.assert_allclose(metric_at(sc.stereographic_sphere(2, 1.0), [0.0, 0.0]), 4 * np.eye(2))


def verdict_table(report):
    return [(v["point_index"], v["theorem"], v["slack"]) for v in report.verdicts]


@pytest.mark.parametrize("stem", ["warped-s3", "warped-h3", "cylinder-map", "clifford-torus-map", "flat-complex"])
def test_bundled_files_match_builtins(stem):
    from_file = run(RunConfig(scenario=str(sc.bundled_file(stem)), samples=4))
    from_builtin = run(RunConfig(scenario=stem, samples=4))
    a, b = verdict_table(from_file), verdict_table(from_builtin)
    assert [x[:2] for x in a] == [x[:2] for x in b]
    np.testing.assert_allclose([x[2] for x in a], [x[2] for x in b], atol=1e-12)


def test_dump_and_reload_round_trip(tmp_path):
    for name in ("warped-s3", "holomorphic-curve-map", "fubini-study", "warped-custom(2 + sin(x1), -1, 1)"):
        scn = sc.builtin(name)
        path = tmp_path / "s.ini"
        path.write_text(sc.dump_scenario(scn))
        back = sc.load_scenario(path)
        assert back.kind == scn.kind
        assert back.domain.metric == scn.domain.metric
        assert back.real_space_form == scn.real_space_form
        assert back.complex_space_form == scn.complex_space_form
        if scn.mapping is not None:
            assert back.mapping.components == scn.mapping.components


def test_cosh_warp_file_gives_equality_everywhere():
    report = run(RunConfig(scenario=str(sc.bundled_file("warped-cosh")), theorems=("t31",), samples=20))
    assert report.exit_code == 0
    assert all(v["equality"] for v in report.verdicts)
    assert len(report.verdicts) == 20


NON_PD = """
[scenario]
kind = manifold
[manifold.domain]
dim = 1
box_1 = -1, 1
g_1_1 = x1
"""


def test_non_positive_metric_is_rejected():
    with pytest.raises(Exception) as info:
        sc.loads_scenario(NON_PD)
    assert "positive definite" in str(info.value)


def test_expression_error_reports_its_location():
    text = NON_PD.replace("g_1_1 = x1", "g_1_1 = 1 + ")
    with pytest.raises(ScenarioError) as info:
        sc.loads_scenario(text)
    assert "g_1_1" in str(info.value) and "offset" in str(info.value)


@pytest.mark.parametrize(
    "text",
    [
        "[scenario]\nkind = map\n[manifold.domain]\ndim = 1\nbox_1 = 0, 1\ng_1_1 = 1\n",
        "[manifold.domain]\nbox_1 = 0, 1\n",
        "[manifold.domain]\ndim = 1\ng_1_1 = 1\n",
        "[manifold.domain]\ndim = 1\nbox_1 = 0, 1\ng_1_1 = 1\ncolour = red\n",
        "[manifold.domain]\ndim = 1\nbox_1 = 0\ng_1_1 = 1\n",
        "[manifold.domain]\ndim = 2\nbox_1 = 0, 1\nbox_2 = 0, 1\ng_1_3 = 1\n",
        "not an ini file",
    ],
)
def test_malformed_files(text):
    with pytest.raises(ScenarioError):
        sc.loads_scenario(text)


def test_unknown_names_and_bad_arguments():
    with pytest.raises(ScenarioError):
        sc.builtin("warped-s4")
    with pytest.raises(ScenarioError):
        sc.resolve("no/such/file.ini")
    with pytest.raises(ScenarioError):
        sc.builtin("linear-map(5)")
    with pytest.raises(ScenarioError):
        sc.builtin("flat-projection(a)")
    with pytest.raises(ScenarioError):
        sc.bundled_file("nothing")


def test_warp_function_must_be_positive():
    with pytest.raises(ScenarioError):
        sc.builtin("warped-custom(sin(x1), -1, 1)")
    with pytest.raises(ScenarioError):
        sc.warped_custom("x1 + x2")
    assert sc.is_builtin("warped-custom(exp(x1), 0, 1)")


def test_sampling_is_deterministic_and_inside_the_box():
    scn = sc.builtin("warped-s3")
    a, b = scn.points(50, 7), scn.points(50, 7)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, scn.points(50, 8))
    assert all(scn.sampling_box.contains(p) for p in a)
