
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chenricci import expr as ex
from chenricci import rmap as rm
from chenricci.errors import ContractError, GeometryError, RankError, SpaceFormError
from chenricci.manifold import Box, ChartManifold, metric_at
from chenricci.scenarios import builtin, clifford_torus_map

CYL = builtin("cylinder-map")
CLIFF = builtin("clifford-torus-map")


def flat(n):
    return ChartManifold.euclidean(n, Box((-2.0,) * n, (2.0,) * n))


def test_linear_map_is_totally_geodesic():
    scn = builtin("linear-map")
    F = scn.mapping
    for p in scn.points(4, 0):
        split = rm.range_split_at(F, p)
        sff = rm.second_fundamental_at(F, split)
        np.testing.assert_array_equal(np.abs(sff.B), 0.0)
        v = rm.map_theorem_verify(F, split, "modern")
        assert v.slack == 0.0 and v.equality


def test_range_split_is_orthonormal():
    F = CLIFF.mapping
    p = CLIFF.points(1, 2)[0]
    split = rm.range_split_at(F, p)
    g1 = metric_at(F.domain, p)
    g2 = metric_at(F.target, split.image)
    np.testing.assert_allclose(split.H.T @ g1 @ split.H, np.eye(2), atol=1e-12)
    E = split.target_frame
    np.testing.assert_allclose(E.T @ g2 @ E, np.eye(3), atol=1e-10)
    assert split.r == 2 and split.s == 1
    assert split.isometry_residual < 1e-12


@pytest.mark.parametrize("x", [0.0, 0.7, -1.3])
def test_cylinder_second_fundamental_form(x):
    F = CYL.mapping
    split = rm.range_split_at(F, [x, 0.2, 0.1])
    sff = rm.second_fundamental_at(F, split)
    # the circle direction has unit normal curvature, the ruling none
    Hc = split.FH
    idx = int(np.argmax(np.abs(Hc[0]) + np.abs(Hc[1])))
    B = np.abs(sff.B[:, :, 0])
    assert B[idx, idx] == pytest.approx(1.0, abs=1e-12)
    assert B.sum() == pytest.approx(1.0, abs=1e-12)
    assert rm.gauss_audit(F, split, "modern", sff) < 1e-12
    assert rm.ricci_identity_residual(F, split, "modern", sff) < 1e-12


def test_clifford_torus_principal_curvatures():
    F = CLIFF.mapping
    for p in CLIFF.points(5, 0):
        split = rm.range_split_at(F, p)
        sff = rm.second_fundamental_at(F, split)
        ev = np.sort(np.linalg.eigvalsh(sff.B[:, :, 0]))
        np.testing.assert_allclose(ev, [-1.0, 1.0], atol=1e-10)
        assert sff.symmetry_residual < 1e-10
        assert rm.ric_range_at(F, split) == pytest.approx(1.0, abs=1e-10)
        assert rm.gauss_audit(F, split, "modern", sff) < 1e-10
        assert rm.gauss_audit(F, split, "oneill", sff) > 1.0
        v = rm.map_theorem_verify(F, split, "modern")
        assert abs(v.slack) < 1e-10
        assert v.extra["ricci_identity_residual"] < 1e-10


def test_clifford_torus_in_a_smaller_sphere():
    scn = clifford_torus_map(2.0)
    F = scn.mapping
    split = rm.range_split_at(F, scn.points(1, 0)[0])
    assert rm.ric_range_at(F, split) == pytest.approx(2.0, abs=1e-9)
    v = rm.map_spaceform_verify(F, split, "real", 2.0, "modern")
    assert v.theorem == "t65"
    assert abs(v.slack) < 1e-9


def test_space_form_verdict_reduces_to_the_general_one_when_flat():
    scn = builtin("linear-map")
    F = scn.mapping
    split = rm.range_split_at(F, scn.points(1, 0)[0])
    a = rm.map_theorem_verify(F, split, "modern")
    b = rm.map_spaceform_verify(F, split, "real", 0.0, "modern")
    assert b.slack == pytest.approx(a.slack, abs=1e-12)
    with pytest.raises(SpaceFormError):
        rm.map_spaceform_verify(F, split, "real", 1.0, "modern")
    with pytest.raises(ValueError):
        rm.map_spaceform_verify(F, split, "hyperbolic", 0.0, "modern")


def test_holomorphic_curve_in_complex_projective_plane():
    scn = builtin("holomorphic-curve-map")
    F = scn.mapping
    split = rm.range_split_at(F, scn.points(1, 0)[0])
    assert rm.range_holomorphic_norm(F, split) == pytest.approx(1.0, abs=1e-10)
    v = rm.map_spaceform_verify(F, split, "complex", 4.0, "modern")
    assert v.theorem == "t66"
    assert v.extra["PFh1_sq"] == pytest.approx(1.0, abs=1e-10)
    assert abs(v.slack) < 1e-9


def test_map_bracket_limits():
    assert rm.map_bracket(2, 0.0, 0.0) == 0.0
    # umbilical B = b·I in rank r: bracket reduces to (r-1) b²
    r, b = 3, 0.7
    assert rm.map_bracket(r, (r * b) ** 2, r * b * b) == pytest.approx((r - 1) * b * b, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.floats(-0.9, 0.9))
def test_second_fundamental_form_is_symmetric_property(x, y, z):
    F = CLIFF.mapping
    split = rm.range_split_at(F, [x, y, z])
    X, Y = split.H[:, 0], split.H[:, 1]
    a = rm.second_fundamental_form(F, split.point, X, Y)
    b = rm.second_fundamental_form(F, split.point, Y, X)
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_declared_rank_must_match():
    comps = (ex.Var("x1"), ex.Var("x2"), ex.Num(0.0))
    F = rm.RiemannianMapSpec(flat(3), flat(3), comps, "wrong-rank", rank=1)
    with pytest.raises(RankError):
        rm.range_split_at(F, [0.1, 0.2, 0.3])
    with pytest.raises(GeometryError):
        rm.RiemannianMapSpec(flat(3), flat(3), comps, "full", rank=3)


def test_non_isometric_map_is_rejected():
    comps = (ex.parse("2*x1"), ex.Var("x2"), ex.Num(0.0))
    F = rm.RiemannianMapSpec(flat(3), flat(3), comps, "stretch", rank=2)
    with pytest.raises(ContractError):
        rm.range_split_at(F, [0.1, 0.2, 0.3])


def test_rank_one_has_no_bound():
    comps = (ex.Var("x1"), ex.Num(0.0))
    F = rm.RiemannianMapSpec(flat(2), flat(2), comps, "line", rank=1)
    split = rm.range_split_at(F, [0.1, 0.2])
    with pytest.raises(GeometryError):
        rm.map_theorem_verify(F, split, "modern")
