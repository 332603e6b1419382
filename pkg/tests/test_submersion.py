import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from chenricci import expr as ex
from chenricci import submersion as sm
from chenricci.errors import ContractError, GeometryError, RankError, UnavailableError
from chenricci.manifold import Box, ChartManifold, metric_at
from chenricci.scenarios import builtin

from conftest import line

S3 = builtin("warped-s3").mapping
H3 = builtin("warped-h3").mapping
FLAT = builtin("flat-projection").mapping


def test_differential_of_projections():
    np.testing.assert_array_equal(sm.differential_at(FLAT, [0.1, 0.2, 0.3]), [[1.0, 0.0, 0.0]])
    np.testing.assert_array_equal(sm.differential_at(S3, [1.0, 0.5, 0.5]), [[1.0, 0.0, 0.0]])


def test_flat_projection_frame_and_tensors():
    f = sm.split_frame_at(FLAT, [0.1, 0.2, 0.3])
    np.testing.assert_allclose(np.abs(f.H[:, 0]), [1, 0, 0])
    assert np.allclose(f.V[0], 0.0)
    d = sm.oneill_data_at(FLAT, f)
    for x in (d.T, d.A):
        np.testing.assert_allclose(x, 0.0, atol=1e-14)
    assert d.H2 == d.delta == 0.0
    pg = sm.point_geometry(FLAT, [0.1, 0.2, 0.3])
    for c in ("modern", "oneill"):
        assert sm.vertical_gauss_audit(pg, c) == 0.0
        assert sm.horizontal_curvature_audit(pg, c) == 0.0


@settings(max_examples=25, deadline=None)
@given(
    st.floats(0.4, 2.7), st.floats(0.4, 2.7), st.floats(-3.0, 3.0),
    arrays(np.float64, 3, elements=st.floats(-1, 1)),
)
def test_split_frame_is_orthonormal_property(t, x, y, seed):
    p = [t, x, y]
    f = sm.split_frame_at(S3, p, seed_vertical=seed if np.linalg.norm(seed[1:]) > 0.1 else None)
    g = metric_at(S3.domain, p)
    np.testing.assert_allclose(f.E.T @ g @ f.E, np.eye(3), atol=1e-10)
    np.testing.assert_allclose(f.jac @ f.V, 0.0, atol=1e-12)
    assert sm.isometry_residual(S3, f) < 1e-12


def test_seeded_vertical_vector_leads_the_frame():
    p = np.array([1.0, 0.7, 0.2])
    seed = np.array([0.0, 1.0, 1.0])
    f = sm.split_frame_at(S3, p, seed_vertical=seed)
    g = metric_at(S3.domain, p)
    v = seed / math.sqrt(seed @ g @ seed)
    np.testing.assert_allclose(f.V[:, 0], v, atol=1e-12)


def test_frame_derivatives_match_finite_differences(multiply_warped):
    p = np.array([0.2, 0.1, -0.3, 0.4])
    f = sm.split_frame_at(multiply_warped, p)
    h = 1e-6
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        fp = sm.split_frame_at(multiply_warped, p + e, plan=f.plan)
        fm = sm.split_frame_at(multiply_warped, p - e, plan=f.plan)
        np.testing.assert_allclose(f.dE[:, :, k], (fp.E - fm.E) / (2 * h), atol=1e-8)


def test_warped_sphere_tensors_at_quarter_turn():
    t = math.pi / 4
    pg = sm.point_geometry(S3, [t, 1.0, 0.5])
    d = pg.data
    # unit mean-curvature normal: H = -cot t ∂t
    assert d.H2 == pytest.approx(1.0 / math.tan(t) ** 2, rel=1e-12)
    np.testing.assert_allclose(np.abs(d.T[:, :, 0]), np.eye(2) / math.tan(t), atol=1e-12)
    assert d.TH2 == pytest.approx(2.0, rel=1e-12)
    assert d.delta == pytest.approx(2.0 / math.sin(t) ** 2, abs=1e-6)
    np.testing.assert_allclose(d.A, 0.0, atol=1e-14)
    assert sm.vertical_gauss_audit(pg, "oneill") < 1e-12
    assert sm.vertical_gauss_audit(pg, "modern") == pytest.approx(2.0 / math.tan(t) ** 2, rel=1e-10)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.2])
def test_warped_sphere_delta_closed_form(t):
    pg = sm.point_geometry(S3, [t, 1.0, 0.0])
    assert pg.data.delta == pytest.approx(2.0 / math.sin(t) ** 2, abs=1e-6)
    assert sm.vertical_gauss_audit(pg, "modern") == pytest.approx(2.0 / math.tan(t) ** 2, rel=1e-9)


def test_warped_hyperbolic_space():
    pg = sm.point_geometry(H3, [0.3, 0.1, -0.2])
    assert pg.data.H2 == pytest.approx(1.0, rel=1e-12)
    assert abs(pg.data.delta) < 1e-6
    assert sm.vertical_gauss_audit(pg, "oneill") < 1e-12
    assert sm.vertical_ricci_identity(pg, "oneill") < 1e-12


def test_twisted_submersion_has_nonintegrable_horizontal_space(twisted):
    pg = sm.point_geometry(twisted, [0.3, 0.2, -0.1, 0.4])
    d = pg.data
    A = d.A
    np.testing.assert_allclose(A, -A.transpose(1, 0, 2), atol=1e-15)
    np.testing.assert_allclose(d.T, d.T.transpose(1, 0, 2), atol=1e-15)
    assert d.AH2 == pytest.approx(0.5, rel=1e-12)
    assert d.AV2 == pytest.approx(0.5, rel=1e-12)
    assert sm.horizontal_curvature_audit(pg, "oneill") < 1e-12
    assert sm.horizontal_curvature_audit(pg, "modern") > 0.1
    assert sm.mixed_curvature_audit(twisted, pg, "oneill") < 1e-8


def test_norms_are_consistent(twisted, multiply_warped):
    for F, p in ((twisted, [0.3, 0.2, -0.1, 0.4]), (multiply_warped, [0.5, 0.0, 0.0, 0.0])):
        d = sm.oneill_data_at(F, sm.split_frame_at(F, p), with_delta=False)
        assert max(sm.norm_consistency(d).values()) < 1e-12


def test_multiply_warped_identities(multiply_warped):
    pg = sm.point_geometry(multiply_warped, [0.4, 0.1, 0.2, 0.3])
    assert sm.vertical_gauss_audit(pg, "oneill") < 1e-12
    assert sm.vertical_ricci_identity(pg, "oneill") < 1e-12
    assert sm.identity_audit(multiply_warped, pg, "mixed", "oneill") < 1e-8
    with pytest.raises(ValueError):
        sm.identity_audit(multiply_warped, pg, "nonsense", "oneill")


@settings(max_examples=100, deadline=None)
@given(
    st.tuples(st.integers(1, 6), st.integers(1, 4)).flatmap(
        lambda s: arrays(np.float64, (s[0], s[0], s[1]), elements=st.floats(-3, 3))
    )
)
def test_squared_norm_expansion_property(X):
    T = 0.5 * (X + X.transpose(1, 0, 2))
    assert sm.squared_norm_expansion_residual(T) <= 1e-10 * max(1.0, float(np.sum(T * T)))


def test_squared_norm_expansion_on_umbilical_slices():
    T = np.repeat(np.eye(3)[:, :, None], 2, axis=2)
    assert sm.squared_norm_expansion_residual(T) == 0.0
    assert sm.squared_norm_expansion_residual(np.zeros((2, 2, 1))) == 0.0


def test_rank_deficient_map():
    M = ChartManifold.euclidean(2, Box((-1.0, -1.0), (1.0, 1.0)))
    F = sm.RiemannianSubmersion(M, line(-2, 2), (ex.parse("x1^2"),), "fold")
    with pytest.raises(RankError):
        sm.point_geometry(F, [0.0, 0.3])


def test_non_isometric_projection():
    M = ChartManifold.euclidean(2, Box((-1.0, -1.0), (1.0, 1.0)))
    F = sm.RiemannianSubmersion(M, line(-2, 2), (ex.parse("2*x1"),), "stretch")
    with pytest.raises(ContractError):
        sm.point_geometry(F, [0.0, 0.3])


def test_fiber_chart_requires_a_coordinate_projection():
    M = ChartManifold.euclidean(3, Box((-1.0,) * 3, (1.0,) * 3))
    F = sm.RiemannianSubmersion(M, line(-2, 2), (ex.parse("(x1 + x2) / sqrt(2)"),), "diagonal")
    assert F.fiber_coordinates() is None
    pg = sm.point_geometry(F, [0.1, 0.2, 0.3])
    assert pg.Rker is None
    with pytest.raises(UnavailableError):
        sm.vertical_gauss_audit(pg, "oneill")
    # the target-curvature route still works without a fiber chart
    assert sm.horizontal_curvature_audit(pg, "oneill") == 0.0


def test_dimension_checks():
    M = ChartManifold.euclidean(2, Box((-1.0, -1.0), (1.0, 1.0)))
    with pytest.raises(GeometryError):
        sm.RiemannianSubmersion(M, M, (ex.Var("x1"), ex.Var("x2")))
    with pytest.raises(GeometryError):
        sm.RiemannianSubmersion(M, line(), (ex.Var("x1"), ex.Var("x2")))
    with pytest.raises(GeometryError):
        sm.RiemannianSubmersion(M, line(), (ex.Var("x3"),))
