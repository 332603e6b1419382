import math

import numpy as np
import pytest

from chenricci import inequalities as iq
from chenricci import submersion as sm
from chenricci.errors import GeometryError, SpaceFormError
from chenricci.scenarios import builtin, flat_projection

S3 = builtin("warped-s3").mapping
H3 = builtin("warped-h3").mapping


def test_vertical_bound_at_quarter_turn():
    t = math.pi / 4
    pg = sm.point_geometry(S3, [t, 1.0, 0.5])
    v = iq.vertical_ricci_verify(S3, pg, "oneill")
    # Ric^ker = -csc²t·(ℓ-1), Ric_V^N1 = -(ℓ-1), bracket = (1/2)(4 - 2) = 1
    assert v.lhs == pytest.approx(-2.0, abs=1e-12)
    assert v.rhs == pytest.approx(-2.0, abs=1e-12)
    assert v.equality and v.holds(1e-12)
    assert v.convention == "oneill"
    assert iq.vertical_bracket(2, pg.data.H2, pg.data.TH2) == pytest.approx(1.0, abs=1e-12)
    d = v.diagnostics
    assert d.structure_holds()
    assert d.rho == (0.0,)
    assert d.mu_multiplicity == (2,)


def test_modern_sign_breaks_the_vertical_bound():
    pg = sm.point_geometry(S3, [math.pi / 4, 1.0, 0.5])
    assert iq.vertical_ricci_verify(S3, pg, "modern").slack < -1.0


def test_slice_diagnosis_of_a_quasi_umbilical_slice():
    d = iq.diagnose_slices(np.diag([3.0, 1.0, 1.0])[:, :, None], 3)
    assert d.lambdas[0] == pytest.approx(3.0)
    assert d.mus[0] == pytest.approx(1.0)
    assert d.mu_multiplicity == (2,)
    assert d.rho[0] == pytest.approx(0.4)
    assert d.max_diagonal_residual < 1e-12
    assert abs(d.cauchy_schwarz_residual) < 1e-12


def test_slice_diagnosis_of_zero_and_traceless_slices():
    d = iq.diagnose_slices(np.zeros((3, 3, 2)), 3)
    assert d.lambdas == (0.0, 0.0) and d.mus == (0.0, 0.0)
    assert d.rho == (0.0, 0.0) and d.rho_spread == 0.0
    d = iq.diagnose_slices(np.diag([2.0, -1.0, -1.0])[:, :, None], 3)
    assert d.rho == (None,)
    d = iq.diagnose_slices(np.array([[1.0, 0.5], [0.5, 0.0]])[:, :, None], 2)
    assert d.max_diagonal_residual > 0.1
    assert not d.structure_holds()
    assert set(d.as_dict()) >= {"lambda", "mu", "rho", "rho_spread"}


def test_zero_second_fundamental_form():
    F = flat_projection(3, 2).mapping
    pg = sm.point_geometry(F, [0.1, 0.2, 0.3, 0.4, 0.5])
    for verdict in (iq.vertical_ricci_verify(F, pg, "oneill"), iq.combined_ricci_verify(F, pg, "oneill")):
        assert verdict.slack == 0.0
        assert verdict.lhs == verdict.rhs == 0.0


def test_vertical_bound_needs_two_fiber_dimensions():
    F = flat_projection(1, 2).mapping
    with pytest.raises(GeometryError):
        iq.vertical_ricci_verify(F, [0.1, 0.2, 0.3], "oneill")


def test_vertical_bound_is_independent_of_the_leading_vector():
    p = [1.1, 0.4, 0.2]
    base = iq.vertical_ricci_verify(S3, sm.point_geometry(S3, p), "oneill")
    for seed in ([0.0, 1.0, 0.0], [0.0, 0.3, -1.0], [0.0, -1.0, 2.0]):
        pg = sm.point_geometry(S3, p, seed_vertical=np.array(seed))
        v = iq.vertical_ricci_verify(S3, pg, "oneill")
        assert v.slack == pytest.approx(base.slack, abs=1e-8)
        assert v.lhs == pytest.approx(base.lhs, abs=1e-8)


def test_non_umbilical_fibers_give_strict_inequality(multiply_warped):
    pg = sm.point_geometry(multiply_warped, [0.4, 0.1, 0.2, 0.3])
    v = iq.vertical_ricci_verify(multiply_warped, pg, "oneill")
    assert v.slack > 0.1 and not v.equality
    assert not v.diagnostics.structure_holds()
    hv = iq.combined_ricci_verify(multiply_warped, pg, "oneill")
    assert hv.slack > 0.1
    assert hv.extra["identity_residual"] < 1e-8


def test_mixed_bound_is_exact_for_two_dimensional_fibers(twisted):
    pg = sm.point_geometry(twisted, [0.3, 0.2, -0.1, 0.4])
    hv = iq.combined_ricci_verify(twisted, pg, "oneill")
    assert abs(hv.slack) < 1e-8
    assert hv.extra["identity_residual"] < 1e-8
    terms = iq.combined_ricci_terms(pg, "oneill")
    assert terms["a_terms"] == pytest.approx(0.75, rel=1e-10)


@pytest.mark.parametrize("F", [S3, H3])
def test_mixed_bound_on_warped_space_forms(F):
    for p in builtin(F.name).points(5, 3):
        pg = sm.point_geometry(F, p)
        hv = iq.combined_ricci_verify(F, pg, "oneill")
        assert hv.slack >= -1e-6
        assert hv.extra["identity_residual"] < 1e-6
        assert iq.scalar_decomposition_audit(F, pg, "oneill") < 1e-5


def test_mixed_bound_needs_delta():
    pg = sm.point_geometry(S3, [1.0, 1.0, 0.0], with_delta=False)
    with pytest.raises(GeometryError):
        iq.combined_ricci_verify(S3, pg, "oneill")


def test_space_form_closed_forms():
    assert iq.spaceform_ricci_values("real", 2.0, 4, 3) == (6.0, 4.0, 24.0)
    assert iq.spaceform_ricci_values("real", 1.0, 2, 1) == (1.0, 0.0, 2.0)
    assert iq.spaceform_ricci_values("real", 0.0, 5, 2) == (0.0, 0.0, 0.0)
    assert iq.spaceform_ricci_values("complex", 4.0, 3, 2, Qv1_sq=1.0)[0] == pytest.approx(5.0)
    with pytest.raises(ValueError):
        iq.spaceform_ricci_values("hyperbolic", 1.0, 2, 2)


def test_complex_split_norms_on_coordinate_planes():
    J = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], dtype=float)
    e = np.eye(4)
    q1, p1, pm = iq.complex_split_norms(J, np.eye(4), e[:, [0, 1]], e[:, [2, 3]])
    assert (q1, p1, pm) == (1.0, 1.0, 0.0)
    q1, p1, pm = iq.complex_split_norms(J, np.eye(4), e[:, [0, 2]], e[:, [1, 3]])
    assert (q1, p1, pm) == (0.0, 0.0, 2.0)


@pytest.mark.parametrize("name, c", [("warped-s3", 1.0), ("warped-h3", -1.0)])
def test_real_space_form_bounds_agree_with_the_general_ones(name, c):
    scn = builtin(name)
    F = scn.mapping
    for p in scn.points(5, 1):
        pg = sm.point_geometry(F, p)
        v, hv = iq.real_spaceform_verify(F, pg, c, "oneill")
        assert v.theorem == "t53.v" and hv.theorem == "t53.hv"
        assert v.slack == pytest.approx(iq.vertical_ricci_verify(F, pg, "oneill").slack, abs=1e-6)
        assert hv.slack == pytest.approx(iq.combined_ricci_verify(F, pg, "oneill").slack, abs=1e-6)
        assert v.extra["closed_form_mismatch"] < 1e-5


def test_complex_space_form_bound_on_flat_complex_plane():
    scn = builtin("flat-complex")
    F = scn.mapping
    pg = sm.point_geometry(F, scn.points(1, 0)[0])
    v, hv = iq.complex_spaceform_verify(F, pg, 0.0, "oneill")
    assert v.theorem == "t54.v"
    assert v.slack == pytest.approx(0.0, abs=1e-12)
    assert hv.slack == pytest.approx(0.0, abs=1e-12)
    assert 0.0 <= v.extra["Qv1_sq"] <= 1.0


def test_wrong_space_form_constant_is_rejected():
    pg = sm.point_geometry(S3, [1.0, 1.0, 0.0])
    with pytest.raises(SpaceFormError):
        iq.real_spaceform_verify(S3, pg, 2.0, "oneill")
    with pytest.raises(SpaceFormError):
        iq.complex_spaceform_verify(S3, pg, 1.0, "oneill")


SUBMERSION_BUILTINS = [n for n in ("warped-s3", "warped-h3", "warped-custom", "flat-projection", "flat-complex")]


@pytest.mark.parametrize("name", SUBMERSION_BUILTINS)
def test_vertical_bound_holds_on_every_bundled_submersion(name):
    scn = builtin(name)
    F = scn.mapping
    for p in scn.points(10, 4):
        v = iq.vertical_ricci_verify(F, sm.point_geometry(F, p, with_delta=False), "oneill")
        assert v.slack >= -1e-8
        # umbilical fibers: equality detection and the diagonal-form check agree
        assert v.equality == (v.diagnostics.max_diagonal_residual <= 1e-6)
