import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lagcap import boundary as bd
from lagcap.ambient import random_unitary
from lagcap.charts import Boundary, Chart, ChartDomain
from lagcap.examples import catenoid_in_ball, plane_disk, shifted_plane, whitney_cap


def _disk_in_plane(e_a, e_b):
    e_a, e_b = np.asarray(e_a, float), np.asarray(e_b, float)

    def formula(r, t, m):
        c, s = m.cos(t), m.sin(t)
        return [r * (c * e_a[i] + s * e_b[i]) for i in range(4)]

    return Chart(
        ChartDomain("polar-disk", ((0.0, 1.0), (0.0, 2 * np.pi)), (False, True)),
        formula=formula,
        boundaries=(Boundary(0, 1.0, +1, "r=1"),),
        name="disk",
    )


def test_plane_disk_is_free_boundary():
    c = plane_disk().chart
    prof = bd.contact_angle_profile(c, 64)
    assert np.allclose(prof.frames.mu, prof.frames.N, atol=1e-15)
    assert np.allclose(prof.theta, np.pi / 2, atol=1e-15)
    assert prof.capillary and prof.free_boundary
    assert not prof.frames.inward_flag.any()


def test_catenoid_in_ball_contact_angle():
    spec = catenoid_in_ball(2.0)
    for k in range(2):
        s = bd.boundary_samples(spec.chart, 50, k)
        fr = bd.boundary_frame(spec.chart, s, k)
        assert np.allclose(fr.mu_dot_N, np.sqrt(3.0) / 2, atol=1e-12)
        assert fr.legendrian_residual.max() < 1e-10


def test_whitney_cap_is_capillary():
    spec = whitney_cap(np.sqrt(3.0))
    expected = spec.notes["expected_abs_mu_dot_N"]
    for name in spec.boundary_charts:
        prof = bd.contact_angle_profile(spec.charts[name], 64, tol=1e-8)
        assert prof.capillary
        assert np.allclose(np.abs(prof.frames.mu_dot_N), expected, atol=1e-10)


def test_lagrangian_disks_through_origin_are_legendrian():
    # a Lagrangian 2-plane through 0 meets the sphere in a Legendrian circle
    e = np.eye(4)
    fr = bd.boundary_frame(_disk_in_plane(e[0], e[3]), np.linspace(0, 6, 40))
    assert fr.legendrian_residual.max() < 1e-15
    # a complex line is not Lagrangian, and its circle is a Reeb orbit
    fr = bd.boundary_frame(_disk_in_plane(e[0], e[2]), np.linspace(0, 6, 40))
    assert np.allclose(fr.legendrian_residual, 1.0)


def test_shifted_plane_fails_legendrian_check():
    fr = bd.boundary_frame(shifted_plane(0.6).chart, bd.boundary_samples(shifted_plane(0.6).chart, 100))
    rep = bd.legendrian_check(fr, 1e-8)
    assert not rep.passed and rep.max_legendrian >= 0.5
    with pytest.raises(ValueError, match="not Legendrian"):
        bd.contact_angle_profile(shifted_plane(0.6).chart, 32)


@given(st.floats(0.05, 0.95), st.floats(0.0, 2 * np.pi))
def test_legendrian_and_span_residuals_coincide(offset, s):
    # on a Lagrangian surface, <JN, T> = 0 exactly when mu lies in span(N, JN)
    fr = bd.boundary_frame(shifted_plane(offset).chart, np.array([s]))
    assert fr.legendrian_residual[0] == pytest.approx(fr.span_residual[0], abs=1e-12)


def test_mu_reconstruction():
    spec = whitney_cap(2.5)
    for name in spec.boundary_charts:
        c = spec.charts[name]
        fr = bd.boundary_frame(c, bd.boundary_samples(c, 50))
        assert fr.reconstruction_residual.max() < 1e-8


def test_joachimsthal_on_plane_is_trivial():
    c = plane_disk().chart
    res = bd.joachimsthal_residual(c, bd.boundary_samples(c, 20))
    assert np.all(res.lhs == 0.0)
    assert np.max(np.abs(res.rhs)) < 1e-10


def test_joachimsthal_on_capillary_examples():
    for spec in (catenoid_in_ball(3.0), whitney_cap(1.5)):
        c = spec.charts[spec.boundary_charts[0]]
        res = bd.joachimsthal_residual(c, bd.boundary_samples(c, 40), 0, spec.boundary_radius)
        assert np.max(np.abs(res.lhs)) < 1e-6
        assert np.max(res.residual) < 1e-4


def test_off_sphere_is_rejected():
    spec = catenoid_in_ball(2.0, scaled=False)
    with pytest.raises(bd.OffSphereError):
        bd.boundary_frame(spec.chart, np.array([0.0, 1.0]), 0, radius=1.0)
    fr = bd.boundary_frame(spec.chart, np.array([0.0, 1.0]), 0, radius=2.0)
    assert np.allclose(fr.mu_dot_N, np.sqrt(3.0) / 2)


def test_boundary_samples_drop_periodic_endpoint():
    s = bd.boundary_samples(plane_disk().chart, 8)
    assert len(s) == 8 and s[-1] < 2 * np.pi
    assert bd.radius_of(catenoid_in_ball(2.0).chart, 1) == pytest.approx(1.0, abs=1e-14)


def test_frames_table_columns():
    c = plane_disk().chart
    tab = bd.frames_table(bd.boundary_frame(c, bd.boundary_samples(c, 5)))
    assert tab.shape == (5, len(bd.FRAME_COLUMNS))


@settings(max_examples=15)
@given(st.integers(0, 2**31 - 1))
def test_angles_are_unitary_invariant(seed):
    spec = catenoid_in_ball(2.0)
    rot = spec.rotated(random_unitary(np.random.default_rng(seed)))
    s = bd.boundary_samples(spec.chart, 16)
    a = bd.boundary_frame(spec.chart, s)
    b = bd.boundary_frame(rot.chart, s)
    assert np.max(np.abs(a.theta - b.theta)) < 1e-10
    assert b.legendrian_residual.max() < 1e-10


def test_inward_conormal_angle_is_folded():
    e = np.eye(4)
    c = _disk_in_plane(e[0], e[1])
    flipped = Chart(c.domain, formula=c.formula, boundaries=(Boundary(0, 1.0, -1, "inward"),), name="flipped")
    fr = bd.boundary_frame(flipped, np.linspace(0, 6, 10))
    assert fr.inward_flag.all()
    assert np.allclose(fr.theta, np.pi / 2)
    assert np.all((fr.theta >= 0) & (fr.theta < np.pi))
    assert fr.reconstruction_residual.max() < 1e-14
