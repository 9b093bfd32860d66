import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lagcap.charts import (
    Chart,
    ChartDomain,
    DegenerateJetError,
    DomainError,
    fd_jet,
    jet,
    lagrangian_normal_residual,
    lagrangian_residual,
    tangent_frame,
)
from lagcap.examples import (
    catenoid_in_ball,
    gradient_graph,
    lagrangian_catenoid,
    non_lagrangian_control,
    plane_disk,
    whitney,
    whitney_cap,
)


def rel_err(exact, approx):
    e = exact.reshape(exact.shape[0], -1)
    a = approx.reshape(approx.shape[0], -1)
    return np.linalg.norm(e - a, axis=1) / np.linalg.norm(e, axis=1)


def random_points(chart, n, seed=0):
    rng = np.random.default_rng(seed)
    (a, b), (c, d) = chart.meta.get("sample_bounds", chart.domain.bounds)
    return rng.uniform(a, b, n), rng.uniform(c, d, n)


def test_plane_chart_jets():
    c = plane_disk().charts["cartesian"]
    j = jet(c, np.array([0.1]), np.array([0.2]), 3)
    assert np.array_equal(j.d1[0, 0], [1, 0, 0, 0])
    assert not np.any(j.d2) and not np.any(j.d3)


def test_catenoid_partials_at_unit_point():
    c = lagrangian_catenoid().charts["annulus"]
    j = jet(c, np.array([1.0]), np.array([0.0]), 2)
    assert np.allclose(j.x[0], [1, 0, 1, 0])
    assert np.allclose(j.d1[0, 0], [1, 0, -1, 0])


@pytest.mark.parametrize("chart_name", ["band", "stereo"])
def test_fd_matches_exact_on_whitney(chart_name):
    c = whitney(1.0).charts[chart_name]
    u, v = random_points(c, 50)
    ex, fd = c.exact_jet(u, v, 3), fd_jet(c, u, v, 3)
    assert rel_err(ex.d1, fd.d1).max() < 1e-7
    assert rel_err(ex.d2, fd.d2).max() < 1e-7
    assert rel_err(ex.d3, fd.d3).max() < 1e-5


@pytest.mark.parametrize(
    "spec", [lagrangian_catenoid(), catenoid_in_ball(2.0), whitney_cap(np.sqrt(3.0))], ids=lambda s: s.name
)
def test_fd_matches_exact_up_to_domain_edges(spec):
    for name, c in spec.charts.items():
        u, v = random_points(c, 60, seed=3)
        ex, fd = c.exact_jet(u, v, 3), fd_jet(c, u, v, 3)
        assert rel_err(ex.d2, fd.d2).max() < 1e-7, name
        assert rel_err(ex.d3, fd.d3).max() < 1e-5, name
        # on the edges one-sided stencils take over; third derivatives lose up to a digit
        lo, hi = c.domain.bounds[0]
        ue, ve = np.array([lo, hi]), np.array([0.3, 0.3])
        if not c.domain.contains(ue, ve).all():
            continue
        ex, fd = c.exact_jet(ue, ve, 3), fd_jet(c, ue, ve, 3)
        assert rel_err(ex.d1, fd.d1).max() < 1e-7, name
        assert rel_err(ex.d2, fd.d2).max() < 1e-7, name
        assert rel_err(ex.d3, fd.d3).max() < 1e-4, name


def test_jet_rejects_out_of_domain_and_bad_order():
    c = plane_disk().charts["cartesian"]
    with pytest.raises(DomainError):
        jet(c, np.array([2.0]), np.array([0.0]))
    with pytest.raises(ValueError):
        jet(c, np.array([0.0]), np.array([0.0]), order=4)


def test_frame_on_plane():
    c = plane_disk().charts["cartesian"]
    fr = tangent_frame(jet(c, np.array([0.2]), np.array([0.1]), 1))
    assert np.allclose(fr.e1[0], [1, 0, 0, 0]) and np.allclose(fr.e2[0], [0, 1, 0, 0])
    assert np.allclose(fr.n1[0], [0, 0, 1, 0]) and np.allclose(fr.n2[0], [0, 0, 0, 1])


@given(st.floats(0.3, 3.0), st.floats(0.0, 6.28))
def test_frame_orthonormal_on_catenoid(t, a):
    c = lagrangian_catenoid().charts["annulus"]
    fr = tangent_frame(jet(c, np.array([t]), np.array([a]), 1))
    E = np.stack([fr.e1[0], fr.e2[0]])
    assert np.allclose(E @ E.T, np.eye(2), atol=1e-14)
    fr2 = tangent_frame(jet(c, np.array([t + 1e-6]), np.array([a]), 1))
    assert np.abs(fr2.e1 - fr.e1).max() < 1e-4 and np.abs(fr2.e2 - fr.e2).max() < 1e-4


def test_degenerate_jet_rejected():
    c = Chart(ChartDomain("rectangle", ((-1, 1), (-1, 1))), formula=lambda u, v, m: [u, u, u * 0, v * 0])
    with pytest.raises(DegenerateJetError):
        tangent_frame(jet(c, np.array([0.1]), np.array([0.1]), 1))


def test_lagrangian_residuals():
    c = lagrangian_catenoid().charts["annulus"]
    u, v = random_points(c, 100)
    j = jet(c, u, v, 1)
    assert lagrangian_residual(j).max() < 1e-12
    assert lagrangian_normal_residual(j).max() < 1e-12
    lin = non_lagrangian_control("linear").chart
    j = jet(lin, np.array([0.1]), np.array([0.2]), 1)
    assert lagrangian_residual(j)[0] == pytest.approx(1 / np.sqrt(2), abs=1e-14)
    assert lagrangian_normal_residual(j)[0] > 0.1


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_gradient_graphs_are_lagrangian(u, v):
    for w in ("zero", "quadratic", "cubic"):
        c = gradient_graph(w).chart
        assert lagrangian_residual(jet(c, np.array([u]), np.array([v]), 1))[0] < 1e-14
        assert lagrangian_residual(fd_jet(c, np.array([u]), np.array([v]), 1))[0] < 1e-9


def test_transformed_chart_keeps_exact_jets():
    c = lagrangian_catenoid().chart
    m = np.diag([1.0, -1.0, 1.0, -1.0])
    t = c.transformed(m)
    assert t.has_exact_jets
    assert np.allclose(t.evaluate(1.0, 0.5), m @ c.evaluate(1.0, 0.5))
