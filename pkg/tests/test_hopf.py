import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lagcap.charts import jet
from lagcap.curvature import cubic_A
from lagcap.examples import (
    gradient_graph,
    lagrangian_catenoid,
    perturbed_catenoid,
    plane_disk,
    whitney,
    whitney_cap,
)
from lagcap.hopf import (
    NotIsothermalError,
    cr_residual,
    isothermal_residual,
    mean_value_defect,
    phi_coefficient,
    phi_field,
    phi_from_components,
    polar_boundary_diagnostic,
    polar_combination,
    polar_components_from_cartesian,
    polar_isothermal_residual,
)


def test_isothermal_gate():
    assert np.all(isothermal_residual(*plane_disk().sample(5, 5, "cartesian")) == 0.0)
    assert isothermal_residual(*lagrangian_catenoid().sample(6, 6, "annulus")).max() > 0.1
    assert isothermal_residual(*lagrangian_catenoid().sample(6, 6, "isothermal")).max() < 1e-12
    assert isothermal_residual(*whitney(1.0).sample(20, 20, "stereo")).max() < 1e-12
    c, R, T = whitney_cap(2.0).sample(6, 6, "disk")
    assert polar_isothermal_residual(c, R, T).max() < 1e-12


def test_phi_vanishes_on_plane_and_whitney():
    assert not np.any(phi_field(*plane_disk().sample(4, 4, "cartesian")))
    assert np.max(np.abs(phi_field(*whitney(1.0).sample(10, 10, "stereo")))) < 1e-12


def test_phi_at_minimal_isothermal_points():
    c, U, V = lagrangian_catenoid().sample(6, 6, "isothermal")
    A = cubic_A(jet(c, U, V, 2)).A
    expected = 0.5 * (A[..., 0, 0, 0] - 1j * A[..., 0, 0, 1])
    assert np.allclose(phi_from_components(A), expected, atol=1e-14)


def test_phi_rejects_non_conformal_metric():
    c, U, V = lagrangian_catenoid().sample(4, 4, "annulus")
    with pytest.raises(NotIsothermalError):
        phi_coefficient(cubic_A(jet(c, U, V, 2)))


def test_catenoid_phi_is_rotation_invariant_and_holomorphic():
    c, U, V = lagrangian_catenoid().sample(6, 24, "isothermal")
    mod = np.abs(phi_field(c, U, V))
    assert np.max(np.ptp(mod, axis=1)) < 1e-12 * mod.max()
    assert np.max(mean_value_defect(c, (0.2, 1.0), [0.05, 0.2, 0.5])) < 1e-4


def test_cr_residuals():
    cat = lagrangian_catenoid()
    assert cr_residual(*cat.sample(10, 10, "isothermal")).residual.max() < 1e-4
    assert cr_residual(*cat.sample(10, 10, "isothermal"), method="jet").residual.max() < 1e-10
    flat = cr_residual(*plane_disk().sample(4, 4, "cartesian"))
    assert flat.zero_phi and not np.any(flat.residual)
    assert cr_residual(*perturbed_catenoid().sample(12, 12), method="jet").residual.max() > 1e-2
    with pytest.raises(NotIsothermalError):
        cr_residual(*gradient_graph("cubic").sample(4, 4))
    with pytest.raises(ValueError):
        cr_residual(*cat.sample(3, 3, "isothermal"), method="spectral")


@given(st.floats(0.3, 2.0), st.floats(0.0, 2 * np.pi))
def test_polar_combination_matches_cartesian_phi(r, t):
    rng = np.random.default_rng(int(1e6 * r) % 2**32)
    a = rng.normal(size=4)
    A = np.empty((2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                A[i, j, k] = a[i + j + k]
    re, im = polar_combination(*polar_components_from_cartesian(A, r, t), r)
    z = r * np.exp(1j * t)
    phi = phi_from_components(A)
    assert re + 1j * im == pytest.approx(8 * z**3 * phi, abs=1e-10)


def test_polar_diagnostic():
    t = np.linspace(0, 2 * np.pi, 13)
    d = polar_boundary_diagnostic(plane_disk().chart, t)
    assert not np.any([d.A_rrr, d.A_rrt, d.A_rtt, d.A_ttt])
    # on the Whitney cap the tangential-conormal mixed components vanish at the rim,
    # while phi is identically zero so both parts of 8 z^3 phi vanish too
    d = polar_boundary_diagnostic(whitney_cap(np.sqrt(3.0)).charts["disk"], t)
    assert np.max(np.abs(d.A_rrt)) < 1e-12 and np.max(np.abs(d.A_ttt)) < 1e-12
    assert np.min(np.abs(d.A_rrr)) > 0.5
    assert np.max(np.abs(d.real_part)) < 1e-12 and np.max(np.abs(d.imag_part)) < 1e-12
    with pytest.raises(ValueError, match="polar"):
        polar_boundary_diagnostic(whitney(1.0).chart, t)
