import json

import numpy as np
import pytest

from lagcap.examples import plane_disk, whitney_cap
from lagcap.solver import (
    MeshError,
    SolverConfig,
    TopologyError,
    build_mesh,
    energy,
    flatness_metrics,
    initial_mesh,
    minimize,
    plane_fit,
    read_mesh_csv,
    solve,
    write_mesh_csv,
    write_mesh_obj,
)
from lagcap._kernels import triangle_omega_residuals

SMALL = dict(nr=4, nphi=12)


def test_flat_mesh_is_lagrangian():
    mesh = build_mesh(6, 16)
    assert np.max(triangle_omega_residuals(mesh.positions, mesh.triangles)) == 0.0
    assert plane_fit(mesh.positions)[0] < 1e-15
    assert np.allclose(mesh.positions[mesh.antipode], -mesh.positions)


def test_perturbed_initial_mesh():
    mesh = initial_mesh(SolverConfig(**SMALL, amplitude=0.1))
    assert np.max(triangle_omega_residuals(mesh.positions, mesh.triangles)) > 1e-3
    assert np.allclose(mesh.positions[mesh.antipode], -mesh.positions, atol=1e-15)
    r = np.linalg.norm(mesh.positions[mesh.boundary], axis=1)
    assert np.max(np.abs(r - 1.0)) < 1e-15


def test_mesh_preconditions():
    with pytest.raises(MeshError):
        build_mesh(2, 4)
    with pytest.raises(MeshError):
        build_mesh(1, 16)
    with pytest.raises(MeshError):
        build_mesh(3, 9)
    build_mesh(3, 9, symmetric=False)
    with pytest.raises(MeshError):
        build_mesh(3, 8, whitney_cap(2.0))  # primary chart is not polar


def test_config_validation():
    for bad in (
        dict(topology="annulus"),
        dict(lambda_omega=()),
        dict(lambda_omega=(100.0, 10.0)),
        dict(lambda_theta=-1.0),
        dict(target_theta=4.0),
        dict(step_rule="newton"),
        dict(grad_tol=0.0),
    ):
        err = TopologyError if "topology" in bad else ValueError
        with pytest.raises(err):
            SolverConfig(**bad).validate()


def test_flat_start_converges_at_once():
    cfg = SolverConfig(**SMALL)
    res = minimize(build_mesh(4, 12), cfg)
    assert res.converged and res.iterations == 0
    assert res.diagnostics["plane_fit_residual"] < 1e-10


def test_energy_decreases_and_boundary_stays_on_sphere():
    cfg = SolverConfig(**SMALL, max_iters=400, amplitude=0.1, lambda_omega=(10.0,))
    res = solve(cfg)
    h = np.array(res.energy_history)
    assert np.all(np.diff(h) <= 1e-12)
    assert h[-1] < h[0]
    assert res.diagnostics["max_boundary_radius_error"] < 1e-12
    pos = res.mesh.positions
    assert np.allclose(pos[res.mesh.antipode], -pos, atol=1e-14)


@pytest.mark.parametrize("rule", ["bb", "fixed"])
def test_other_step_rules_descend(rule):
    cfg = SolverConfig(**SMALL, max_iters=60, step_rule=rule, lambda_omega=(10.0,))
    res = solve(cfg)
    assert res.energy_history[-1] < res.energy_history[0]


def test_fixed_angle_penalty_is_zero_at_target():
    mesh = build_mesh(4, 12)
    ev = energy(mesh, SolverConfig(**SMALL, target_theta=np.pi / 2, lambda_theta=5.0), 10.0)
    assert ev.angle_penalty == pytest.approx(0.0, abs=1e-20)
    ev = energy(mesh, SolverConfig(**SMALL, target_theta=1.0, lambda_theta=5.0), 10.0)
    assert ev.angle_penalty > 0


def test_whitney_cap_is_not_flat():
    mesh = build_mesh(16, 48, whitney_cap(1.2).charts["disk"])
    assert flatness_metrics(mesh)["plane_fit_residual"] > 0.1
    assert flatness_metrics(build_mesh(16, 48, plane_disk()))["plane_fit_residual"] < 1e-15


def test_mesh_io_round_trip(tmp_path):
    mesh = initial_mesh(SolverConfig(**SMALL))
    write_mesh_csv(mesh, tmp_path / "m.csv")
    back = read_mesh_csv(tmp_path / "m.csv")
    assert np.array_equal(back.positions, mesh.positions)
    assert np.array_equal(back.triangles, mesh.triangles)
    write_mesh_obj(mesh, tmp_path / "m.obj")
    lines = (tmp_path / "m.obj").read_text().splitlines()
    assert sum(l.startswith("f ") for l in lines) == len(mesh.triangles)
    assert sum(l.startswith("v ") for l in lines) == mesh.n_vertices


def test_summary_is_deterministic():
    cfg = SolverConfig(**SMALL, max_iters=50)
    a = json.dumps(solve(cfg).to_dict())
    b = json.dumps(solve(cfg).to_dict())
    assert a == b
