import json
import math

import numpy as np
import pytest

from fchoquard.campaigns import probe_upper_bound
from fchoquard.constants import interpolation_ratio, kinetic_floor, optimizer_field, random_smooth_field
from fchoquard.errors import RegimeError, UndefinedFiberError
from fchoquard.functionals import FiberMap, energy, fiber_argmax, scale
from fchoquard.grid import Field, build_grid
from fchoquard.solver import (SolverConfig, auto_grid, dilate_box, ground_state, initial_guesses, length_scale,
                              project_pohozaev, residual, transfer)

from conftest import DEFAULT, gaussian, with_mass


@pytest.fixture(scope="module")
def gs():
    return ground_state(DEFAULT)


def starts(n, seed=0):
    # box matched to the length scale of the default mass (about 0.013)
    g = build_grid(1, 0.4, 2048, "free")
    rng = np.random.default_rng(seed)
    return [with_mass(random_smooth_field(g, rng), 0.5) for _ in range(n)]


def test_projection_lands_on_manifold():
    for u in starts(20):
        v = project_pohozaev(u, DEFAULT)
        e = energy(v, DEFAULT)
        assert abs(e.p_alpha) / e.kinetic <= 1e-8
        assert v.mass == pytest.approx(u.mass, rel=1e-14)


def test_projection_exact_box_rescaling():
    for u in starts(5, seed=1):
        v = project_pohozaev(u, DEFAULT, rescale_box=True)
        e = energy(v, DEFAULT)
        assert abs(e.p_alpha) / e.kinetic <= 1e-13
        assert v.mass == pytest.approx(u.mass, rel=1e-14)


def test_projection_idempotent():
    for u in starts(5, seed=2):
        v = project_pohozaev(u, DEFAULT)
        assert abs(fiber_argmax(v, DEFAULT)) <= 1e-6


def test_projection_maximises_along_fiber():
    for u in starts(3, seed=3):
        v = project_pohozaev(u, DEFAULT)
        jv = energy(v, DEFAULT).j_alpha
        for t in np.linspace(-1.0, 1.0, 41):
            assert jv >= energy(scale(v, float(t)), DEFAULT).j_alpha - 1e-6


def test_projection_errors():
    with pytest.raises(UndefinedFiberError):
        project_pohozaev(Field.zeros(build_grid(1, 8.0, 64)), DEFAULT)


def test_dilate_box_is_exact_dilation():
    g = build_grid(1, 40.0, 4096, "free")
    u = with_mass(gaussian(g), 0.5)
    e0 = energy(u, DEFAULT)
    for t in (-0.7, 0.4):
        e = energy(dilate_box(u, t), DEFAULT)
        assert e.mass == pytest.approx(e0.mass, rel=1e-14)
        assert e.kinetic == pytest.approx(math.exp(0.8 * t) * e0.kinetic, rel=1e-12)
        assert e.d_p == pytest.approx(math.exp(1.5 * t) * e0.d_p, rel=1e-12)
        assert e.d_star == pytest.approx(e0.d_star, rel=1e-12)


def test_residual_examples():
    g = build_grid(1, 64.0, 1024)
    v = optimizer_field(g, 1.0, c=0.5)
    assert math.isfinite(residual(v, -1.0, DEFAULT))
    u = with_mass(gaussian(g), 0.5)
    assert residual(u, -0.7, DEFAULT) == pytest.approx(residual(u.like(-u.values), -0.7, DEFAULT), rel=1e-14)


def test_length_scale_and_auto_grid():
    ell = length_scale(DEFAULT)
    assert 0.005 < ell < 0.05
    g = auto_grid(DEFAULT, 1024)
    assert g.boundary == "free" and g.box_length == pytest.approx(16 * ell * math.log(1e10), rel=1e-12)


def test_initial_guesses_deterministic_and_normalised():
    g = auto_grid(DEFAULT, 1024)
    a = initial_guesses(g, DEFAULT, 5, 7, 0.01)
    b = initial_guesses(g, DEFAULT, 5, 7, 0.01)
    for x, y in zip(a, b):
        assert np.array_equal(x.values, y.values)
        assert x.mass == pytest.approx(0.25, rel=1e-14)
        assert np.all(x.values >= 0)


def test_transfer_keeps_shape():
    g = auto_grid(DEFAULT, 1024)
    u = initial_guesses(g, DEFAULT, 1, 0, 0.01)[0]
    v = transfer(u, g.rescaled(3.0), 0.7)
    assert v.mass == pytest.approx(0.49, rel=1e-14)
    assert np.allclose(v.values / v.values.max(), u.values / u.values.max())
    with pytest.raises(ValueError):
        transfer(u, build_grid(1, 1.0, 512), 0.7)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(armijo_c=1.5)
    with pytest.raises(ValueError):
        SolverConfig(pde_residual_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(multistart_count=0)


def test_ground_state_regime_error():
    with pytest.raises(RegimeError):
        ground_state(DEFAULT.replace(p=2.3))


# ---------------------------------------------------------------------------
# properties of a default solve


def test_result_constraints(gs):
    assert np.all(gs.field.values >= 0)
    assert gs.field.mass == pytest.approx(0.25, rel=1e-12)
    assert gs.lam < 0
    assert gs.nehari_residual <= 1e-6
    assert gs.pohozaev_residual <= 1e-10


def test_result_energy_values(gs):
    # reference values from resolution studies of this profile
    assert gs.m1 == pytest.approx(0.68354, rel=1e-4)
    assert gs.lam == pytest.approx(-9.7696, rel=1e-4)


def test_monotone_descent(gs):
    js = [j for j, _ in gs.trace]
    assert all(b <= a + 1e-12 for a, b in zip(js, js[1:]))


def test_fiber_concavity_along_run(gs):
    assert gs.max_fiber_curvature < 0


def test_probe_upper_bound(gs):
    assert gs.m1 <= probe_upper_bound(DEFAULT, gs.field.grid)


def test_per_field_kinetic_identity(gs):
    r = interpolation_ratio(gs.field, DEFAULT)
    assert gs.energy.kinetic == pytest.approx(kinetic_floor(r, DEFAULT), rel=1e-8)


def test_multistart_bookkeeping(gs):
    assert len(gs.start_energies) == 3
    assert gs.m1 == min(gs.start_energies)
    assert gs.multistart_best_gap == pytest.approx(max(gs.start_energies) - min(gs.start_energies))


def test_summary_serialisable(gs):
    d = json.loads(json.dumps(gs.summary()))
    assert d["converged"] == gs.converged
    assert d["trace"][0][0] == gs.trace[0][0]


def test_converged_flag_implies_tolerances():
    cfg = SolverConfig(pde_residual_tol=5e-3, multistart_count=1)
    r = ground_state(DEFAULT, cfg)
    assert r.converged
    assert r.pde_residual <= cfg.pde_residual_tol and r.pohozaev_residual <= cfg.pohozaev_tol


def test_non_convergence_is_reported():
    r = ground_state(DEFAULT, SolverConfig(max_iters=2, multistart_count=1))
    assert not r.converged
    assert r.iterations == 2 and len(r.trace) == 3


def test_deterministic():
    cfg = SolverConfig(multistart_count=2, seed=5, max_iters=40)
    a = ground_state(DEFAULT, cfg, points_per_dim=1024)
    b = ground_state(DEFAULT, cfg, points_per_dim=1024)
    assert np.array_equal(a.field.values, b.field.values)
    assert a.trace == b.trace


def test_warm_start():
    r0 = ground_state(DEFAULT, SolverConfig(multistart_count=1))
    pr = DEFAULT.replace(c=0.45)
    g = auto_grid(pr, 4096)
    r1 = ground_state(pr, SolverConfig(multistart_count=1), grid=g, initial=[transfer(r0.field, g, 0.45)])
    fresh = ground_state(pr, SolverConfig(multistart_count=1))
    assert r1.m1 == pytest.approx(fresh.m1, rel=1e-6)
