import math

import numpy as np
import pytest

from levylab.errors import DegenerateSpectralMeasure, LambdaCapExceeded
from levylab.grid import GridField, NormParams, PeriodicGrid
from levylab.pide import SolverConfig, SpaceTimeField, TimeGrid
from levylab.stable import StableLaw
from levylab.zvonkin import (ZvonkinTransform, annulus_compensator, build_transform,
                             identity_transform, large_jump_quadrature, measure_grad_sup, phi,
                             phi_inverse, transformed_drift, transformed_jump)

NP = NormParams(beta=0.5, p=2.0, gamma=1.2, q=8.0)


@pytest.fixture(scope="module")
def setup():
    law = StableLaw.symmetric_1d(1.8)
    grid = PeriodicGrid(1, 128, 2 * math.pi)
    tg = TimeGrid(1.0, 32)
    b = SpaceTimeField.constant(tg, GridField(grid, (2.0 * np.sin(grid.coords[0]))[None]))
    tr = build_transform(b, law, 1.0, SolverConfig(lam=1.0, picard_tol=1e-11, quad_substeps=2,
                                                   norm_params=NP))
    return law, grid, b, tr


def test_zero_drift_gives_zero_v(law18, torus1):
    tg = TimeGrid(1.0, 8)
    b = SpaceTimeField.zeros(tg, torus1, 1)
    tr = build_transform(b, law18, 1.0, SolverConfig(lam=5.0, norm_params=NP))
    assert not np.any(tr.v.data)
    x = np.linspace(-3, 3, 11)[:, None]
    np.testing.assert_array_equal(phi(tr, 0.3, x), x)
    np.testing.assert_array_equal(phi_inverse(tr, 0.3, x), x)
    assert not np.any(transformed_drift(tr, 0.3, x))
    np.testing.assert_array_equal(transformed_jump(tr, 0.3, x, np.full_like(x, 1.7)), np.full_like(x, 1.7))


def test_grad_bound_met(setup):
    _, _, _, tr = setup
    assert tr.grad_sup <= 0.5
    assert tr.lambda_used >= 1.0
    assert tr.search[-1]["grad_sup"] == tr.grad_sup


def test_grad_sup_decreases_with_lambda(setup):
    _, _, _, tr = setup
    vals = [s["grad_sup"] for s in tr.search]
    assert len(vals) >= 2
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_round_trip_and_sandwich(setup, rng):
    _, _, _, tr = setup
    for t in (0.0, 0.37, 0.9):
        x = rng.uniform(-4, 4, (10000, 1))
        assert np.abs(phi_inverse(tr, t, phi(tr, t, x)) - x).max() <= 1e-10
        y = x + rng.normal(scale=0.1, size=x.shape)
        r = np.abs(phi(tr, t, x) - phi(tr, t, y))[:, 0] / np.abs(x - y)[:, 0]
        assert r.min() >= 0.5 and r.max() <= 1.5
        ri = np.abs(phi_inverse(tr, t, x) - phi_inverse(tr, t, y))[:, 0] / np.abs(x - y)[:, 0]
        assert ri.max() <= 2 + 1e-6


def test_grad_phi_on_grid(setup):
    _, grid, _, tr = setup
    pts = grid.axis[:, None]
    for t in (0.0, 0.5):
        assert np.abs(tr.grad_phi(t, pts)).max() <= 1.5


def test_perturbative_linear_response(law18, torus1):
    eps, lam = 1e-4, 2.0
    tg = TimeGrid(1.0, 16)
    mode = GridField.cos_mode(torus1, [3])
    b = SpaceTimeField.constant(tg, GridField(torus1, eps * mode.values[None]))
    tr = build_transform(b, law18, 1.0, SolverConfig(lam=lam, picard_tol=1e-14, norm_params=NP))
    m = 3 ** 1.8 + lam
    for j, t in enumerate(tr.v.timegrid.nodes):
        expected = eps * mode.values * (-np.expm1(-m * (1.0 - t))) / m
        err = np.abs(tr.v.data[j, 0] - expected).max()
        # the neglected b . grad v term is O(eps^2)
        assert err <= 1e-6 and err <= eps ** 2


def test_large_jump_multiplier_vs_quadrature(setup, rng):
    _, _, _, tr = setup
    x = rng.uniform(-3, 3, (20, 1))
    exact = tr._eval("large", 0.4, x, "spectral")
    quad = large_jump_quadrature(tr, 0.4, x, method="spectral")
    assert np.abs(exact - quad).max() <= 1e-5 * max(1.0, np.abs(exact).max())


def test_constant_v_has_no_jump_term(law18, torus1):
    tg = TimeGrid(1.0, 2)
    v = SpaceTimeField.constant(tg, GridField(torus1, np.full((1,) + torus1.shape, 0.2)))
    tr = ZvonkinTransform(law18, 1.0, v, 3.0, 0.0)
    y = np.linspace(-1, 1, 5)[:, None]
    np.testing.assert_allclose(transformed_drift(tr, 0.5, y), 3.0 * 0.2, atol=1e-12)
    assert np.abs(annulus_compensator(tr, 0.5, y, 0.1)).max() <= 1e-12


def test_transformed_drift_lipschitz(setup, rng):
    _, _, _, tr = setup
    y = rng.uniform(-3, 3, (2000, 1))
    y2 = y + rng.normal(scale=0.05, size=y.shape)
    d = np.abs(transformed_drift(tr, 0.5, y) - transformed_drift(tr, 0.5, y2))[:, 0] / np.abs(y - y2)[:, 0]
    assert np.isfinite(d.max())
    # recorded Lipschitz estimate is of the order of lambda * sup|grad v| plus the jump part
    assert d.max() < 10 * (tr.lambda_used + 1.0)


def test_transformed_jump_properties(setup, rng):
    _, _, _, tr = setup
    y = rng.uniform(-3, 3, (2000, 1))
    np.testing.assert_allclose(transformed_jump(tr, 0.2, y, np.zeros_like(y)), 0.0, atol=1e-11)
    z = rng.normal(size=y.shape) * 3
    y2 = y + rng.normal(scale=0.05, size=y.shape)
    g1 = transformed_jump(tr, 0.2, y, z)
    g2 = transformed_jump(tr, 0.2, y2, z)
    assert (np.abs(g1 - g2) / np.abs(y - y2)).max() <= 3.0 + 1e-9


def test_degenerate_law_rejected():
    law = StableLaw(2, 1.5, (((1.0, 0.0), 0.5), ((-1.0, 0.0), 0.5)))
    grid = PeriodicGrid(2, 8, 2 * math.pi)
    b = SpaceTimeField.zeros(TimeGrid(1.0, 2), grid, 2)
    with pytest.raises(DegenerateSpectralMeasure):
        build_transform(b, law, 1.0, SolverConfig(norm_params=NP))


def test_lambda_cap(law18, torus1):
    tg = TimeGrid(1.0, 8)
    b = SpaceTimeField.constant(tg, GridField(torus1, (50 * np.sin(torus1.coords[0]))[None]))
    with pytest.raises(LambdaCapExceeded):
        build_transform(b, law18, 1.0, SolverConfig(lam=1.0, norm_params=NP), lambda_cap=4.0)


def test_two_dimensional_transform():
    law = StableLaw.planar(1.8, 8)
    grid = PeriodicGrid(2, 32, 2 * math.pi)
    x, y = grid.coords
    tg = TimeGrid(1.0, 8)
    b = SpaceTimeField.constant(tg, GridField(grid, np.stack([np.sin(y), 0.5 * np.cos(x)])))
    np2 = NormParams(beta=0.7, p=2.0, gamma=1.4, q=8.0)
    tr = build_transform(b, law, 1.0, SolverConfig(lam=1.0, norm_params=np2))
    assert tr.grad_sup <= 0.5
    pts = np.random.default_rng(0).uniform(-3, 3, (500, 2))
    assert np.abs(phi_inverse(tr, 0.5, phi(tr, 0.5, pts)) - pts).max() <= 1e-10


def test_measure_grad_sup_sine_profile():
    grid = PeriodicGrid(1, 64, 2 * math.pi)
    data = (0.3 * np.sin(grid.coords[0]))[None, None]
    out = measure_grad_sup(data, grid)
    assert out["grad_sup"] == pytest.approx(0.3, rel=1e-3)


def test_save_load(tmp_path, setup):
    _, _, _, tr = setup
    tr.save(tmp_path / "tr")
    back = ZvonkinTransform.load(tmp_path / "tr")
    np.testing.assert_array_equal(back.v.data, tr.v.data)
    assert back.lambda_used == tr.lambda_used


def test_identity_transform(law18, torus1):
    tr = identity_transform(law18, torus1, 1.0)
    assert tr.grad_sup == 0.0
