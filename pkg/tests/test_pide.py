import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from levylab.errors import InsufficientNodes, NoContraction
from levylab.grid import GridField, NormParams, PeriodicGrid
from levylab.pide import (SolverConfig, SpaceTimeField, TimeGrid, check_lambda_decay,
                          check_small_time_bound, loglog_fit, residual, solve_linear_drift,
                          solve_semilinear)
from levylab.stable import StableLaw

NP = NormParams(beta=0.5, p=2.0, gamma=1.2, q=8.0)


def rk_oracle(grid, law, f0, T, kappa=0.0, b=None, lam=0.0):
    """Integrate u' = -psi u - lam u + kappa |u_x| + b u_x + f with RK45, 1-D."""
    psi = grid.psi(law)
    xi = grid.xi[..., 0]

    def rhs(t, u):
        U = np.fft.fft(u)
        ux = np.fft.ifft(1j * xi * U).real
        out = np.fft.ifft(-(psi + lam) * U).real + f0
        if kappa:
            out += kappa * np.abs(ux)
        if b is not None:
            out += b * ux
        return out

    sol = solve_ivp(rhs, (0, T), np.zeros(grid.n), rtol=1e-10, atol=1e-13)
    return sol.y[:, -1]


def test_timegrid_and_field():
    tg = TimeGrid(1.0, 4)
    assert tg.h == 0.25
    np.testing.assert_allclose(tg.nodes, [0, 0.25, 0.5, 0.75, 1.0])
    g = PeriodicGrid(1, 8, 1.0)
    f = SpaceTimeField.constant(tg, GridField.cos_mode(g, [1]))
    assert f.data.shape == (5, 1, 8)
    assert f.step_values(8).shape == (8, 1, 8)
    assert f.reversed().timegrid == tg


def test_loglog_fit_exact():
    x = np.logspace(0, 2, 7)
    slope, se, icpt = loglog_fit(x, 3 * x ** -0.7)
    assert slope == pytest.approx(-0.7, abs=1e-12)
    assert icpt == pytest.approx(math.log(3), abs=1e-12)


def test_zero_forcing(law15, torus1):
    tg = TimeGrid(1.0, 10)
    f = SpaceTimeField.zeros(tg, torus1)
    u, rep = solve_semilinear(f, law15, SolverConfig(kappa=0.5, norm_params=NP))
    assert rep.iterations <= 1
    assert not np.any(u.data)
    u2, rep2 = solve_linear_drift(None, f, law15, SolverConfig(norm_params=NP))
    assert not np.any(u2.data)


def test_semilinear_eigenmode(law15, torus1):
    tg = TimeGrid(1.0, 10)
    f0 = GridField.cos_mode(torus1, [2])
    u, _ = solve_semilinear(SpaceTimeField.constant(tg, f0), law15,
                            SolverConfig(quad_substeps=8, norm_params=NP))
    psi = 2 ** 1.5
    for t, frame in zip(u.timegrid.nodes, u.data[:, 0]):
        np.testing.assert_allclose(frame, -np.expm1(-t * psi) / psi * f0.values, atol=1e-8)


def test_drift_eigenmode(law15, torus1):
    tg = TimeGrid(1.0, 10)
    f0 = GridField.cos_mode(torus1, [3])
    u, _ = solve_linear_drift(None, SpaceTimeField.constant(tg, f0), law15,
                              SolverConfig(lam=3.0, norm_params=NP))
    m = 3 ** 1.5 + 3.0
    np.testing.assert_allclose(u.data[-1, 0], -np.expm1(-m) / m * f0.values, atol=1e-8)


def test_semilinear_vs_time_refined_oracle(law15):
    g = PeriodicGrid(1, 64, 2 * math.pi)
    bump = np.exp(-4 * g.coords[0] ** 2)
    tg = TimeGrid(0.5, 50)
    f = SpaceTimeField.constant(tg, GridField(g, bump))
    u, rep = solve_semilinear(f, law15, SolverConfig(kappa=0.5, quad_substeps=40, picard_tol=1e-12,
                                                     norm_params=NP))
    ref = rk_oracle(g, law15, bump, 0.5, kappa=0.5)
    assert np.linalg.norm(u.data[-1, 0] - ref) / np.linalg.norm(ref) <= 1e-4
    assert max(rep.ratios) < 1.0


def test_drift_vs_time_refined_oracle(law15):
    g = PeriodicGrid(1, 64, 2 * math.pi)
    tg = TimeGrid(0.5, 50)
    bv = 0.5 * np.sin(g.coords[0])
    fv = np.exp(-4 * g.coords[0] ** 2)
    b = SpaceTimeField.constant(tg, GridField(g, bv[None]))
    f = SpaceTimeField.constant(tg, GridField(g, fv))
    u, _ = solve_linear_drift(b, f, law15, SolverConfig(lam=1.0, quad_substeps=20, picard_tol=1e-12,
                                                        norm_params=NP))
    ref = rk_oracle(g, law15, fv, 0.5, b=bv, lam=1.0)
    assert np.linalg.norm(u.data[-1, 0] - ref) / np.linalg.norm(ref) <= 1e-4


def test_residual_certificate(law15, torus1):
    tg = TimeGrid(0.5, 20)
    f = SpaceTimeField.constant(tg, GridField(torus1, np.exp(-4 * torus1.coords[0] ** 2)))
    cfg = SolverConfig(kappa=0.5, quad_substeps=4, picard_tol=1e-10, norm_params=NP)
    u, _ = solve_semilinear(f, law15, cfg)
    assert residual(u, f, law15, cfg) <= 10 * cfg.picard_tol
    noisy = SpaceTimeField(u.timegrid, u.grid,
                           u.data + 1e-2 * np.random.default_rng(0).normal(size=u.data.shape))
    assert residual(noisy, f, law15, cfg) >= 1e-3


def test_residual_exact_eigenmode(law15, torus1):
    tg = TimeGrid(1.0, 10)
    f0 = GridField.cos_mode(torus1, [1])
    f = SpaceTimeField.constant(tg, f0)
    cfg = SolverConfig(norm_params=NP)
    psi = 1.0
    data = np.array([-np.expm1(-t * psi) / psi * f0.values for t in tg.nodes])[:, None]
    u = SpaceTimeField(tg, torus1, data)
    assert residual(u, f, law15, cfg) <= 1e-8


def test_causality(law15, torus1):
    tg = TimeGrid(1.0, 20)
    frames = [GridField(torus1, np.zeros(torus1.shape)) if t < 0.5 else GridField.cos_mode(torus1, [1])
              for t in tg.nodes]
    f = SpaceTimeField.from_frames(tg, frames)
    u, _ = solve_semilinear(f, law15, SolverConfig(kappa=0.3, norm_params=NP))
    early = u.timegrid.nodes <= 0.5 + 1e-12
    assert not np.any(u.data[early])
    assert np.any(u.data[~early])


def test_exponent_validation(law15, torus1):
    f = SpaceTimeField.zeros(TimeGrid(1.0, 4), torus1)
    with pytest.raises(ValueError):
        solve_semilinear(f, law15, SolverConfig(norm_params=NormParams(gamma=1.6, q=8.0)))
    with pytest.raises(ValueError):
        solve_semilinear(f, law15, SolverConfig(norm_params=NormParams(gamma=1.2, q=3.0)))
    with pytest.raises(ValueError):
        solve_semilinear(f, StableLaw.symmetric_1d(0.8), SolverConfig(norm_params=NP))


def test_no_contraction_reported(law15, torus1):
    tg = TimeGrid(20.0, 10)
    f = SpaceTimeField.constant(tg, GridField.cos_mode(torus1, [1]))
    with pytest.raises(NoContraction):
        solve_semilinear(f, law15, SolverConfig(kappa=5.0, max_picard=5, norm_params=NP))


def test_small_time_exponent_limit_formula():
    # gamma -> 1+, q -> infinity: exponent tends to 1 - 1/alpha
    alpha = 1.5
    for gamma, q in ((1.01, 1e6), (1.001, 1e9)):
        assert 1 - gamma / alpha - 1 / q == pytest.approx(1 - 1 / alpha, abs=1e-2)


def test_small_time_needs_nodes(law15, torus1):
    tg = TimeGrid(1.0, 4)
    f = SpaceTimeField.constant(tg, GridField.cos_mode(torus1, [1]))
    cfg = SolverConfig(norm_params=NP)
    u, _ = solve_semilinear(f, law15, cfg)
    with pytest.raises(InsufficientNodes):
        check_small_time_bound(u, f, cfg, law15)


def test_lambda_decay_eigenmode(law15):
    g = PeriodicGrid(1, 64, 64.0)
    f = SpaceTimeField.constant(TimeGrid(10.0, 200), GridField.cos_mode(g, [1]))
    rep = check_lambda_decay(None, f, law15, SolverConfig(norm_params=NP), [1, 4, 16, 64, 256])
    assert rep.slope == pytest.approx(-1.0, abs=0.1)
    assert rep.extra["monotone"]


def test_lambda_values_validated(law15, torus1):
    f = SpaceTimeField.zeros(TimeGrid(1.0, 4), torus1)
    with pytest.raises(ValueError):
        check_lambda_decay(None, f, law15, SolverConfig(norm_params=NP), [1, 2, 3, 4])
