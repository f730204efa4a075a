import math
import warnings

import numpy as np
import pytest

from levylab.errors import DegenerateSpectralMeasure, GridTooCoarse
from levylab.grid import PeriodicGrid
from levylab.stable import (JumpRecord, StableLaw, density, levy_exponent,
                            nondegeneracy_constant, sample_increment, sample_increments,
                            sample_path_noise, sample_path_with_jumps,
                            stable_constant_closed_form, stable_constant_quadrature,
                            truncated_cosine_integral)

# independent quadrature oracles (scipy.integrate.quad, QAWF tail), frozen
K_ALPHA_1 = 1.570796326794762
K_ALPHA_15 = 1.6710855165105585
# min over 2e6 angles of psi on the unit circle, 8 atoms, alpha = 1.5
PLANAR8_NONDEG = 0.9145880756307279


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.2, 1.5, 1.8, 1.95])
def test_k_alpha_closed_form_matches_quadrature(alpha):
    assert stable_constant_quadrature(alpha) == pytest.approx(stable_constant_closed_form(alpha), rel=1e-12)


def test_k_alpha_frozen_oracles():
    assert stable_constant_quadrature(1.0) == pytest.approx(K_ALPHA_1, rel=1e-10)
    assert stable_constant_quadrature(1.5) == pytest.approx(K_ALPHA_15, rel=1e-10)


def test_truncated_integral_limits():
    vals = truncated_cosine_integral(1.5, np.array([1e-6, 1.0, 1e4]))
    assert vals[0] == pytest.approx(0.5 * 1e-6 ** 0.5 / 0.5, rel=1e-3)
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] == pytest.approx(K_ALPHA_15, abs=1e-5)


def test_psi_at_zero_and_symmetry(planar8, rng):
    assert levy_exponent(planar8, np.zeros(2)) == 0.0
    xi = rng.normal(size=(100, 2))
    np.testing.assert_allclose(levy_exponent(planar8, xi), levy_exponent(planar8, -xi), rtol=1e-14)


def test_psi_cauchy_value():
    law = StableLaw(1, 1.0, (((1.0,), 0.5), ((-1.0,), 0.5)))
    assert float(levy_exponent(law, np.array([2.0]))) == pytest.approx(math.pi, rel=1e-12)


def test_symmetric_1d_scale(law15):
    xi = np.linspace(-3, 3, 13)[:, None]
    np.testing.assert_allclose(levy_exponent(law15, xi), np.abs(xi[:, 0]) ** 1.5, rtol=1e-12)


def test_asymmetric_atoms_symmetrized():
    with pytest.warns(UserWarning):
        law = StableLaw(1, 1.5, (((1.0,), 1.0),))
    assert law.was_symmetrized
    assert law.total_mass == pytest.approx(1.0)
    assert len(law.atoms) == 2


def test_non_unit_direction_rejected():
    with pytest.raises(ValueError):
        StableLaw(2, 1.5, (((1.0, 1.0), 0.5), ((-1.0, -1.0), 0.5)))


def test_nondegeneracy_values(planar8):
    law = StableLaw(1, 1.0, (((1.0,), 0.5), ((-1.0,), 0.5)))
    assert nondegeneracy_constant(law) == pytest.approx(math.pi / 2, rel=1e-10)
    c = nondegeneracy_constant(planar8)
    assert c > 0
    assert c == pytest.approx(PLANAR8_NONDEG, rel=1e-8)


def test_degenerate_measure_raises():
    law = StableLaw(2, 1.5, (((1.0, 0.0), 0.5), ((-1.0, 0.0), 0.5)))
    with pytest.raises(DegenerateSpectralMeasure):
        nondegeneracy_constant(law)


def test_law_text_round_trip(tmp_path, planar8):
    path = tmp_path / "law.txt"
    planar8.save(path)
    back = StableLaw.load(path)
    assert back == planar8


def test_density_cauchy_and_mass():
    law = StableLaw.symmetric_1d(1.0)
    g = PeriodicGrid(1, 2 ** 18, 16384.0)
    p = density(law, 1.0, g)
    assert p.values[g.n // 2] == pytest.approx(1 / math.pi, abs=1e-8)
    assert p.values.sum() * g.h == pytest.approx(1.0, abs=1e-8)


def test_density_too_coarse_raises(law15):
    with pytest.raises(GridTooCoarse):
        density(law15, 1.0, PeriodicGrid(1, 16, 64.0))


def test_density_symmetry_2d(planar8):
    g = PeriodicGrid(2, 64, 16.0)
    p = density(planar8, 1.0, g).values
    flip = np.roll(np.flip(p), 1, axis=(0, 1))
    assert np.abs(p - flip).max() <= 1e-12


@pytest.mark.parametrize("alpha", [1.2, 1.8])
def test_increment_charfn(alpha, rng):
    law = StableLaw.symmetric_1d(alpha)
    X = sample_increments(law, 0.5, 40000, rng)
    xi = np.linspace(-3, 3, 13)[:, None]
    emp = np.exp(1j * X @ xi.T).mean(axis=0)
    assert np.abs(emp - np.exp(-0.5 * levy_exponent(law, xi))).max() <= 4 / math.sqrt(40000)


def test_single_increment_shape(planar8, rng):
    assert sample_increment(planar8, 1.0, rng).shape == (2,)


def test_increments_symmetric_median(law15, rng):
    X = sample_increments(law15, 1.0, 100000, rng)[:, 0]
    assert abs(np.median(X)) < 5 / math.sqrt(100000)


def test_moments_heavy_tail(rng):
    law = StableLaw.symmetric_1d(1.9)
    X = np.abs(sample_increments(law, 1.0, 400000, rng)[:, 0])
    low = [np.mean(X[:m] ** 0.5) for m in (10000, 100000, 400000)]
    assert max(low) / min(low) < 1.05
    # the alpha-th moment is infinite: the running mean keeps drifting up along the sample
    high = [np.mean(X[:m] ** 1.9) for m in (1000, 10000, 100000, 400000)]
    assert high[-1] > high[0]


def test_large_jump_count(rng, planar8):
    T, M = 2.0, 4000
    nz = sample_path_noise(planar8, T, 10, M, rng)
    counts = np.bincount(nz.jump_path[nz.large_mask()], minlength=M)
    rate = T * planar8.total_mass / planar8.alpha
    se = math.sqrt(rate / M)
    assert abs(counts.mean() - rate) <= 3 * se
    assert planar8.large_jump_rate == pytest.approx(planar8.total_mass / planar8.alpha)


def test_tiny_horizon_no_jumps(law15, rng):
    empty = 0
    for _ in range(200):
        _, jumps = sample_path_with_jumps(law15, 1e-6, 1, rng)
        empty += not jumps
    assert empty >= 198


def test_path_increments_charfn(law15, rng):
    nz = sample_path_noise(law15, 1.0, 20, 40000, rng)
    X = nz.increments.sum(axis=1)
    xi = np.linspace(-3, 3, 13)[:, None]
    emp = np.exp(1j * X @ xi.T).mean(axis=0)
    assert np.abs(emp - np.exp(-levy_exponent(law15, xi))).max() <= 4 / math.sqrt(40000)


def test_path_noise_decomposition(law15, rng):
    nz = sample_path_noise(law15, 1.0, 16, 50, rng, threshold=0.3)
    total = nz.small.copy()
    np.add.at(total, (nz.jump_path, nz.jump_step), nz.jump_size)
    np.testing.assert_allclose(total, nz.increments, atol=1e-12)
    assert np.all(np.linalg.norm(nz.jump_size, axis=1) > 0.3)


def test_jump_records_sorted(law15, rng):
    inc, jumps = sample_path_with_jumps(law15, 50.0, 100, rng)
    assert inc.shape == (100, 1)
    times = [j.time for j in jumps]
    assert times == sorted(times)
    assert all(j.is_large for j in jumps)


def test_jump_record_flag_checked():
    with pytest.raises(ValueError):
        JumpRecord(0.1, (0.5,), True)
