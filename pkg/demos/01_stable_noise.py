"""Stable noise on the line and in the plane.

Run with ``python demos/01_stable_noise.py``.  Everything printed here is
checked by the test suite; the script is a guided tour, not a benchmark.
"""
# %%
import math

import numpy as np

from levylab.grid import PeriodicGrid
from levylab.stable import (StableLaw, density, levy_exponent, nondegeneracy_constant,
                            sample_increments, sample_path_noise)

rng = np.random.default_rng(2024)

# %% [markdown]
# A law is a stability index plus a finite symmetric spectral measure made of
# atoms on the unit sphere.  `symmetric_1d` is normalised so that psi(xi) = |xi|^alpha.

# %%
line = StableLaw.symmetric_1d(1.5)
plane = StableLaw.planar(1.5, 8)
print("psi on the line at xi = 2:", float(levy_exponent(line, np.array([2.0]))), "=", 2 ** 1.5)
print("non-degeneracy constant of the 8-atom planar law:", nondegeneracy_constant(plane))
print(plane.to_text())

# %% [markdown]
# Exact increments through Chambers-Mallows-Stuck.  The empirical characteristic
# function should sit within a few 1/sqrt(M) of exp(-t psi).

# %%
M = 50000
X = sample_increments(plane, 1.0, M, rng)
xi = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 2.0]])
emp = np.exp(1j * X @ xi.T).mean(axis=0)
print("|emp - exact| :", np.abs(emp - np.exp(-levy_exponent(plane, xi))).round(4),
      " scale 1/sqrt(M) =", round(1 / math.sqrt(M), 4))

# %% [markdown]
# Periodised densities come from an inverse FFT of exp(-t psi).  The Cauchy
# case alpha = 1 has p_1(0) = 1/pi.

# %%
g = PeriodicGrid(1, 2 ** 16, 4096.0)
p = density(StableLaw.symmetric_1d(1.0), 1.0, g)
print("Cauchy p_1(0) =", p.values[g.n // 2], " 1/pi =", 1 / math.pi)

# %% [markdown]
# Paths for the SDE schemes carry the jumps above a threshold separately, so a
# transformed scheme can evaluate each one through the jump map.

# %%
noise = sample_path_noise(line, 1.0, 100, 4, rng, threshold=0.5)
print("recorded jumps per path:", np.bincount(noise.jump_path, minlength=4))
print("terminal values:", noise.increments.sum(axis=1)[:, 0].round(3))
