"""Euler paths with a discontinuous drift and the occupation-time ratio.

Run with ``python demos/03_rough_drift_paths.py`` (about half a minute).
"""
# %%
import numpy as np

from levylab.sde import (DriftSpec, KrylovExperiment, ball_family, coupled_uniqueness_experiment,
                         euler_path, krylov_ratio)
from levylab.stable import StableLaw

law = StableLaw.symmetric_1d(1.8)
rng = np.random.default_rng(7)

# %% [markdown]
# The drift is +2 on [0, 1] and -2 elsewhere on a circle of length 8.  A single
# path keeps its increments and jumps, so it can be audited and replayed.

# %%
drift = DriftSpec.indicator_composite_1d(0.0, 1.0, 2.0, 8.0)
rec = euler_path(drift, [0.5], law, 1.0, 256, rng, seed=7)
print("terminal state:", rec.states[-1, 0], " replay audit:", rec.audit())

# %% [markdown]
# Mollify at eps = 0.2, 0.1, 0.05, 0.025 and drive all four equations with the
# same noise.  The coupled sup-differences between neighbouring levels shrink.

# %%
levels = [drift.mollified(0.2 / 2 ** k) for k in range(4)]
rep = coupled_uniqueness_experiment(levels, [0.5], law, 1.0, 256, 1000, seed=11)
for row in rep.rows:
    print({k: round(v, 4) if isinstance(v, float) else v for k, v in row.items()})

# %% [markdown]
# Expected time spent in a shrinking ball, normalised by the space-time norm of
# its indicator.  Inside the exponent window the ratio should stay bounded.

# %%
family = ball_family([0.0], 0.5, 4)
ex = KrylovExperiment(DriftSpec.from_function(lambda t, x: 0.5 * np.sin(x), 1, 0.5),
                      family, 2.0, 8.0, 1.0, 4000, 100, (0.0,), 3)
kr = krylov_ratio(ex, law)
print("ratios:", [round(r["ratio"], 3) for r in kr.rows], " spread:", round(kr.spread, 3))
