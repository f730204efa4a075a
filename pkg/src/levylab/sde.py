"""Euler schemes, coupling experiments and Krylov statistics for jump SDEs.

Paths live on the periodic box of the drift: states are kept unwrapped and
drifts are evaluated on the wrapped position. All Monte Carlo work is split
into blocks of :data:`levylab.rng.BLOCK_SIZE` paths with one spawned random
stream each, so the output does not depend on the number of worker threads.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, stats

from . import fieldio
from .grid import GridField, interpolate
from .rng import block_streams, map_blocks
from .stable import PathNoise, StableLaw, sample_path_noise

# ---------------------------------------------------------------------------
# drifts


_BUMP_TABLE = None


def bump_cdf(s) -> np.ndarray:
    """CDF of the unit-mass bump ``c exp(-1/(1-s^2))`` on ``(-1, 1)``."""
    global _BUMP_TABLE
    if _BUMP_TABLE is None:
        grid = np.linspace(-1.0, 1.0, 40001)
        dens = np.zeros_like(grid)
        inner = np.abs(grid) < 1
        dens[inner] = np.exp(-1.0 / (1.0 - grid[inner] ** 2))
        cum = integrate.cumulative_simpson(dens, x=grid, initial=0.0)
        _BUMP_TABLE = (grid, cum / cum[-1])
    g, c = _BUMP_TABLE
    return np.interp(s, g, c, left=0.0, right=1.0)


@dataclass
class DriftSpec:
    """Bounded drift ``b(t, x)`` evaluated on point arrays of shape ``(m, d)``.

    ``kind`` is one of ``"smooth"``, ``"indicator_composite"`` or
    ``"mollified"``; ``tags`` records regularity exponents and the location of
    any discontinuity set.
    """

    evaluator: Callable
    dim: int
    bound: float
    kind: str = "smooth"
    tags: dict = field(default_factory=dict)
    base: "DriftSpec | None" = None
    eps: float | None = None

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        return self.evaluator(t, x)

    def check_bound(self, points, t: float = 0.0, slack: float = 1e-12) -> bool:
        vals = self(t, np.atleast_2d(points))
        return bool(np.linalg.norm(vals, axis=1).max(initial=0.0) <= self.bound * (1 + slack))

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "DriftSpec":
        return cls(lambda t, x: np.zeros_like(x), dim, 0.0, tags={"zero": True})

    @classmethod
    def constant(cls, c) -> "DriftSpec":
        c = np.atleast_1d(np.asarray(c, float))
        return cls(lambda t, x: np.broadcast_to(c, x.shape).copy(), c.size, float(np.linalg.norm(c)))

    @classmethod
    def from_function(cls, fn, dim: int, bound: float, **kw) -> "DriftSpec":
        return cls(fn, dim, bound, **kw)

    @classmethod
    def from_field(cls, b: GridField, method: str = "spectral", kind: str = "smooth") -> "DriftSpec":
        """Time-constant drift given by a vector grid field, periodic in space."""
        grid = b.grid
        vec = b if b.is_vector else GridField(grid, b.values[None])
        bound = float(np.sqrt(np.sum(vec.values ** 2, axis=0)).max())

        def ev(t, x):
            return interpolate(vec, grid.wrap(x), method).reshape(x.shape[0], grid.dim)

        return cls(ev, grid.dim, bound, kind, {"grid_n": grid.n, "box_length": grid.box_length})

    @classmethod
    def indicator_composite_1d(cls, lo: float = 0.0, hi: float = 1.0, scale: float = 1.0,
                               period: float = 8.0) -> "DriftSpec":
        """``scale * (1_[lo,hi] - 1_(R minus [lo,hi]))`` on the circle of length ``period``."""
        half = 0.5 * period

        def ev(t, x):
            y = np.mod(x + half, period) - half
            inside = (y >= lo) & (y <= hi)
            return scale * np.where(inside, 1.0, -1.0)

        return cls(ev, 1, abs(scale), "indicator_composite",
                   {"interval": (lo, hi), "period": period, "scale": scale,
                    "discontinuities": (lo, hi)})

    def mollified(self, eps: float) -> "DriftSpec":
        """Convolution with the bump of radius ``eps`` (analytic for 1-D indicators)."""
        if self.kind != "indicator_composite":
            raise ValueError("analytic mollification is only available for indicator drifts")
        lo, hi = self.tags["interval"]
        period, scale = self.tags["period"], self.tags["scale"]
        if not 0 < eps < 0.25 * period:
            raise ValueError("eps must lie in (0, period/4)")
        half = 0.5 * period

        def ev(t, x):
            y = np.mod(x + half, period) - half
            ind = np.zeros_like(y)
            for m in (-1, 0, 1):
                s = y - m * period
                ind += bump_cdf((s - lo) / eps) - bump_cdf((s - hi) / eps)
            return scale * (2.0 * ind - 1.0)

        tags = dict(self.tags)
        tags["eps"] = eps
        return DriftSpec(ev, 1, self.bound, "mollified", tags, self, eps)


# ---------------------------------------------------------------------------
# path records


@dataclass
class PathRecord:
    times: np.ndarray
    states: np.ndarray
    increments: np.ndarray
    drifts: np.ndarray
    jumps: list
    seed: int | None = None
    kind: str = "X"

    def audit(self, rtol: float = 1e-12) -> float:
        """Largest relative gap between the states and ``x0 + sum(drift h + dL)``."""
        h = np.diff(self.times)[:, None]
        rebuilt = self.states[0] + np.concatenate(
            [np.zeros((1, self.states.shape[1])), np.cumsum(self.drifts * h + self.increments, axis=0)])
        scale = np.maximum(1.0, np.abs(self.states))
        gap = float(np.max(np.abs(rebuilt - self.states) / scale))
        if gap > rtol:
            raise AssertionError(f"bookkeeping audit failed: {gap:.2e}")
        return gap

    def to_bytes(self) -> bytes:
        jt = [j.time for j in self.jumps]
        jz = [j.jump for j in self.jumps]
        return fieldio.trajectory_to_bytes(self.times, self.states, self.increments, jt or None,
                                           jz or None, self.seed or 0)


def _jump_schedule(noise: PathNoise):
    """Indices of recorded jumps grouped per step, each group split into ranks."""
    order = np.lexsort((noise.jump_time, noise.jump_path, noise.jump_step))
    steps = noise.jump_step[order]
    bounds = np.searchsorted(steps, np.arange(noise.n_steps + 1))
    sched = []
    for j in range(noise.n_steps):
        idx = order[bounds[j]:bounds[j + 1]]
        ranks = []
        if idx.size:
            paths = noise.jump_path[idx]
            # rank of each jump among the jumps of its own path in this step
            first = np.r_[True, paths[1:] != paths[:-1]]
            start = np.maximum.accumulate(np.where(first, np.arange(idx.size), 0))
            rank = np.arange(idx.size) - start
            for r in range(rank.max() + 1):
                ranks.append(idx[rank == r])
        sched.append(ranks)
    return sched


def euler_from_noise(b: DriftSpec, x0, noise: PathNoise):
    """Left-point Euler scheme driven by a given noise batch.

    Within a step the unresolved increment and the recorded jumps (in time
    order) are first summed into ``dL`` and the update is ``(X + b h) + dL``.
    Zero drift therefore reproduces the running sum of the increments and
    the same floating point values as :func:`transformed_from_noise` with the
    identity transform. Returns ``(states (M, n+1, d), drifts (M, n, d),
    increments (M, n, d))``.
    """
    M, n, d = noise.small.shape
    h = noise.dt
    X = np.broadcast_to(np.asarray(x0, float).reshape(1, d), (M, d)).copy()
    states = np.empty((M, n + 1, d))
    drifts = np.empty((M, n, d))
    incs = np.empty((M, n, d))
    states[:, 0] = X
    sched = _jump_schedule(noise)
    for j in range(n):
        bj = np.asarray(b(j * h, X), float).reshape(M, d)
        drifts[:, j] = bj
        dl = noise.small[:, j].copy()
        for grp in sched[j]:
            p = noise.jump_path[grp]
            dl[p] = dl[p] + noise.jump_size[grp]
        X = X + bj * h
        X = X + dl
        incs[:, j] = dl
        states[:, j + 1] = X
    return states, drifts, incs


def _records(noise: PathNoise, states, drifts, incs, seed, kind="X"):
    times = np.linspace(0.0, noise.T, noise.n_steps + 1)
    return [PathRecord(times, states[m], incs[m], drifts[m], noise.jump_records(m, large_only=True),
                       seed, kind) for m in range(states.shape[0])]


def euler_path(b: DriftSpec, x0, law: StableLaw, T: float, n_steps: int, rng,
               noise: PathNoise | None = None, seed: int | None = None) -> PathRecord:
    """One Euler path ``X_{j+1} = X_j + b(t_j, X_j) h + dL_j`` with its large jumps."""
    if noise is None:
        noise = sample_path_noise(law, T, n_steps, 1, rng)
    states, drifts, incs = euler_from_noise(b, x0, noise)
    return _records(noise, states, drifts, incs, seed)[0]


def euler_paths(b: DriftSpec, x0, law: StableLaw, T: float, n_steps: int, n_paths: int, seed,
                threads: int = 1, **noise_kw):
    """Batched Euler paths; returns ``(states, noise_blocks)`` concatenated over blocks."""
    streams = block_streams(seed, n_paths)

    def run(sl, g):
        nz = sample_path_noise(law, T, n_steps, sl.stop - sl.start, g, **noise_kw)
        return euler_from_noise(b, x0, nz)[0]

    return np.concatenate(map_blocks(run, streams, threads))


# ---------------------------------------------------------------------------
# transformed scheme


def default_small_threshold(h: float, alpha: float) -> float:
    return min(1.0, h ** (1.0 / alpha))


def transformed_from_noise(tr, y0, noise: PathNoise, method=None):
    """Euler scheme for ``Y = Phi(X)`` driven by ``noise``.

    Jumps recorded in ``noise`` (those above its threshold ``eps``) enter
    through ``g_t(y, z)``; the rest of the increment enters through
    ``grad Phi(Phi^{-1} y)``. The drift is ``b~ - C_eps`` with ``C_eps`` the
    compensator of the recorded jumps in ``eps < |z| <= 1``.
    Returns ``(states, drifts, increments, jump_effects)``.
    """
    from .zvonkin import annulus_compensator, phi_inverse

    M, n, d = noise.small.shape
    h = noise.dt
    eps = noise.threshold
    Y = np.broadcast_to(np.asarray(y0, float).reshape(1, d), (M, d)).copy()
    states = np.empty((M, n + 1, d))
    drifts = np.empty((M, n, d))
    incs = np.empty((M, n, d))
    states[:, 0] = Y
    effects = np.zeros(noise.jump_size.shape)
    sched = _jump_schedule(noise)
    for j in range(n):
        t = j * h
        xs = phi_inverse(tr, t, Y, method)
        drift = tr.lambda_used * tr.v_at(t, xs, method) - tr._eval("large", t, xs, method)
        if eps < 1.0:
            drift = drift - annulus_compensator(tr, t, xs, eps, method)
        drifts[:, j] = drift
        jac = tr.grad_phi(t, xs, method)
        small = np.einsum("mij,mj->mi", jac, noise.small[:, j])
        Y = Y + drift * h
        dl = small.copy()
        # jumps act one after another on the running pre-jump state
        running = Y + small
        for grp in sched[j]:
            p = noise.jump_path[grp]
            jumps = _jump_effect(tr, t, running[p], noise.jump_size[grp], method)
            effects[grp] = jumps
            running[p] = running[p] + jumps
            dl[p] = dl[p] + jumps
        Y = Y + dl
        incs[:, j] = dl
        states[:, j + 1] = Y
    return states, drifts, incs, effects


def _jump_effect(tr, t, y, z, method):
    from .zvonkin import transformed_jump

    return transformed_jump(tr, t, y, z, method)


def transformed_path(tr, y0, law: StableLaw, T: float, n_steps: int, rng,
                     eps_small: float | None = None, noise: PathNoise | None = None,
                     method=None, seed: int | None = None) -> PathRecord:
    """One path of the transformed equation; see :func:`transformed_from_noise`."""
    if T > tr.T + 1e-12:
        raise ValueError("transform horizon is shorter than T")
    if noise is None:
        eps = default_small_threshold(T / n_steps, law.alpha) if eps_small is None else eps_small
        noise = sample_path_noise(law, T, n_steps, 1, rng, threshold=eps)
    states, drifts, incs, effects = transformed_from_noise(tr, y0, noise, method)
    rec = _records(noise, states, drifts, incs, seed, kind="Y")[0]
    rec.jumps = noise.jump_records(0, large_only=False)
    return rec


def coarsen_noise(noise: PathNoise, factor: int, threshold: float) -> PathNoise:
    """Aggregate ``factor`` consecutive steps and raise the recording threshold.

    Jumps at or below the new threshold are folded into the unresolved part,
    so the coarse and fine noises describe the same driving path.
    """
    if noise.n_steps % factor:
        raise ValueError("factor must divide the step count")
    if threshold < noise.threshold:
        raise ValueError("the coarse threshold cannot be below the fine one")
    M, n, d = noise.small.shape
    nc = n // factor
    inc = noise.increments.reshape(M, nc, factor, d).sum(axis=2)
    small = noise.small.reshape(M, nc, factor, d).sum(axis=2)
    step_c = noise.jump_step // factor
    keep = np.linalg.norm(noise.jump_size, axis=1) > threshold
    np.add.at(small, (noise.jump_path[~keep], step_c[~keep]), noise.jump_size[~keep])
    return PathNoise(noise.T, nc, threshold, inc, small, noise.jump_path[keep], step_c[keep],
                     noise.jump_time[keep], noise.jump_size[keep])


def conjugation_error(tr, b: DriftSpec, x0, law: StableLaw, T: float, n_steps: int,
                      n_paths: int, seed, levels: int = 2, eps0: float | None = None,
                      method=None, threads: int = 1) -> dict:
    """``sup_t |Phi_t(X_t) - Y_t|`` under successive halving of ``h`` and ``eps_small``.

    Level ``k`` uses ``n_steps * 2**k`` steps and threshold ``eps0 / 2**k``;
    all levels are driven by one noise sample at the finest level.
    """
    from .zvonkin import phi

    h0 = T / n_steps
    eps0 = default_small_threshold(h0, law.alpha) if eps0 is None else eps0
    fine_steps = n_steps * 2 ** (levels - 1)
    fine_eps = eps0 / 2 ** (levels - 1)
    y0 = phi(tr, 0.0, np.atleast_1d(np.asarray(x0, float)))
    streams = block_streams(seed, n_paths)

    def run(sl, g):
        fine = sample_path_noise(law, T, fine_steps, sl.stop - sl.start, g, threshold=fine_eps)
        out = []
        for k in range(levels):
            f = 2 ** (levels - 1 - k)
            nz = fine if f == 1 else coarsen_noise(fine, f, eps0 / 2 ** k)
            X = euler_from_noise(b, x0, nz)[0]
            Y = transformed_from_noise(tr, y0, nz, method)[0]
            hk = T / nz.n_steps
            gap = np.zeros(X.shape[0])
            for j in range(nz.n_steps + 1):
                gap = np.maximum(gap, np.linalg.norm(phi(tr, j * hk, X[:, j]) - Y[:, j], axis=1))
            out.append(gap)
        return np.stack(out)

    gaps = np.concatenate(map_blocks(run, streams, threads), axis=1)
    means = gaps.mean(axis=1)
    ses = gaps.std(axis=1, ddof=1) / math.sqrt(gaps.shape[1])
    rows = [{"level": k, "h": h0 / 2 ** k, "eps_small": eps0 / 2 ** k, "mean_sup_gap": float(means[k]),
             "se": float(ses[k]), "max_sup_gap": float(gaps[k].max())} for k in range(levels)]
    ratios = [float(means[k] / means[k + 1]) for k in range(levels - 1)]
    return {"rows": rows, "ratios": ratios}


# ---------------------------------------------------------------------------
# coupling experiment


@dataclass
class UniquenessReport:
    rows: list
    decreasing: bool
    final_ok: bool
    threshold: float

    @property
    def passed(self) -> bool:
        return self.decreasing and self.final_ok

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def coupled_uniqueness_experiment(b_levels, x0, law: StableLaw, T: float, n_steps: int,
                                  n_paths: int, seed, threshold_fraction: float = 0.05,
                                  threads: int = 1) -> UniquenessReport:
    """Drive Euler schemes for every drift level with the same noise.

    For adjacent levels reports ``E sup_t |X^(k) - X^(k+1)|`` with its
    standard error. ``decreasing`` holds when every next value is below the
    previous one plus two combined standard errors; ``final_ok`` compares the
    last value with ``threshold_fraction * bound * T``.
    """
    if len(b_levels) < 3:
        raise ValueError("need at least 3 drift levels")
    streams = block_streams(seed, n_paths)

    def run(sl, g):
        nz = sample_path_noise(law, T, n_steps, sl.stop - sl.start, g)
        paths = [euler_from_noise(b, x0, nz)[0] for b in b_levels]
        return np.stack([np.linalg.norm(p1 - p2, axis=2).max(axis=1)
                         for p1, p2 in zip(paths, paths[1:])])

    sups = np.concatenate(map_blocks(run, streams, threads), axis=1)
    means = sups.mean(axis=1)
    ses = sups.std(axis=1, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros_like(means)
    rows = []
    for k in range(len(means)):
        rows.append({"pair": k, "eps_a": b_levels[k].eps, "eps_b": b_levels[k + 1].eps,
                     "mean_sup_diff": float(means[k]), "se": float(ses[k])})
    decreasing = all(means[k + 1] < means[k] + 2.0 * math.hypot(ses[k], ses[k + 1])
                     for k in range(len(means) - 1))
    bound = max(b.bound for b in b_levels)
    thr = threshold_fraction * bound * T
    return UniquenessReport(rows, bool(decreasing), bool(means[-1] <= thr), thr)


def terminal_cdf_distances(b_levels, x0, law, T, n_steps, n_paths, seed, threads=1) -> list:
    """Sup-distance between empirical CDFs of ``X_T`` at adjacent drift levels (1-D)."""
    streams = block_streams(seed, n_paths)

    def run(sl, g):
        nz = sample_path_noise(law, T, n_steps, sl.stop - sl.start, g)
        return np.stack([euler_from_noise(b, x0, nz)[0][:, -1, 0] for b in b_levels])

    ends = np.concatenate(map_blocks(run, streams, threads), axis=1)
    return [float(stats.ks_2samp(a, c, method="asymp").statistic) for a, c in zip(ends, ends[1:])]


# ---------------------------------------------------------------------------
# Krylov statistics


def _window_bounded(p, q, d, a):
    return p > max(d / a, 1.0) and q > p * a / (p * a - d)


def _window_integrable(p, q, d, a):
    return p > d / (a - 1.0) and q > p * a / (p * (a - 1.0) - d)


# theorem tag -> exponent window on (p, q, d, alpha)
WINDOWS = {"bounded_drift": _window_bounded, "integrable_drift": _window_integrable}


def ball_family(center, r0: float, levels: int = 4) -> list:
    """Indicators of balls of radius ``r0 / 2**m`` for ``m = 0..levels-1``."""
    c = np.atleast_1d(np.asarray(center, float))
    out = []
    for m in range(levels):
        r = r0 / 2 ** m
        out.append({"center": c, "radius": r})
    return out


def ball_volume(d: int, r: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r ** d


@dataclass
class KrylovExperiment:
    drift: DriftSpec
    family: list
    p: float
    q: float
    T: float
    n_paths: int
    n_steps: int
    x0: tuple
    seed: int = 0
    theorem: str = "bounded_drift"

    def in_window(self, law: StableLaw) -> bool:
        return bool(WINDOWS[self.theorem](self.p, self.q, law.dim, law.alpha))

    def f_norm(self, member: dict, p: float | None = None) -> float:
        """``||f||_{L^q([0,T]; L^p)} = T**(1/q) |B_r|**(1/p)`` for a time-constant ball indicator."""
        p = self.p if p is None else p
        return self.T ** (1.0 / self.q) * ball_volume(len(member["center"]), member["radius"]) ** (1.0 / p)


@dataclass
class KrylovReport:
    rows: list
    max_ratio: float
    spread: float
    in_window: bool
    contrast: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def occupation_estimates(exp: KrylovExperiment, law: StableLaw, threads: int = 1):
    """Monte Carlo ``E sum_j h f(X_{t_j})`` per family member, with standard errors."""
    streams = block_streams(exp.seed, exp.n_paths)
    h = exp.T / exp.n_steps

    def run(sl, g):
        nz = sample_path_noise(law, exp.T, exp.n_steps, sl.stop - sl.start, g)
        X = euler_from_noise(exp.drift, exp.x0, nz)[0][:, :-1]
        out = []
        for mem in exp.family:
            inside = np.linalg.norm(X - mem["center"], axis=2) <= mem["radius"]
            out.append(h * inside.sum(axis=1))
        return np.stack(out)

    occ = np.concatenate(map_blocks(run, streams, threads), axis=1)
    return occ.mean(axis=1), occ.std(axis=1, ddof=1) / math.sqrt(exp.n_paths)


def krylov_ratio(exp: KrylovExperiment, law: StableLaw, rng=None, threads: int = 1,
                 contrast_p: float | None = None) -> KrylovReport:
    """Occupation integral divided by ``||f_m||_{L^q L^p}`` along a concentrating family.

    ``spread`` is the largest ratio over the smallest. With ``contrast_p`` the
    same statistic is also reported for that exponent.
    """
    if rng is not None:
        exp.seed = int(np.random.default_rng(rng).integers(2**63))
    mean, se = occupation_estimates(exp, law, threads)
    rows = []
    for mem, m, s in zip(exp.family, mean, se):
        nrm = exp.f_norm(mem)
        ratio = 0.0 if m == 0 else m / nrm
        rows.append({"radius": mem["radius"], "estimate": float(m), "se": float(s),
                     "norm": nrm, "ratio": float(ratio)})
    ratios = [r["ratio"] for r in rows]
    positive = [r for r in ratios if r > 0]
    spread = max(positive) / min(positive) if positive else 0.0
    contrast = []
    if contrast_p is not None:
        for mem, m in zip(exp.family, mean):
            contrast.append({"radius": mem["radius"], "p": contrast_p,
                             "ratio": float(m / exp.f_norm(mem, contrast_p)) if m else 0.0})
    return KrylovReport(rows, max(ratios), spread, exp.in_window(law), contrast)


def occupation_oracle_1d(law: StableLaw, x0: float, center: float, radius: float, T: float,
                         n_steps: int) -> float:
    """``h sum_j P(|x0 + L_{t_j} - c| <= r)`` for zero drift in one dimension.

    The marginal of ``L_t`` is symmetric stable with scale
    ``(t K_alpha (w_+ + w_-))**(1/alpha)``.
    """
    if law.dim != 1:
        raise ValueError("one-dimensional oracle")
    c = law.k_alpha * law.total_mass
    h = T / n_steps
    total = 0.0
    a, b = center - radius - x0, center + radius - x0
    for j in range(n_steps):
        t = j * h
        if t == 0:
            total += h * float(a <= 0.0 <= b)
            continue
        scale = (t * c) ** (1.0 / law.alpha)
        dist = stats.levy_stable(law.alpha, 0.0, loc=0.0, scale=scale)
        total += h * float(dist.cdf(b) - dist.cdf(a))
    return total
