"""Picard solvers for the nonlocal parabolic equations.

Both solvers work on the mild (Duhamel) form with zero initial data,

    u_t = int_0^t exp(-lam (t-s)) T_{t-s} G_s ds,

where ``G_s = kappa |grad u_s| + f_s`` for the semi-linear problem and
``G_s = b_s . grad u_s + f_s`` together with ``lam > 0`` for the linear drift
problem. The integrand is frozen at the left end of each sub-interval, and the
semigroup weights over a sub-interval of length ``h`` are integrated exactly:

    U_{i+1} = exp(-h m) U_i + (1 - exp(-h m)) / m * G_i,    m = psi + lam,

componentwise in Fourier space. The time singularity ``(t-s)**(-gamma/alpha)``
never has to be sampled.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InsufficientNodes, NoContraction
from .grid import GridField, NormParams, PeriodicGrid


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_steps: int

    def __post_init__(self):
        if not self.T > 0 or self.n_steps < 1:
            raise ValueError("need T > 0 and n_steps >= 1")

    @property
    def h(self) -> float:
        return self.T / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return self.T * np.arange(self.n_steps + 1) / self.n_steps

    def refined(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.T, self.n_steps * factor)


class SpaceTimeField:
    """Frames of a field on the nodes of a :class:`TimeGrid`.

    Values are stored as one array of shape ``(n_steps + 1, components) +
    grid.shape``.
    """

    def __init__(self, timegrid: TimeGrid, grid: PeriodicGrid, data):
        data = np.asarray(data, dtype=float)
        if data.ndim == grid.dim + 1:
            data = data[:, None]
        if data.shape[0] != timegrid.n_steps + 1 or data.shape[2:] != grid.shape:
            raise ValueError(f"data of shape {data.shape} does not fit the grids")
        self.timegrid = timegrid
        self.grid = grid
        self.data = data

    @property
    def components(self) -> int:
        return self.data.shape[1]

    @property
    def frames(self) -> list[GridField]:
        return [self.frame(j) for j in range(self.data.shape[0])]

    def frame(self, j: int) -> GridField:
        vals = self.data[j]
        return GridField(self.grid, vals if self.components > 1 else vals[0])

    def __len__(self):
        return self.data.shape[0]

    @classmethod
    def from_frames(cls, timegrid: TimeGrid, frames) -> "SpaceTimeField":
        frames = list(frames)
        grid = frames[0].grid
        return cls(timegrid, grid, np.stack([fr.stacked() for fr in frames]))

    @classmethod
    def constant(cls, timegrid: TimeGrid, f: GridField) -> "SpaceTimeField":
        data = np.broadcast_to(f.stacked(), (timegrid.n_steps + 1,) + f.stacked().shape)
        return cls(timegrid, f.grid, np.array(data))

    @classmethod
    def zeros(cls, timegrid: TimeGrid, grid: PeriodicGrid, components: int = 1) -> "SpaceTimeField":
        return cls(timegrid, grid, np.zeros((timegrid.n_steps + 1, components) + grid.shape))

    def step_values(self, n_fine: int) -> np.ndarray:
        """Left-endpoint values for each of ``n_fine`` equal sub-intervals."""
        n = self.timegrid.n_steps
        if n_fine % n:
            raise ValueError("fine step count must be a multiple of the data step count")
        idx = np.arange(n_fine) // (n_fine // n)
        return self.data[idx]

    def reversed(self) -> "SpaceTimeField":
        """Frames in reverse time order, ``w_t = u_{T-t}``."""
        return SpaceTimeField(self.timegrid, self.grid, self.data[::-1].copy())

    def sample(self, j: int) -> np.ndarray:
        return self.data[j]


@dataclass
class SolverConfig:
    kappa: float = 0.0
    lam: float = 0.0
    picard_tol: float = 1e-10
    max_picard: int = 50
    quad_substeps: int = 1
    norm_params: NormParams = field(default_factory=lambda: NormParams(beta=0.0, p=2.0, gamma=1.2, q=8.0))

    def __post_init__(self):
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.max_picard < 1 or self.quad_substeps < 1:
            raise ValueError("max_picard and quad_substeps must be positive")
        if self.kappa < 0 or self.lam < 0:
            raise ValueError("kappa and lambda must be nonnegative")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["norm_params"] = asdict(self.norm_params)
        return out


@dataclass
class ConvergenceReport:
    mode: str
    converged: bool
    iterations: int
    updates: list
    ratios: list
    profile: list
    times: list
    config: dict
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


@dataclass
class FitReport:
    slope: float
    stderr: float
    intercept: float
    x: list
    y: list
    theoretical: float | None = None
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def loglog_fit(x, y) -> tuple[float, float, float]:
    """Least-squares slope, its standard error and the intercept of log y on log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    n = lx.size
    if n > 2:
        resid = ly - A @ coef
        s2 = resid @ resid / (n - 2)
        se = math.sqrt(s2 / np.sum((lx - lx.mean()) ** 2))
    else:
        se = float("nan")
    return float(coef[0]), float(se), float(coef[1])


# ---------------------------------------------------------------------------
# batched spectral helpers on arrays shaped (frames, components) + grid


def _fft(a, grid):
    return np.fft.fftn(a, axes=tuple(range(-grid.dim, 0)))


def _ifft(a, grid):
    return np.fft.ifftn(a, axes=tuple(range(-grid.dim, 0))).real


def _grad_hat(U, grid):
    """Fourier gradient: ``(frames, components, d) + grid`` from ``(frames, components) + grid``."""
    out = []
    for i in range(grid.dim):
        mult = np.where(grid.index_freq[..., i] == -(grid.n // 2), 0.0, 1j * grid.xi[..., i])
        out.append(U * mult)
    return np.stack(out, axis=2)


def bessel_norms(data: np.ndarray, grid: PeriodicGrid, beta: float, p: float) -> np.ndarray:
    """``||data[j]||_{beta,p}`` for every frame ``j`` (Euclidean over components)."""
    if p == 2.0:
        F = _fft(data, grid)
        w = (1.0 + grid.xi_sq) ** beta
        s = np.sum(np.abs(F) ** 2 * w, axis=tuple(range(-grid.dim, 0))).sum(axis=1)
        return np.sqrt(s * grid.cell_volume / grid.size)
    vals = _ifft(_fft(data, grid) * (1.0 + grid.xi_sq) ** (0.5 * beta), grid) if beta else data
    mag = np.sqrt(np.sum(vals ** 2, axis=1))
    return (np.sum(mag ** p, axis=tuple(range(1, grid.dim + 1))) * grid.cell_volume) ** (1.0 / p)


def l2_norms(data: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    return np.sqrt(np.sum(data ** 2, axis=tuple(range(1, data.ndim))) * grid.cell_volume)


class _Duhamel:
    """Exact-weight sweep for piecewise-constant integrands."""

    def __init__(self, grid, law, lam, h):
        m = grid.psi(law) + lam
        self.decay = np.exp(-h * m)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.weight = np.where(m > 0, -np.expm1(-h * m) / np.where(m > 0, m, 1.0), h)
        self.grid = grid

    def sweep(self, G_hat: np.ndarray) -> np.ndarray:
        """``G_hat[i]`` acts on sub-interval ``i``; returns all nodes in Fourier space."""
        n = G_hat.shape[0]
        U = np.zeros((n + 1,) + G_hat.shape[1:], dtype=complex)
        for i in range(n):
            U[i + 1] = self.decay * U[i] + self.weight * G_hat[i]
        return U


def _check_alpha(law):
    if not 1.0 < law.alpha < 2.0:
        raise ValueError("the PIDE solvers need alpha in (1, 2)")


def _integrand_semilinear(U_hat, f_steps, kappa, grid):
    # U_hat: nodes in Fourier space; integrand on each sub-interval uses its left node
    G = f_steps.copy()
    if kappa:
        grads = _ifft(_grad_hat(U_hat[:-1], grid), grid)
        G += kappa * np.sqrt(np.sum(grads ** 2, axis=2))
    return G


def _integrand_drift(U_hat, f_steps, b_steps, grid):
    G = f_steps.copy()
    if b_steps is not None:
        grads = _ifft(_grad_hat(U_hat[:-1], grid), grid)  # (n, comps, d) + grid
        G += np.einsum("nd...,ncd...->nc...", b_steps, grads)
    return G


def _picard(integrand, f: SpaceTimeField, law, cfg: SolverConfig, lam: float, beta_norm: float,
            mode: str, extra: dict):
    grid = f.grid
    n_fine = f.timegrid.n_steps * cfg.quad_substeps
    tg = f.timegrid.refined(cfg.quad_substeps)
    duh = _Duhamel(grid, law, lam, tg.h)
    p = cfg.norm_params.p
    U_hat = np.zeros((n_fine + 1, f.components) + grid.shape, dtype=complex)
    prev_real = np.zeros(U_hat.shape)
    updates, ratios = [], []
    converged = False
    for it in range(1, cfg.max_picard + 1):
        G = integrand(U_hat)
        U_hat = duh.sweep(_fft(G, grid))
        cur = _ifft(U_hat, grid)
        upd = float(bessel_norms(cur - prev_real, grid, beta_norm, p).max())
        if updates:
            ratios.append(upd / updates[-1] if updates[-1] > 0 else 0.0)
        updates.append(upd)
        prev_real = cur
        if upd <= cfg.picard_tol:
            converged = True
            break
    if not converged:
        raise NoContraction(
            f"Picard iteration did not reach {cfg.picard_tol:.1e} in {cfg.max_picard} steps "
            f"(last update {updates[-1]:.2e}); halve the horizon T")
    u = SpaceTimeField(tg, grid, cur)
    profile = bessel_norms(cur, grid, beta_norm, p)
    rep = ConvergenceReport(mode, converged, len(updates), updates, ratios, profile.tolist(),
                            tg.nodes.tolist(), cfg.to_dict(), extra)
    return u, rep


def solve_semilinear(f: SpaceTimeField, law, cfg: SolverConfig):
    """Solve ``u_t = int_0^t T_{t-s}(kappa |grad u_s| + f_s) ds`` by Picard iteration.

    Returns the solution on the refined time grid (``quad_substeps`` sub-nodes
    per data step) and a :class:`ConvergenceReport`. The stopping rule is on
    ``sup_j ||u^(n)_{t_j} - u^(n-1)_{t_j}||_{gamma,p}``.
    """
    _check_alpha(law)
    npar = cfg.norm_params
    if not 1.0 < npar.gamma < law.alpha:
        raise ValueError("gamma must lie in (1, alpha)")
    if not npar.q > law.alpha / (law.alpha - npar.gamma):
        raise ValueError("q must exceed alpha / (alpha - gamma)")
    if f.components != 1:
        raise ValueError("the semi-linear equation is scalar")
    n_fine = f.timegrid.n_steps * cfg.quad_substeps
    f_steps = f.step_values(n_fine)
    return _picard(lambda U: _integrand_semilinear(U, f_steps, cfg.kappa, f.grid), f, law, cfg,
                   0.0, npar.gamma, "semilinear", {})


def check_drift_exponents(npar: NormParams, d: int) -> None:
    if not (npar.gamma + npar.beta - 1.0) * npar.p > d:
        raise ValueError("need (gamma + beta - 1) p > d")


def solve_linear_drift(b: SpaceTimeField | None, f: SpaceTimeField, law, cfg: SolverConfig):
    """Solve ``u_t = int_0^t exp(-lam(t-s)) T_{t-s}(b_s . grad u_s + f_s) ds``.

    ``f`` may have several components; each one is transported by the same
    drift ``b`` (``d`` components, or ``None`` for zero drift). The stopping
    rule and the reported profile use the ``gamma + beta`` Bessel norm.
    """
    _check_alpha(law)
    npar = cfg.norm_params
    check_drift_exponents(npar, f.grid.dim)
    n_fine = f.timegrid.n_steps * cfg.quad_substeps
    f_steps = f.step_values(n_fine)
    extra = {"b_sup": 0.0}
    b_steps = None
    if b is not None:
        if b.grid != f.grid or b.timegrid != f.timegrid:
            raise ValueError("b and f must share grids")
        if b.components != f.grid.dim:
            raise ValueError("drift needs d components")
        b_steps = b.step_values(n_fine)
        extra["b_sup"] = float(np.sqrt(np.sum(b.data ** 2, axis=1)).max())
        if not np.any(b_steps):
            b_steps = None
    return _picard(lambda U: _integrand_drift(U, f_steps, b_steps, f.grid), f, law, cfg,
                   cfg.lam, npar.gamma + npar.beta, "linear_drift", extra)


def duhamel_rhs(u: SpaceTimeField, f: SpaceTimeField, law, cfg: SolverConfig, mode: str,
                b: SpaceTimeField | None = None, split: int = 2) -> np.ndarray:
    """Right-hand side of the integral equation evaluated on ``u``'s own nodes.

    Each interval of ``u``'s time grid is split into ``split`` sub-intervals;
    the integrand stays frozen at the left node of ``u``'s interval.
    """
    grid = u.grid
    n_u = u.timegrid.n_steps
    lam = cfg.lam if mode == "linear_drift" else 0.0
    U_hat = _fft(u.data, grid)
    f_steps = f.step_values(n_u)
    if mode == "semilinear":
        G = _integrand_semilinear(U_hat, f_steps, cfg.kappa, grid)
    elif mode == "linear_drift":
        G = _integrand_drift(U_hat, f_steps, None if b is None else b.step_values(n_u), grid)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    G_hat = np.repeat(_fft(G, grid), split, axis=0)
    duh = _Duhamel(grid, law, lam, u.timegrid.h / split)
    return _ifft(duh.sweep(G_hat)[::split], grid)


def residual(u: SpaceTimeField, f: SpaceTimeField, law, cfg: SolverConfig, mode: str = "semilinear",
             b: SpaceTimeField | None = None) -> float:
    """``max_j ||u_{t_j} - RHS(u)_{t_j}||_{L^2}`` with the right-hand side recomputed at 2x substeps."""
    rhs = duhamel_rhs(u, f, law, cfg, mode, b, split=2)
    return float(l2_norms(u.data - rhs, u.grid).max())


def lq_lp_norm_profile(f: SpaceTimeField, n_fine: int, p: float, q: float) -> np.ndarray:
    """``||f||_{L^q([0, t_j]; L^p)}`` at each fine node for piecewise-constant ``f``."""
    steps = f.step_values(n_fine)
    h = f.timegrid.T / n_fine
    lp = bessel_norms(steps, f.grid, 0.0, p)
    return np.concatenate([[0.0], np.cumsum(h * lp ** q) ** (1.0 / q)])


def check_small_time_bound(u: SpaceTimeField, f: SpaceTimeField, cfg: SolverConfig, law=None,
                           min_nodes: int = 8) -> FitReport:
    """Fit ``log(||u_t||_{gamma,p} / ||f||_{L^q([0,t];L^p)})`` against ``log t``.

    The window is the first decade of nodes ``[t_1, 10 t_1]``; the theoretical
    exponent ``1 - gamma/alpha - 1/q`` is reported when ``law`` is given.
    """
    npar = cfg.norm_params
    nodes = u.timegrid.nodes
    t1 = nodes[1]
    sel = np.nonzero((nodes >= t1) & (nodes <= 10.0 * t1 * (1 + 1e-12)))[0]
    if sel.size < min_nodes:
        raise InsufficientNodes(f"{sel.size} nodes in the first decade, need {min_nodes}")
    num = bessel_norms(u.data[sel], u.grid, npar.gamma, npar.p)
    den = lq_lp_norm_profile(f, u.timegrid.n_steps, npar.p, npar.q)[sel]
    keep = (num > 0) & (den > 0)
    if keep.sum() < min_nodes:
        raise InsufficientNodes("too few nodes with nonzero data in the fit window")
    x, y = nodes[sel][keep], (num / den)[keep]
    slope, se, icpt = loglog_fit(x, y)
    theo = None if law is None else 1.0 - npar.gamma / law.alpha - 1.0 / npar.q
    return FitReport(slope, se, icpt, x.tolist(), y.tolist(), theo)


def check_lambda_decay(b, f: SpaceTimeField, law, cfg: SolverConfig, lambdas) -> FitReport:
    """Solve the drift equation for each ``lambda`` and fit ``sup_t ||u^lambda_t||_{gamma+beta,p}``.

    ``passed`` records whether the fitted slope is negative; ``extra`` holds
    the empirical decay rate and a monotonicity flag.
    """
    lambdas = [float(v) for v in lambdas]
    if len(lambdas) < 4 or any(b2 <= b1 for b1, b2 in zip(lambdas, lambdas[1:])):
        raise ValueError("need at least 4 increasing lambda values")
    if min(lambdas) < 1 or max(lambdas) / min(lambdas) < 100:
        raise ValueError("lambda values must be >= 1 and span two decades")
    sups = []
    reports = []
    for lam in lambdas:
        c = SolverConfig(cfg.kappa, lam, cfg.picard_tol, cfg.max_picard, cfg.quad_substeps,
                         cfg.norm_params)
        u, rep = solve_linear_drift(b, f, law, c)
        sups.append(max(rep.profile))
        reports.append(rep.iterations)
    slope, se, icpt = loglog_fit(lambdas, sups)
    monotone = all(s2 <= s1 * (1 + 1e-12) for s1, s2 in zip(sups, sups[1:]))
    return FitReport(slope, se, icpt, lambdas, sups, None, slope < 0,
                     {"delta": -slope, "monotone": monotone, "iterations": reports})
