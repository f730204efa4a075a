"""Symmetric alpha-stable laws described by a discrete spectral measure.

The Levy measure of the law is

    nu(dz) = sum_k w_k * r**(-1 - alpha) dr  along the ray r * theta_k,

so the Levy exponent is ``psi(xi) = K_alpha * sum_k w_k |<xi, theta_k>|**alpha``
with ``K_alpha = int_0^inf (1 - cos u) u**(-1 - alpha) du``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .errors import DegenerateSpectralMeasure, GridTooCoarse
from .rng import as_generator

DEGENERACY_EPS = 1e-10
_UNIT_TOL = 1e-12


def stable_constant_closed_form(alpha: float) -> float:
    return math.pi / (2.0 * special.gamma(1.0 + alpha) * math.sin(alpha * math.pi / 2.0))


def _half_sinc_sq(u):
    # (1 - cos u) / u**2 without cancellation near 0
    return 0.5 * np.sinc(u / (2.0 * np.pi)) ** 2


def stable_constant_quadrature(alpha: float) -> float:
    """``int_0^inf (1 - cos u) u**(-1-alpha) du`` by adaptive quadrature."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        near, _ = integrate.quad(_half_sinc_sq, 0.0, 1.0, weight="alg", wvar=(1.0 - alpha, 0.0),
                                 epsabs=1e-15, epsrel=1e-14, limit=200)
        osc, _ = integrate.quad(lambda u: u ** (-1.0 - alpha), 1.0, np.inf, weight="cos",
                                wvar=1.0, epsabs=1e-15, limlst=200)
    return near + 1.0 / alpha - osc


def truncated_cosine_integral(alpha: float, upper) -> np.ndarray:
    """``I(A) = int_0^A (1 - cos u) u**(-1-alpha) du`` for an array of ``A >= 0``.

    Values are accumulated over the sorted distinct abscissae so that each
    segment is integrated once.
    """
    upper = np.asarray(upper, dtype=float)
    flat = np.abs(upper).ravel()
    uniq, inverse = np.unique(flat, return_inverse=True)
    out = np.zeros_like(uniq)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        acc = 0.0
        prev = 0.0
        for i, a in enumerate(uniq):
            if a == 0.0:
                out[i] = 0.0
                continue
            if prev == 0.0:
                lo = min(a, 1.0)
                acc, _ = integrate.quad(_half_sinc_sq, 0.0, lo, weight="alg",
                                        wvar=(1.0 - alpha, 0.0), epsabs=1e-15, epsrel=1e-13)
                prev = lo
            if a > prev:
                seg, _ = integrate.quad(lambda u: _half_sinc_sq(u) * u ** (1.0 - alpha), prev, a,
                                        epsabs=1e-15, epsrel=1e-13, limit=400)
                acc += seg
                prev = a
            out[i] = acc
    return out[inverse].reshape(upper.shape)


@dataclass(frozen=True)
class JumpRecord:
    time: float
    jump: tuple
    is_large: bool

    def __post_init__(self):
        size = math.sqrt(sum(float(z) ** 2 for z in self.jump))
        if self.is_large != (size > 1.0):
            raise ValueError("is_large must equal |jump| > 1")


@dataclass(frozen=True, eq=True)
class StableLaw:
    """Symmetric alpha-stable law on R^d with a finite atomic spectral measure.

    Parameters
    ----------
    dim : int
        Dimension ``d``.
    alpha : float
        Stability index in ``(0, 2)``.
    atoms : sequence of (direction, weight)
        Point masses of the spectral measure. Directions must be unit vectors.
        If the list is not symmetric it is replaced by its symmetric closure
        with halved weights and ``was_symmetrized`` is set.
    """

    dim: int
    alpha: float
    atoms: tuple
    was_symmetrized: bool = field(default=False, compare=False)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        atoms = []
        for theta, w in self.atoms:
            theta = tuple(float(t) for t in np.atleast_1d(theta))
            if len(theta) != self.dim:
                raise ValueError("direction has wrong dimension")
            if abs(math.sqrt(sum(t * t for t in theta)) - 1.0) > _UNIT_TOL:
                raise ValueError(f"direction {theta} is not a unit vector")
            if not w > 0:
                raise ValueError("weights must be strictly positive")
            atoms.append((theta, float(w)))
        if not atoms:
            raise ValueError("spectral measure needs at least one atom")
        merged = _merge(atoms)
        if not _is_symmetric(merged):
            halved = [(t, w / 2.0) for t, w in merged] + [(tuple(-x for x in t), w / 2.0)
                                                          for t, w in merged]
            merged = _merge(halved)
            object.__setattr__(self, "was_symmetrized", True)
            warnings.warn("spectral measure was not symmetric; using its symmetric closure",
                          stacklevel=2)
        object.__setattr__(self, "atoms", tuple(sorted(merged)))
        k_quad = stable_constant_quadrature(self.alpha)
        k_closed = stable_constant_closed_form(self.alpha)
        if abs(k_quad - k_closed) > 1e-10 * max(1.0, abs(k_closed)):
            raise ArithmeticError(f"K_alpha mismatch: quadrature {k_quad}, closed form {k_closed}")
        object.__setattr__(self, "_k_quad", k_quad)
        object.__setattr__(self, "_k_closed", k_closed)

    # -- constructors -----------------------------------------------------
    @classmethod
    def symmetric_1d(cls, alpha: float, scale: float = 1.0) -> "StableLaw":
        """1-D law with ``psi(xi) = scale * |xi|**alpha``."""
        w = scale / (2.0 * stable_constant_closed_form(alpha))
        return cls(1, alpha, (((1.0,), w), ((-1.0,), w)))

    @classmethod
    def planar(cls, alpha: float, n_atoms: int, total_mass: float = 1.0,
               offset: float = 0.0) -> "StableLaw":
        """2-D law with ``n_atoms`` equally spaced equal-weight atoms."""
        if n_atoms % 2:
            raise ValueError("n_atoms must be even for a symmetric measure")
        ang = offset + 2.0 * np.pi * np.arange(n_atoms) / n_atoms
        w = total_mass / n_atoms
        return cls(2, alpha, tuple(((math.cos(a), math.sin(a)), w) for a in ang))

    # -- derived data -----------------------------------------------------
    @property
    def k_alpha(self) -> float:
        return self._k_quad

    @property
    def k_alpha_closed(self) -> float:
        return self._k_closed

    @cached_property
    def directions(self) -> np.ndarray:
        return np.array([t for t, _ in self.atoms], dtype=float)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @cached_property
    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """One representative direction per antipodal pair and its per-atom weight."""
        dirs, ws = [], []
        for theta, w in self.atoms:
            neg = tuple(-x for x in theta)
            if any(np.allclose(neg, d) for d in dirs):
                continue
            dirs.append(theta)
            ws.append(w)
        return np.array(dirs, dtype=float), np.array(ws, dtype=float)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def large_jump_rate(self) -> float:
        """``nu({|z| > 1}) = sum_k w_k / alpha``."""
        return self.total_mass / self.alpha

    # -- serialization ----------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{self.dim} {self.alpha!r}"]
        for theta, w in self.atoms:
            lines.append(" ".join(repr(t) for t in theta) + f" {w!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StableLaw":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        d, alpha = int(rows[0][0]), float(rows[0][1])
        atoms = []
        for row in rows[1:]:
            if len(row) != d + 1:
                raise ValueError(f"atom line {' '.join(row)!r} needs {d + 1} numbers")
            vals = [float(x) for x in row]
            atoms.append((tuple(vals[:d]), vals[d]))
        return cls(d, alpha, tuple(atoms))

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "StableLaw":
        return cls.from_text(Path(path).read_text())


def _merge(atoms):
    out = {}
    for theta, w in atoms:
        key = tuple(round(t, 13) + 0.0 for t in theta)
        out[key] = out.get(key, 0.0) + w
    return [(k, v) for k, v in out.items()]


def _is_symmetric(atoms) -> bool:
    table = {t: w for t, w in atoms}
    for t, w in atoms:
        neg = tuple(round(-x, 13) + 0.0 for x in t)
        if neg not in table or abs(table[neg] - w) > 1e-14 * max(1.0, w):
            return False
    return True


# ---------------------------------------------------------------------------
# exponent and non-degeneracy


def levy_exponent(law: StableLaw, xi) -> np.ndarray:
    """Evaluate ``psi`` at one frequency (shape ``(d,)``) or a stack ``(..., d)``."""
    xi = np.asarray(xi, dtype=float)
    if law.dim == 1 and (xi.ndim == 0 or xi.shape[-1] != 1):
        xi = xi[..., None]
    proj = np.abs(xi @ law.directions.T)
    return law.k_alpha * (proj ** law.alpha) @ law.weights


def _sphere_points(d: int, n: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        ang = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if d == 3:
        i = np.arange(n) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / n)
        golden = np.pi * (1.0 + 5 ** 0.5)
        return np.stack([np.cos(golden * i) * np.sin(phi), np.sin(golden * i) * np.sin(phi),
                         np.cos(phi)], axis=1)
    g = np.random.default_rng(0).standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _sphere_chart(d: int, params: np.ndarray) -> np.ndarray:
    if d == 2:
        return np.array([math.cos(params[0]), math.sin(params[0])])
    th, ph = params
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def nondegeneracy_constant(law: StableLaw, sphere_samples: int = 2048) -> float:
    """Estimate ``C_alpha = min_{|theta|=1} psi(theta)``.

    The minimum over a quasi-uniform sphere sample is refined by local
    minimisation from the best few samples. Raises
    :class:`DegenerateSpectralMeasure` when the atoms do not span R^d or the
    estimate falls below ``1e-10``.
    """
    d = law.dim
    if sphere_samples < 2 * d:
        raise ValueError("sphere_samples must be at least 2*d")
    if np.linalg.matrix_rank(law.directions, tol=1e-12) < d:
        raise DegenerateSpectralMeasure(
            f"spectral measure atoms span a proper subspace of R^{d}")
    pts = _sphere_points(d, sphere_samples)
    vals = levy_exponent(law, pts)
    best = float(vals.min())
    if d in (2, 3):
        from scipy import optimize

        for idx in np.argsort(vals)[:6]:
            p = pts[idx]
            if d == 2:
                x0 = np.array([math.atan2(p[1], p[0])])
            else:
                x0 = np.array([math.acos(np.clip(p[2], -1, 1)), math.atan2(p[1], p[0])])
            res = optimize.minimize(lambda a: float(levy_exponent(law, _sphere_chart(d, a))), x0,
                                    method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-15})
            best = min(best, float(res.fun))
    if best < DEGENERACY_EPS:
        raise DegenerateSpectralMeasure(f"min psi on the sphere is {best:.3e}")
    return best


def require_nondegenerate(law: StableLaw) -> None:
    if np.linalg.matrix_rank(law.directions, tol=1e-12) < law.dim:
        raise DegenerateSpectralMeasure(
            f"spectral measure atoms span a proper subspace of R^{law.dim}")


# ---------------------------------------------------------------------------
# density


def density(law: StableLaw, t: float, grid, nyquist_tol: float = 1e-14):
    """Density ``p_t`` on a periodic grid by discrete Fourier inversion.

    The result is the periodisation of ``p_t`` over the box, so its grid mass
    is one up to rounding.
    """
    from .grid import GridField

    if t <= 0:
        raise ValueError("t must be positive")
    if law.dim != grid.dim or grid.dim > 3:
        raise ValueError("grid dimension must match the law and be at most 3")
    sym = np.exp(-t * grid.psi(law))
    edge = grid.nyquist_shell()
    if sym[edge].max() > nyquist_tol:
        raise GridTooCoarse(
            f"exp(-t psi) = {sym[edge].max():.2e} at the Nyquist shell exceeds {nyquist_tol:.0e}; "
            "use more points or a smaller box")
    # grid origin sits at -l/2, so shift phases to put x = 0 at index n/2
    phase = grid.origin_phase()
    vals = np.fft.ifftn(sym * phase).real * grid.n ** grid.dim / grid.box_length ** grid.dim
    return GridField(grid, vals)


# ---------------------------------------------------------------------------
# sampling


def standard_stable(alpha: float, size, rng) -> np.ndarray:
    """Chambers-Mallows-Stuck variates with ``E exp(iuS) = exp(-|u|**alpha)``."""
    rng = as_generator(rng)
    u = rng.uniform(-np.pi / 2, np.pi / 2, size)
    if alpha == 1.0:
        return np.tan(u)
    w = rng.standard_exponential(size)
    return (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha))


def _pair_scales(law: StableLaw, dt: float) -> np.ndarray:
    _, w = law.pairs
    return (dt * 2.0 * w * law.k_alpha) ** (1.0 / law.alpha)


def sample_increments(law: StableLaw, dt: float, size: int, rng) -> np.ndarray:
    """``size`` exact increments of the process over ``dt``, shape ``(size, d)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    rng = as_generator(rng)
    dirs, _ = law.pairs
    scales = _pair_scales(law, dt)
    s = standard_stable(law.alpha, (size, len(scales)), rng) * scales
    return s @ dirs


def sample_increment(law: StableLaw, dt: float, rng) -> np.ndarray:
    return sample_increments(law, dt, 1, rng)[0]


def _pareto_tail(alpha, lo, hi, u):
    # inverse CDF of density proportional to r**(-1-alpha) on (lo, hi]
    if np.isinf(hi):
        return lo * u ** (-1.0 / alpha)
    a, b = lo ** -alpha, hi ** -alpha
    return (a - u * (a - b)) ** (-1.0 / alpha)


@dataclass
class PathNoise:
    """Driving noise for a batch of paths on a uniform time grid.

    ``increments[m, j]`` is the increment of path ``m`` over step ``j``. Jumps
    larger than ``threshold`` are listed individually in ``jump_path``,
    ``jump_step``, ``jump_time`` and ``jump_size``; ``small`` holds the part of
    each increment not accounted for by those jumps.
    """

    T: float
    n_steps: int
    threshold: float
    increments: np.ndarray
    small: np.ndarray
    jump_path: np.ndarray
    jump_step: np.ndarray
    jump_time: np.ndarray
    jump_size: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.increments.shape[0]

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    def large_mask(self) -> np.ndarray:
        return np.linalg.norm(self.jump_size, axis=1) > 1.0

    def jump_records(self, path: int = 0, large_only: bool = True) -> list[JumpRecord]:
        sel = self.jump_path == path
        if large_only:
            sel &= self.large_mask()
        order = np.argsort(self.jump_time[sel], kind="stable")
        times = self.jump_time[sel][order]
        sizes = self.jump_size[sel][order]
        return [JumpRecord(float(t), tuple(float(x) for x in z), bool(np.linalg.norm(z) > 1.0))
                for t, z in zip(times, sizes)]


def sample_path_noise(law: StableLaw, T: float, n_steps: int, n_paths: int, rng,
                      threshold: float | None = None, small_jump_count: float = 16.0) -> PathNoise:
    """Sample step increments together with their individually resolved jumps.

    Along each antipodal pair the Levy measure is split at ``|z| = 1``: large
    jumps are a compound Poisson process with radial law ``r**(-1-alpha)`` on
    ``(1, inf)``. Jumps in ``(eps, 1]`` are sampled exactly as a second
    compound Poisson process, and the remaining ``|z| <= eps`` part is replaced
    by a centred Gaussian with the same covariance.

    Jumps above ``threshold`` (default 1) are recorded. By default ``eps`` is
    picked so that about ``small_jump_count`` jumps exceed it per step and pair.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    rng = as_generator(rng)
    alpha = law.alpha
    dirs, w = law.pairs
    d = law.dim
    h = T / n_steps
    inc = np.zeros((n_paths, n_steps, d))
    small = np.zeros((n_paths, n_steps, d))
    rec_p, rec_s, rec_t, rec_z = [], [], [], []
    thr = 1.0 if threshold is None else float(threshold)
    for k in range(len(w)):
        rate_pair = 2.0 * w[k]
        if threshold is None:
            eps = min(1.0, (rate_pair * h / (alpha * small_jump_count)) ** (1.0 / alpha))
        else:
            eps = min(1.0, thr)
        # large jumps: |z| > 1
        n_big = rng.poisson(rate_pair / alpha * T, n_paths)
        tot = int(n_big.sum())
        big_path = np.repeat(np.arange(n_paths), n_big)
        big_time = rng.uniform(0.0, T, tot)
        big_r = _pareto_tail(alpha, 1.0, np.inf, rng.uniform(size=tot)) * rng.choice([-1.0, 1.0], tot)
        # mid jumps: eps < |z| <= 1
        mid_rate = rate_pair * (eps ** -alpha - 1.0) / alpha
        n_mid = rng.poisson(mid_rate * h, (n_paths, n_steps))
        tot_mid = int(n_mid.sum())
        flat = np.repeat(np.arange(n_paths * n_steps), n_mid.ravel())
        mid_path, mid_step = np.divmod(flat, n_steps)
        mid_time = (mid_step + rng.uniform(size=tot_mid)) * h
        mid_r = _pareto_tail(alpha, eps, 1.0, rng.uniform(size=tot_mid)) * rng.choice([-1.0, 1.0], tot_mid)
        # tiny jumps: Gaussian with matched variance
        var = rate_pair * h * eps ** (2.0 - alpha) / (2.0 - alpha)
        gauss = rng.standard_normal((n_paths, n_steps)) * math.sqrt(var)

        big_step = np.minimum((big_time / h).astype(np.int64), n_steps - 1)
        along = gauss.copy()
        np.add.at(along, (big_path, big_step), big_r)
        np.add.at(along, (mid_path, mid_step), mid_r)
        inc += along[..., None] * dirs[k]

        tiny = gauss.copy()
        paths = np.concatenate([big_path, mid_path])
        steps = np.concatenate([big_step, mid_step])
        times = np.concatenate([big_time, mid_time])
        radii = np.concatenate([big_r, mid_r])
        keep = np.abs(radii) > thr
        np.add.at(tiny, (paths[~keep], steps[~keep]), radii[~keep])
        small += tiny[..., None] * dirs[k]
        rec_p.append(paths[keep])
        rec_s.append(steps[keep])
        rec_t.append(times[keep])
        rec_z.append(radii[keep][:, None] * dirs[k])
    jp = np.concatenate(rec_p)
    js = np.concatenate(rec_s)
    jt = np.concatenate(rec_t)
    jz = np.concatenate(rec_z) if rec_z else np.zeros((0, d))
    order = np.lexsort((jt, jp))
    return PathNoise(T, n_steps, thr, inc, small, jp[order], js[order], jt[order], jz[order])


def sample_path_with_jumps(law: StableLaw, T: float, n_steps: int, rng, **kwargs):
    """Single path: ``(increments (n_steps, d), [JumpRecord, ...])`` of large jumps."""
    noise = sample_path_noise(law, T, n_steps, 1, rng, **kwargs)
    return noise.increments[0], noise.jump_records(0)
