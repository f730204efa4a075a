"""Function calculus on a periodic box grid.

Everything here treats the box ``[-l/2, l/2)^d`` as a torus, so Fourier
multipliers act exactly. Fields that are meant to model functions on R^d
should be supported well inside the box; :func:`boundary_ratio` reports how
much of a field reaches the box faces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from .errors import SpectralTailTooLarge

# ---------------------------------------------------------------------------
# grid and field containers


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid with ``n`` points per axis on the torus ``[-l/2, l/2)^d``.

    Point ``j`` along an axis sits at ``-l/2 + j*l/n``, so ``x = 0`` is index
    ``n // 2``.
    """

    dim: int
    n: int
    box_length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError("points per axis must be a power of two and at least 8")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def h(self) -> float:
        return self.box_length / self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def size(self) -> int:
        return self.n ** self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return -0.5 * self.box_length + self.h * np.arange(self.n)

    @cached_property
    def coords(self) -> np.ndarray:
        """Point coordinates, shape ``(d,) + shape``."""
        return np.stack(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """1-D angular frequencies in FFT order."""
        return 2.0 * np.pi / self.box_length * np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def xi(self) -> np.ndarray:
        """Frequency stack of shape ``shape + (d,)`` in FFT order."""
        return np.stack(np.meshgrid(*([self.wavenumbers] * self.dim), indexing="ij"), axis=-1)

    @cached_property
    def xi_sq(self) -> np.ndarray:
        return np.sum(self.xi ** 2, axis=-1)

    @cached_property
    def index_freq(self) -> np.ndarray:
        """Integer frequency indices ``-n/2 .. n/2-1`` per axis, shape ``shape + (d,)``."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(int)
        return np.stack(np.meshgrid(*([k] * self.dim), indexing="ij"), axis=-1)

    def nyquist_shell(self) -> np.ndarray:
        return np.any(self.index_freq == -(self.n // 2), axis=-1)

    def origin_phase(self) -> np.ndarray:
        """``exp(-i xi . x_0)`` for the corner point ``x_0 = (-l/2, ...)``."""
        return np.where(np.sum(self.index_freq, axis=-1) % 2 == 0, 1.0, -1.0)

    def psi(self, law) -> np.ndarray:
        """Levy exponent on the frequency lattice (cached per law)."""
        cache = self.__dict__.setdefault("_psi_cache", {})
        key = (law.alpha, law.atoms)
        if key not in cache:
            from .stable import levy_exponent

            if law.dim != self.dim:
                raise ValueError("law and grid dimensions differ")
            cache[key] = levy_exponent(law, self.xi.reshape(-1, self.dim)).reshape(self.shape)
        return cache[key]

    def refined(self, factor: int = 2) -> "PeriodicGrid":
        return PeriodicGrid(self.dim, self.n * factor, self.box_length)

    def wrap(self, x) -> np.ndarray:
        """Map points into ``[-l/2, l/2)``."""
        half = 0.5 * self.box_length
        return np.mod(np.asarray(x, dtype=float) + half, self.box_length) - half


class GridField:
    """Values of a scalar (``components == 1``) or vector field on a grid.

    Scalar values have shape ``grid.shape``; vector values have shape
    ``(components,) + grid.shape``.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: PeriodicGrid, values):
        values = np.asarray(values)
        if values.shape != grid.shape and values.shape[1:] != grid.shape:
            raise ValueError(f"values of shape {values.shape} do not fit grid {grid.shape}")
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        self.grid = grid
        self.values = values

    @property
    def components(self) -> int:
        return 1 if self.values.shape == self.grid.shape else self.values.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.values.shape != self.grid.shape

    @property
    def is_real(self) -> bool:
        return self.values.dtype.kind == "f"

    def component(self, i: int) -> "GridField":
        return GridField(self.grid, self.values[i]) if self.is_vector else self

    def stacked(self) -> np.ndarray:
        """Values with a leading component axis, also for scalars."""
        return self.values if self.is_vector else self.values[None]

    def real(self, tol: float = 1e-10) -> "GridField":
        if not self.is_real:
            imag = np.abs(self.values.imag).max(initial=0.0)
            if imag > tol:
                raise ValueError(f"imaginary part {imag:.2e} exceeds {tol:.0e}")
        return GridField(self.grid, np.real(self.values).copy())

    def copy(self) -> "GridField":
        return GridField(self.grid, self.values.copy())

    def _coerce(self, other):
        if isinstance(other, GridField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return GridField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GridField(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return GridField(self.grid, -self.values)

    def __repr__(self):
        return f"GridField(dim={self.grid.dim}, n={self.grid.n}, components={self.components})"

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn) -> "GridField":
        """Sample ``fn(x)`` where ``x`` has shape ``(d,) + grid.shape``."""
        return cls(grid, np.asarray(fn(grid.coords)))

    @classmethod
    def zeros(cls, grid: PeriodicGrid, components: int = 1) -> "GridField":
        shape = grid.shape if components == 1 else (components,) + grid.shape
        return cls(grid, np.zeros(shape))

    @classmethod
    def cos_mode(cls, grid: PeriodicGrid, k, amplitude: float = 1.0) -> "GridField":
        """``amplitude * cos(<xi_0, x>)`` with lattice frequency ``xi_0 = 2 pi k / l``."""
        xi0 = 2.0 * np.pi / grid.box_length * np.asarray(k, dtype=float).reshape(grid.dim)
        phase = np.tensordot(xi0, grid.coords, axes=1)
        return cls(grid, amplitude * np.cos(phase))


def lattice_frequency(grid: PeriodicGrid, k) -> np.ndarray:
    return 2.0 * np.pi / grid.box_length * np.asarray(k, dtype=float).reshape(grid.dim)


@dataclass(frozen=True)
class NormParams:
    beta: float = 0.0
    p: float = 2.0
    gamma: float = 1.0
    q: float = 2.0
    theta: float = 1.0

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if not self.p > 1 or not self.q > 1:
            raise ValueError("p and q must exceed 1")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")


# ---------------------------------------------------------------------------
# Fourier helpers


def _axes(grid):
    return tuple(range(-grid.dim, 0))


def fft(f: GridField) -> np.ndarray:
    return np.fft.fftn(f.values, axes=_axes(f.grid))


def apply_multiplier(f: GridField, mult, keep_real: bool | None = None) -> GridField:
    """Multiply the Fourier coefficients of ``f`` by ``mult``.

    Real input stays real when the multiplier is real and even, which is the
    case for every operator in this module; pass ``keep_real=False`` to keep
    the complex result.
    """
    ax = _axes(f.grid)
    out = np.fft.ifftn(np.fft.fftn(f.values, axes=ax) * mult, axes=ax)
    if keep_real is None:
        keep_real = f.is_real and np.isrealobj(mult)
    return GridField(f.grid, out.real if keep_real else out)


# ---------------------------------------------------------------------------
# plain norms and monitors


def pointwise_abs(f: GridField) -> np.ndarray:
    if f.is_vector:
        return np.sqrt(np.sum(np.abs(f.values) ** 2, axis=0))
    return np.abs(f.values)


def lp_norm(f: GridField, p: float = 2.0) -> float:
    """Grid ``L^p`` norm; vector fields use the pointwise Euclidean norm."""
    a = pointwise_abs(f)
    if np.isinf(p):
        return float(a.max())
    return float((np.sum(a ** p) * f.grid.cell_volume) ** (1.0 / p))


def sup_norm(f: GridField) -> float:
    return float(pointwise_abs(f).max())


def boundary_ratio(f: GridField) -> float:
    """Largest magnitude on the box faces divided by the peak magnitude."""
    a = pointwise_abs(f)
    peak = a.max()
    if peak == 0:
        return 0.0
    face = max(float(np.take(a, 0, axis=i).max()) for i in range(f.grid.dim))
    return face / float(peak)


def spectral_tail(f: GridField) -> float:
    """Relative ``L^2`` mass in the outer quarter band of the frequency box."""
    coef = np.abs(np.fft.fftn(f.stacked(), axes=_axes(f.grid))) ** 2
    total = coef.sum()
    if total == 0:
        return 0.0
    band = np.any(np.abs(f.grid.index_freq) >= 3 * f.grid.n // 8, axis=-1)
    return float(math.sqrt(coef[..., band].sum() / total))


def check_spectral_tail(f: GridField, tol: float = 1e-10) -> None:
    tail = spectral_tail(f)
    if tail > tol:
        raise SpectralTailTooLarge(
            f"relative spectral energy {tail:.2e} in the outer band exceeds {tol:.0e}; "
            "refine the grid or smooth the field")


# ---------------------------------------------------------------------------
# semigroup and generator


def semigroup_apply(f: GridField, law, t: float) -> GridField:
    """``T_t f`` through the multiplier ``exp(-t psi)``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return f.copy()
    return apply_multiplier(f, np.exp(-t * f.grid.psi(law)))


def generator_apply(f: GridField, law, tail_tol: float = 1e-10) -> GridField:
    """Generator of the process as the multiplier ``-psi``."""
    check_spectral_tail(f, tail_tol)
    return apply_multiplier(f, -f.grid.psi(law))


def _gauss_panels(a: float, b: float, n_panels: int, order: int, log: bool = False):
    x, w = np.polynomial.legendre.leggauss(order)
    if log:
        a, b = math.log(a), math.log(b)
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    nodes = (mid + half * x).ravel()
    weights = (half * w).ravel()
    if log:
        nodes = np.exp(nodes)
        weights = weights * nodes  # dr = r ds
    return nodes, weights


def radial_multiplier(alpha: float, a, r_min: float, r_max: float, corrections: bool = True,
                      order: int = 16, chunk: int = 1 << 20) -> np.ndarray:
    """Quadrature of ``int_{r_min}^{r_max} (cos(r a) - 1) r**(-1-alpha) dr``.

    Composite Gauss-Legendre in ``log r`` on ``[r_min, 1]`` and in ``r`` on
    ``[1, r_max]`` with panels that resolve the fastest oscillation. With
    ``corrections`` the missing pieces ``|r| < r_min`` and ``r > r_max`` are
    replaced by the leading term ``-a**2 r_min**(2-alpha) / (2 (2-alpha))`` and
    by the exact tail ``-a**alpha (K_alpha - I(a r_max))``.
    """
    if not 0 < r_min < 1 < r_max:
        raise ValueError("need 0 < r_min < 1 < r_max")
    a = np.abs(np.asarray(a, dtype=float))
    uniq, inv = np.unique(a, return_inverse=True)
    a_max = max(float(uniq.max(initial=0.0)), 1.0)
    n_near = max(8, int(math.ceil(math.log(1.0 / r_min) * a_max / math.pi)) + 1)
    n_far = max(8, int(math.ceil((r_max - 1.0) * a_max / math.pi)) + 1)
    r1, w1 = _gauss_panels(r_min, 1.0, n_near, order, log=True)
    r2, w2 = _gauss_panels(1.0, r_max, n_far, order)
    r = np.concatenate([r1, r2])
    w = np.concatenate([w1, w2]) * r ** (-1.0 - alpha)
    out = np.empty_like(uniq)
    step = max(1, chunk // max(1, r.size))
    for s in range(0, uniq.size, step):
        blk = uniq[s:s + step, None]
        # cos(ra) - 1 = -2 sin^2(ra/2), free of cancellation for small ra
        out[s:s + step] = -2.0 * (np.sin(0.5 * blk * r) ** 2) @ w
    if corrections:
        from .stable import stable_constant_closed_form, truncated_cosine_integral

        out += -uniq ** 2 * r_min ** (2.0 - alpha) / (2.0 * (2.0 - alpha))
        # exact tail a^alpha * int_{a r_max}^inf (cos u - 1) u^(-1-alpha) du, zero at a = 0
        k_alpha = stable_constant_closed_form(alpha)
        out += -uniq ** alpha * (k_alpha - truncated_cosine_integral(alpha, uniq * r_max))
    return out[inv].reshape(a.shape)


def generator_apply_direct(f: GridField, law, r_min: float = 1e-3, r_max: float = 1e3,
                           corrections: bool = True) -> GridField:
    """Generator by radial quadrature of ``int (f(x + z) - f(x)) nu(dz)``.

    Shifts along each ray are evaluated by trigonometric interpolation, i.e.
    as the phase factors ``exp(i r <xi, theta>)`` on the Fourier side. Summing
    each atom with its antipode cancels the odd part, which realises the
    principal value on ``|z| < 1``.
    """
    grid = f.grid
    mult = np.zeros(grid.shape)
    xi = grid.xi
    for theta, w in law.atoms:
        proj = xi @ np.asarray(theta)
        mult += w * radial_multiplier(law.alpha, proj, r_min, r_max, corrections)
    return apply_multiplier(f, mult)


# ---------------------------------------------------------------------------
# Bessel potentials and Slobodeckij norms


def bessel_potential(f: GridField, beta: float) -> GridField:
    """Apply ``(I - Laplacian)**(beta/2)``, multiplier ``(1 + |xi|^2)**(beta/2)``."""
    if beta == 0:
        return f
    return apply_multiplier(f, (1.0 + f.grid.xi_sq) ** (0.5 * beta))


def bessel_norm(f: GridField, beta: float, p: float = 2.0) -> float:
    if not p > 1:
        raise ValueError("p must exceed 1")
    return lp_norm(bessel_potential(f, beta), p)


def _tent_second_difference(k, gamma):
    # int_{-1}^{1} (1-|s|) |k+s|^(-gamma) ds for integer k >= 1, gamma != 1, 2
    def G(x):
        return x ** (2.0 - gamma) / ((1.0 - gamma) * (2.0 - gamma))

    k = np.asarray(k, dtype=float)
    return G(k + 1.0) - 2.0 * G(k) + G(k - 1.0)


def _tent_weight_nd(k, gamma, order=10):
    """``int_{[-1,1]^d} prod(1-|s_i|) |k+s|^(-gamma) ds`` for one offset ``k``."""
    k = np.asarray(k, dtype=float)
    d = k.size
    dist = np.abs(k).max()
    if dist >= 3:
        x, w = np.polynomial.legendre.leggauss(order)
        # two panels per axis so the tent kink is a panel edge
        nodes = np.concatenate([0.5 * (x - 1.0), 0.5 * (x + 1.0)])
        wts = np.concatenate([0.5 * w, 0.5 * w]) * (1.0 - np.abs(np.concatenate([0.5 * (x - 1.0), 0.5 * (x + 1.0)])))
        grids = np.meshgrid(*([nodes] * d), indexing="ij")
        ww = np.ones_like(grids[0])
        for g in np.meshgrid(*([wts] * d), indexing="ij"):
            ww = ww * g
        r = np.sqrt(sum((k[i] + grids[i]) ** 2 for i in range(d)))
        return float(np.sum(ww * r ** -gamma))
    if d == 2:
        total = 0.0
        for lo0, hi0 in ((-1.0, 0.0), (0.0, 1.0)):
            for lo1, hi1 in ((-1.0, 0.0), (0.0, 1.0)):
                val, _ = integrate.dblquad(
                    lambda s1, s0: (1 - abs(s0)) * (1 - abs(s1))
                    * ((k[0] + s0) ** 2 + (k[1] + s1) ** 2) ** (-0.5 * gamma),
                    lo0, hi0, lo1, hi1, epsabs=1e-12, epsrel=1e-10)
                total += val
        return total
    opts = {"epsabs": 1e-10, "epsrel": 1e-8}
    total = 0.0
    for box in np.ndindex(2, 2, 2):
        ranges = [(-1.0, 0.0) if b == 0 else (0.0, 1.0) for b in box]
        val, _ = integrate.nquad(
            lambda s0, s1, s2: (1 - abs(s0)) * (1 - abs(s1)) * (1 - abs(s2))
            * ((k[0] + s0) ** 2 + (k[1] + s1) ** 2 + (k[2] + s2) ** 2) ** (-0.5 * gamma),
            ranges, opts=opts)
        total += val
    return total


def slobodeckij_weights(grid: PeriodicGrid, kernel_power: float, images: int | None = None) -> np.ndarray:
    """Cell-pair weights for the kernel ``|x - y|**(-kernel_power)`` on the torus.

    Entry ``[k]`` (displacement class ``k`` in FFT order) is the exact double
    integral of the periodised kernel over two grid cells ``k`` apart, so the
    discrete double sum is exact for the piecewise-constant extension of the
    samples. The zero class carries weight 0. When the nearest-neighbour
    integral diverges (``kernel_power >= d + 1``) those classes fall back to
    the point value ``h**(2d) |k h|**(-kernel_power)``.
    """
    d, n, h = grid.dim, grid.n, grid.h
    g = float(kernel_power)
    m_img = images if images is not None else (64 if d == 1 else 6)
    kidx = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    scale = h ** (2 * d - g)
    if d == 1:
        total = np.zeros(n)
        for m in range(-m_img, m_img + 1):
            k = np.abs(kidx + m * n).astype(float)
            if m == 0:
                w = np.zeros(n)
                nz = k > 0
                if g < 2.0:
                    w[nz] = _tent_second_difference(k[nz], g)
                else:
                    w[nz] = k[nz] ** -g
                    far = k >= 2
                    w[far] = _tent_second_difference(k[far], g)
            else:
                w = _tent_second_difference(k, g)
            total += w
        # remaining images by the integral of the far-field kernel
        tail = 2.0 * ((m_img + 0.5) * n) ** (1.0 - g) / ((g - 1.0) * n)
        return scale * (total + tail)
    # d >= 2: exact tent integrals for the central block, point values with
    # image sums beyond
    cache = {}
    out = np.zeros(grid.shape)
    for idx in np.ndindex(*grid.shape):
        k = np.array([kidx[i] for i in idx])
        if not k.any():
            continue
        acc = 0.0
        for img in np.ndindex(*([2 * m_img + 1] * d)):
            kk = k + (np.array(img) - m_img) * n
            key = tuple(sorted(np.abs(kk)))
            if key not in cache:
                if max(key) <= 1 and g >= d + 1:
                    cache[key] = float(np.sqrt(np.sum(np.square(key)))) ** -g
                elif max(key) < 6:
                    cache[key] = _tent_weight_nd(np.array(key, dtype=float), g)
                else:
                    cache[key] = float(np.sqrt(np.sum(np.square(key), dtype=float))) ** -g
            acc += cache[key]
        out[idx] = acc
    # images beyond the truncated lattice, continuum estimate
    r_cut = (m_img + 0.5) * n
    if d == 2:
        # exterior of the square [-r_cut, r_cut]^2 in polar coordinates
        tail, _ = integrate.quad(
            lambda phi: (r_cut / max(abs(math.cos(phi)), abs(math.sin(phi)))) ** (2.0 - g),
            0.0, 2.0 * math.pi, points=[k * math.pi / 4 for k in range(1, 8)])
        tail /= g - 2.0
    else:
        tail = 4.0 * math.pi * r_cut ** (d - g) / (g - d)
    tail /= n ** d
    out += np.where(np.any(grid.index_freq != 0, axis=-1), tail, 0.0)
    return scale * out


def difference_moments(f: GridField, p: float) -> np.ndarray:
    """``S[k] = sum_x |f(x + k h) - f(x)|**p`` for every displacement class."""
    vals = f.values
    if f.is_vector:
        raise ValueError("difference moments need a scalar field")
    ax = _axes(f.grid)
    if p == 2.0:
        F = np.fft.fftn(vals, axes=ax)
        auto = np.fft.ifftn(np.abs(F) ** 2, axes=ax).real
        return np.maximum(2.0 * np.sum(np.abs(vals) ** 2) - 2.0 * auto, 0.0)
    out = np.zeros(f.grid.shape)
    kidx = np.fft.fftfreq(f.grid.n, d=1.0 / f.grid.n).astype(int)
    for idx in np.ndindex(*f.grid.shape):
        shift = tuple(-kidx[i] for i in idx)
        out[idx] = np.sum(np.abs(np.roll(vals, shift, axis=ax) - vals) ** p)
    return out


def slobodeckij_seminorm(f: GridField, beta: float, p: float = 2.0) -> float:
    """Double-integral seminorm ``(iint |f(x)-f(y)|^p |x-y|^(-d-beta p))^(1/p)``.

    Pairs are grouped by displacement class, so the cost is one weight table
    plus one difference moment per class.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if not p > 1:
        raise ValueError("p must exceed 1")
    grid = f.grid
    key = (grid, beta * p)
    w = _WEIGHT_CACHE.get(key)
    if w is None:
        w = slobodeckij_weights(grid, grid.dim + beta * p)
        _WEIGHT_CACHE[key] = w
    # each class sum runs over cells; weights already carry the cell volumes
    s = difference_moments(f, p)
    return float(np.sum(w * s) ** (1.0 / p))


_WEIGHT_CACHE: dict = {}


def slobodeckij_norm(f: GridField, beta: float, p: float = 2.0) -> float:
    """``||f||_p`` plus the Slobodeckij seminorm; vector fields add componentwise seminorms."""
    if f.is_vector:
        return lp_norm(f, p) + sum(slobodeckij_seminorm(f.component(i), beta, p)
                                   for i in range(f.components))
    return lp_norm(f, p) + slobodeckij_seminorm(f, beta, p)


# ---------------------------------------------------------------------------
# maximal function, shifts, mollifier, gradient


def dyadic_radii(grid: PeriodicGrid) -> list[float]:
    """``{h, 2h, 4h, ...}`` up to ``l/4``."""
    out, r = [], grid.h
    while r <= grid.box_length / 4 + 1e-12:
        out.append(r)
        r *= 2.0
    return out


def ball_average(f_abs: np.ndarray, grid: PeriodicGrid, radius: float) -> np.ndarray:
    # distance to the corner point, i.e. index 0 in FFT order
    dist = np.sqrt(np.sum(grid.wrap(grid.coords + 0.5 * grid.box_length) ** 2, axis=0))
    ball = (dist <= radius + 1e-12 * grid.h).astype(float)
    ball /= ball.sum()
    ax = tuple(range(grid.dim))
    return np.fft.ifftn(np.fft.fftn(f_abs, axes=ax) * np.fft.fftn(ball, axes=ax), axes=ax).real


def maximal_function(f: GridField, radii=None) -> GridField:
    """Discrete Hardy-Littlewood maximal function over ``radii``.

    The single-point ball (radius 0) is always part of the ladder, so the
    result dominates ``|f|`` pointwise.
    """
    grid = f.grid
    radii = dyadic_radii(grid) if radii is None else list(radii)
    if not radii:
        raise ValueError("radii must be nonempty")
    if max(radii) >= grid.box_length / 2:
        raise ValueError("radii must stay below l/2")
    a = pointwise_abs(f)
    best = a.copy()
    for r in radii:
        best = np.maximum(best, ball_average(a, grid, r))
    return GridField(grid, best)


def shift_diff(f: GridField, z) -> GridField:
    """``f(x + z) - f(x)``; lattice shifts are exact rolls, others spectral."""
    grid = f.grid
    z = np.asarray(z, dtype=float).reshape(grid.dim)
    steps = z / grid.h
    ax = _axes(grid)
    if np.allclose(steps, np.round(steps), rtol=0, atol=1e-12):
        shift = tuple(-int(round(s)) for s in steps)
        return GridField(grid, np.roll(f.values, shift, axis=ax) - f.values)
    phase = np.exp(1j * (grid.xi @ z))
    # split the Nyquist mode evenly so shifts of real fields stay real
    phase = np.where(grid.nyquist_shell(), np.cos(grid.xi @ z), phase)
    return apply_multiplier(f, phase - 1.0, keep_real=f.is_real)


def bump(r2: np.ndarray) -> np.ndarray:
    """``exp(-1/(1 - r^2))`` on the unit ball, zero outside."""
    out = np.zeros_like(r2, dtype=float)
    inside = r2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    return out


def mollifier_kernel(grid: PeriodicGrid, eps: float) -> np.ndarray:
    dist2 = np.sum(grid.wrap(grid.coords + 0.5 * grid.box_length) ** 2, axis=0)
    ker = bump(dist2 / eps ** 2)
    if ker.sum() == 0.0:
        ker.flat[0] = 1.0
    return ker / ker.sum()


def mollify(f: GridField, eps: float) -> GridField:
    """Convolution with the unit-mass bump of radius ``eps``."""
    grid = f.grid
    if not 0 < eps < grid.box_length / 4:
        raise ValueError("eps must lie in (0, l/4)")
    ker = mollifier_kernel(grid, eps)
    return apply_multiplier(f, np.fft.fftn(ker), keep_real=f.is_real).real()


def gradient(f: GridField) -> GridField:
    """Spectral gradient; the Nyquist mode is dropped."""
    grid = f.grid
    if f.is_vector:
        raise ValueError("gradient of a vector field is not supported")
    F = np.fft.fftn(f.values)
    comps = []
    for i in range(grid.dim):
        mult = 1j * grid.xi[..., i]
        mult = np.where(grid.index_freq[..., i] == -(grid.n // 2), 0.0, mult)
        g = np.fft.ifftn(F * mult)
        comps.append(g.real if f.is_real else g)
    return GridField(grid, np.stack(comps))


def gradient_sup(f: GridField) -> float:
    """``sup_x |grad f(x)|`` (operator norm of the Jacobian for vector fields)."""
    if not f.is_vector:
        return sup_norm(gradient(f))
    jac = np.stack([gradient(f.component(i)).values for i in range(f.components)])
    # jac[i, j] = d_j f_i on every grid point
    mats = np.moveaxis(jac, (0, 1), (-2, -1))
    return float(np.linalg.norm(mats, ord=2, axis=(-2, -1)).max())


# ---------------------------------------------------------------------------
# off-grid evaluation


def interpolate_spectral(f: GridField, points, chunk: int = 4096) -> np.ndarray:
    """Trigonometric interpolation at arbitrary points, shape ``(m, d)``.

    Returns shape ``(m,)`` for scalars and ``(m, components)`` for vectors.
    The Nyquist term is split symmetrically so real fields interpolate to
    real values.
    """
    grid = f.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    coef = np.fft.fftn(f.stacked(), axes=_axes(grid)) / grid.size
    kk = grid.wavenumbers
    nyq = grid.n // 2
    out = np.empty((coef.shape[0], pts.shape[0]), dtype=complex)
    for s in range(0, pts.shape[0], chunk):
        rel = pts[s:s + chunk] + 0.5 * grid.box_length
        mats = []
        for ax in range(grid.dim):
            e = np.exp(1j * np.outer(rel[:, ax], kk))
            e[:, nyq] = np.cos(rel[:, ax] * kk[nyq])
            mats.append(e)
        if grid.dim == 1:
            vals = coef @ mats[0].T
        elif grid.dim == 2:
            vals = np.einsum("cmb,mb->cm", np.einsum("cab,ma->cmb", coef, mats[0]), mats[1])
        else:
            tmp = np.einsum("cabz,ma->cmbz", coef, mats[0])
            tmp = np.einsum("cmbz,mb->cmz", tmp, mats[1])
            vals = np.einsum("cmz,mz->cm", tmp, mats[2])
        out[:, s:s + chunk] = vals
    out = out.real if f.is_real else out
    return out.T if f.is_vector else out[0]


def interpolate_multilinear(f: GridField, points) -> np.ndarray:
    """Periodic multilinear interpolation at points of shape ``(m, d)``."""
    grid = f.grid
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    s = (pts + 0.5 * grid.box_length) / grid.h
    base = np.floor(s).astype(np.int64)
    frac = s - base
    data = f.stacked()
    out = np.zeros((data.shape[0], pts.shape[0]), dtype=data.dtype)
    for corner in np.ndindex(*([2] * grid.dim)):
        c = np.asarray(corner)
        idx = tuple(np.mod(base[:, i] + c[i], grid.n) for i in range(grid.dim))
        wt = np.prod(np.where(c, frac, 1.0 - frac), axis=1)
        out += data[(slice(None),) + idx] * wt
    return out.T if f.is_vector else out[0]


def interpolate(f: GridField, points, method: str = "spectral") -> np.ndarray:
    if method == "spectral":
        return interpolate_spectral(f, points)
    if method == "multilinear":
        return interpolate_multilinear(f, points)
    raise ValueError(f"unknown interpolation method {method!r}")
