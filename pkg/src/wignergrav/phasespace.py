"""Grids, wavefunctions, sampled Wigner fields and the Wigner transform.

Conventions: axis 0 of every field is position z, axis 1 is momentum p.
Grids exclude their upper endpoint, so ``z_j = z_min + j*dz`` with
``dz = (z_max - z_min)/n_z``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Union

import numpy as np
from scipy import signal

from .errors import GridMismatch, GridTooSmall, NonNormalized

__all__ = [
    "PositionGrid",
    "GridSpec",
    "WaveFunction",
    "GaussianState",
    "GaussianWigner",
    "RealField",
    "ComplexField",
    "wigner_transform",
    "wigner_transform_raw",
    "marginal_position",
    "marginal_momentum",
    "phase_space_overlap",
    "characteristic_transform",
    "amplitude_phase",
    "sample_function",
    "write_field_csv",
    "read_field_csv",
]

FIELD_HEADER = "# z_min,z_max,n_z,p_min,p_max,n_p,hbar"


def _frozen(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def _is_pow2(n: int) -> bool:
    return n >= 8 and (n & (n - 1)) == 0


def _close(a: float, b: float, rel: float = 1e-12) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b), 1.0)


@dataclass(frozen=True)
class PositionGrid:
    """Uniform 1-D position grid, upper endpoint excluded."""

    z_min: float
    z_max: float
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ValueError(f"need at least 8 grid points, got {self.n}")
        if not self.z_max > self.z_min:
            raise ValueError("z_max must exceed z_min")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "z_min", float(self.z_min))
        object.__setattr__(self, "z_max", float(self.z_max))

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / self.n

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.dz * np.arange(self.n)

    def momenta(self, hbar: float = 1.0) -> np.ndarray:
        """FFT-ordered momentum samples conjugate to this grid."""
        return 2 * np.pi * hbar * np.fft.fftfreq(self.n, self.dz)

    def matches(self, other: "PositionGrid") -> bool:
        return (self.n == other.n and _close(self.z_min, other.z_min)
                and _close(self.z_max, other.z_max))


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (z, p) phase-space grid."""

    z_min: float
    z_max: float
    n_z: int
    p_min: float
    p_max: float
    n_p: int

    def __post_init__(self):
        for name in ("n_z", "n_p"):
            n = getattr(self, name)
            if int(n) != n or not _is_pow2(int(n)):
                raise ValueError(f"{name} must be a power of two >= 8, got {n}")
            object.__setattr__(self, name, int(n))
        for name in ("z_min", "z_max", "p_min", "p_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.z_max > self.z_min:
            raise ValueError("z_max must exceed z_min")
        if not self.p_max > self.p_min:
            raise ValueError("p_max must exceed p_min")

    @classmethod
    def centered(cls, z_c, half_z, n_z, p_c, half_p, n_p) -> "GridSpec":
        return cls(z_c - half_z, z_c + half_z, n_z, p_c - half_p, p_c + half_p, n_p)

    @property
    def dz(self) -> float:
        return (self.z_max - self.z_min) / self.n_z

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / self.n_p

    @property
    def z(self) -> np.ndarray:
        return self.z_min + self.dz * np.arange(self.n_z)

    @property
    def p(self) -> np.ndarray:
        return self.p_min + self.dp * np.arange(self.n_p)

    @property
    def cell(self) -> float:
        return self.dz * self.dp

    def mesh(self):
        return np.meshgrid(self.z, self.p, indexing="ij")

    def position_grid(self) -> PositionGrid:
        return PositionGrid(self.z_min, self.z_max, self.n_z)

    def matches(self, other: "GridSpec") -> bool:
        return (self.n_z == other.n_z and self.n_p == other.n_p
                and all(_close(getattr(self, a), getattr(other, a))
                        for a in ("z_min", "z_max", "p_min", "p_max")))

    def with_shape(self, n_z: int, n_p: int) -> "GridSpec":
        return GridSpec(self.z_min, self.z_max, n_z, self.p_min, self.p_max, n_p)


@dataclass(frozen=True)
class WaveFunction:
    """Complex samples of a state on a position grid."""

    grid: PositionGrid
    values: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        vals = _frozen(self.values, np.complex128)
        if vals.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("wavefunction has non-finite samples")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "values", vals)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dz)

    def normalized(self) -> "WaveFunction":
        return WaveFunction(self.grid, self.values / math.sqrt(self.norm()), self.hbar)

    def edge_amplitude(self, width: int = 2) -> float:
        v = np.abs(self.values)
        return float(max(v[:width].max(), v[-width:].max()))

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def momentum_amplitude(self, p) -> np.ndarray:
        """psi(p) = (2 pi hbar)^(-1/2) sum_j psi_j exp(-i p z_j / hbar) dz."""
        p = np.atleast_1d(np.asarray(p, dtype=float))
        z = self.grid.z
        out = np.empty(p.shape, dtype=complex)
        for s in range(0, p.size, 256):
            ph = np.exp(-1j * np.outer(p.ravel()[s:s + 256], z) / self.hbar)
            out.ravel()[s:s + 256] = ph @ self.values
        return out * self.grid.dz / math.sqrt(2 * np.pi * self.hbar)

    def resampled(self, grid: PositionGrid) -> "WaveFunction":
        """Band-limited (trigonometric) interpolation onto another grid.

        Points outside this grid's span are set to zero.
        """
        if grid.matches(self.grid):
            return WaveFunction(grid, self.values, self.hbar)
        src = self.grid
        out = np.zeros(grid.n, dtype=complex)
        shift = (grid.z_min - src.z_min) / src.dz
        if _close(grid.dz, src.dz) and abs(shift - round(shift)) < 1e-9:
            # aligned sub/super grid: plain copy
            off = int(round(shift))
            j = np.arange(grid.n) + off
            ok = (j >= 0) & (j < src.n)
            out[ok] = self.values[j[ok]]
            return WaveFunction(grid, out, self.hbar)
        n = src.n
        coef = np.fft.fft(self.values) / n
        kappa = 2 * np.pi * np.fft.fftfreq(n, src.dz)
        znew = grid.z
        inside = (znew >= src.z_min) & (znew <= src.z_max - src.dz)
        idx = np.nonzero(inside)[0]
        nyq = n // 2 if n % 2 == 0 else None
        for s in range(0, idx.size, 256):
            rows = idx[s:s + 256]
            x = znew[rows] - src.z_min
            basis = np.exp(1j * np.outer(x, kappa))
            if nyq is not None:
                basis[:, nyq] = np.cos(np.pi * x / src.dz)
            out[rows] = basis @ coef
        return WaveFunction(grid, out, self.hbar)


@dataclass(frozen=True)
class GaussianState:
    """Minimum-uncertainty Gaussian packet centred at (z0, p0)."""

    z0: float
    p0: float
    sigma_z: float
    hbar: float = 1.0

    def __post_init__(self):
        if not self.sigma_z > 0:
            raise ValueError("sigma_z must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def sigma_p(self) -> float:
        return self.hbar / (2 * self.sigma_z)

    def amplitude(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        s = self.sigma_z
        return ((2 * np.pi * s * s) ** -0.25
                * np.exp(-(z - self.z0) ** 2 / (4 * s * s) + 1j * self.p0 * (z - self.z0) / self.hbar))

    def wavefunction(self, grid: PositionGrid) -> WaveFunction:
        return WaveFunction(grid, self.amplitude(grid.z), self.hbar)

    def __call__(self, z, p) -> np.ndarray:
        s = self.sigma_z
        return np.exp(-(z - self.z0) ** 2 / (2 * s * s)
                      - 2 * s * s * (p - self.p0) ** 2 / self.hbar ** 2) / (np.pi * self.hbar)

    def characteristic(self, xi, q):
        s, h = self.sigma_z, self.hbar
        return np.exp(-xi ** 2 / (8 * s * s) - q ** 2 * s * s / (2 * h * h)
                      + 1j * (xi * self.p0 + q * self.z0) / h)

    def phase_space(self) -> "GaussianWigner":
        return GaussianWigner((self.z0, self.p0),
                              ((self.sigma_z ** 2, 0.0), (0.0, self.sigma_p ** 2)), self.hbar)


@dataclass(frozen=True)
class GaussianWigner:
    """Normalized phase-space Gaussian with mean (z, p) and covariance."""

    mean: tuple
    cov: tuple
    hbar: float = 1.0

    def __post_init__(self):
        m = _frozen(self.mean, float).reshape(2)
        c = _frozen(self.cov, float).reshape(2, 2)
        if np.linalg.det(c) <= 0:
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "cov", c)

    def __call__(self, z, p) -> np.ndarray:
        x = np.asarray(z, dtype=float) - self.mean[0]
        y = np.asarray(p, dtype=float) - self.mean[1]
        det = self.cov[0, 0] * self.cov[1, 1] - self.cov[0, 1] * self.cov[1, 0]
        a, b, d = self.cov[1, 1] / det, -self.cov[0, 1] / det, self.cov[0, 0] / det
        return np.exp(-0.5 * (a * x * x + 2 * b * x * y + d * y * y)) / (2 * np.pi * math.sqrt(det))

    def shifted(self, dz: float = 0.0, dp: float = 0.0) -> "GaussianWigner":
        return GaussianWigner(self.mean + np.array([dz, dp]), self.cov, self.hbar)

    def pushed(self, matrix, offset) -> "GaussianWigner":
        m = np.asarray(matrix, dtype=float)
        return GaussianWigner(m @ self.mean + np.asarray(offset, dtype=float),
                              m @ self.cov @ m.T, self.hbar)

    def characteristic(self, xi, q):
        h = self.hbar
        v = np.array([q, xi], dtype=float)
        return np.exp(1j * (xi * self.mean[1] + q * self.mean[0]) / h - 0.5 * v @ self.cov @ v / h ** 2)


class _Field:
    _dtype = float

    def __post_init__(self):
        vals = _frozen(self.values, self._dtype)
        if vals.shape != (self.grid.n_z, self.grid.n_p):
            raise ValueError(f"field shape {vals.shape} does not match grid "
                             f"({self.grid.n_z}, {self.grid.n_p})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field has non-finite values")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "values", vals)

    def total(self):
        return self.values.sum() * self.grid.cell


@dataclass(frozen=True)
class RealField(_Field):
    """Real samples W(z_j, p_m) on a GridSpec."""

    grid: GridSpec
    values: np.ndarray
    hbar: float = 1.0
    _dtype = float

    def total(self) -> float:
        return float(self.values.sum() * self.grid.cell)

    def moments(self):
        """Return (mean_z, mean_p, var_z, var_p) of the field."""
        pz = marginal_position(self)
        pp = marginal_momentum(self)
        z, p = self.grid.z, self.grid.p
        n = self.total()
        mz = float(np.sum(z * pz) * self.grid.dz / n)
        mp = float(np.sum(p * pp) * self.grid.dp / n)
        vz = float(np.sum((z - mz) ** 2 * pz) * self.grid.dz / n)
        vp = float(np.sum((p - mp) ** 2 * pp) * self.grid.dp / n)
        return mz, mp, vz, vp


@dataclass(frozen=True)
class ComplexField(_Field):
    """Complex samples on a GridSpec (interference-path Wigner functions)."""

    grid: GridSpec
    values: np.ndarray
    hbar: float = 1.0
    _dtype = complex

    def total(self) -> complex:
        return complex(self.values.sum() * self.grid.cell)

    def real_part(self) -> RealField:
        return RealField(self.grid, self.values.real, self.hbar)

    def max_imag(self) -> float:
        return float(np.abs(self.values.imag).max())


Field = Union[RealField, ComplexField]


def sample_function(fn: Callable, grid: GridSpec, hbar: float = 1.0) -> RealField:
    """Evaluate an analytic phase-space function fn(z, p) on a grid."""
    zz, pp = grid.mesh()
    return RealField(grid, fn(zz, pp), hbar)


def _check_state(psi: WaveFunction, norm_tol: float, edge_tol: float):
    n = psi.norm()
    if abs(n - 1.0) > norm_tol:
        raise NonNormalized(f"wavefunction norm is {n:.12g}, expected 1")
    edge = psi.edge_amplitude()
    if edge > edge_tol:
        raise GridTooSmall(f"edge amplitude {edge:.3g} exceeds {edge_tol:.1g}")


def wigner_transform_raw(psi: WaveFunction, grid: GridSpec, *, norm_tol: float = 1e-6,
                         edge_tol: float = 1e-6, chunk: int = 64) -> np.ndarray:
    """Complex-valued Wigner sum before discarding the imaginary part.

    psi is upsampled by two with FFT interpolation so that z +- zeta/2 lands on
    samples for every zeta = s*dz, then the zeta sum is evaluated directly on the
    requested momentum grid with a chirp-z transform.
    """
    _check_state(psi, norm_tol, edge_tol)
    zgrid = grid.position_grid()
    if not psi.grid.matches(zgrid):
        psi = psi.resampled(zgrid)
        if psi.edge_amplitude() > edge_tol:
            raise GridTooSmall("state extends beyond the phase-space grid")
    hbar = psi.hbar
    n, dz = grid.n_z, grid.dz
    fine = signal.resample(psi.values, 2 * n)
    span = 2 * n - 1
    padded = np.concatenate([np.zeros(span, complex), fine, np.zeros(span, complex)])
    s = np.arange(-span, span + 1)
    w = np.exp(-1j * grid.dp * dz / hbar)
    a = np.exp(1j * grid.p_min * dz / hbar)
    # undo the index shift n = s + span
    post = np.exp(1j * grid.p * span * dz / hbar) * dz / (2 * np.pi * hbar)
    out = np.empty((n, grid.n_p), dtype=complex)
    for start in range(0, n, chunk):
        j = np.arange(start, min(n, start + chunk))[:, None]
        prod = np.conj(padded[2 * j - s + span]) * padded[2 * j + s + span]
        out[start:start + j.shape[0]] = signal.czt(prod, m=grid.n_p, w=w, a=a, axis=-1) * post
    return out


def wigner_transform(psi: WaveFunction, grid: GridSpec, *, norm_tol: float = 1e-6,
                     edge_tol: float = 1e-6) -> RealField:
    """W(z,p) = (1/2 pi hbar) int dzeta exp(-i p zeta/hbar) psi*(z - zeta/2) psi(z + zeta/2)."""
    raw = wigner_transform_raw(psi, grid, norm_tol=norm_tol, edge_tol=edge_tol)
    return RealField(grid, raw.real, psi.hbar)


def marginal_position(W: Field) -> np.ndarray:
    return W.values.sum(axis=1) * W.grid.dp


def marginal_momentum(W: Field) -> np.ndarray:
    return W.values.sum(axis=0) * W.grid.dz


def _require_same_grid(a: Field, b: Field):
    if not a.grid.matches(b.grid):
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")
    if not _close(a.hbar, b.hbar):
        raise GridMismatch(f"hbar differs: {a.hbar} vs {b.hbar}")


def phase_space_overlap(W1: RealField, W2: RealField) -> float:
    """2 pi hbar sum W1 W2 dz dp, equal to |<psi1|psi2>|^2 for pure states."""
    _require_same_grid(W1, W2)
    return float(2 * np.pi * W1.hbar * np.sum(W1.values * W2.values) * W1.grid.cell)


def characteristic_transform(W: Field, xi: float, q: float) -> complex:
    """sum exp(i (xi p + q z)/hbar) W dz dp, the expectation of the displacement operator."""
    g, h = W.grid, W.hbar
    ez = np.exp(1j * q * g.z / h)
    ep = np.exp(1j * xi * g.p / h)
    return complex(ez @ W.values @ ep * g.cell)


def amplitude_phase(value: complex):
    """Split a characteristic value into (|<D>|, beta)."""
    return abs(value), math.atan2(value.imag, value.real)


def _fmt(x: float) -> str:
    return "%.17g" % x


def write_field_csv(W: Field, path, extra_header: Iterable[str] = ()) -> None:
    """Write a field as CSV rows z,p,re[,im] preceded by a grid header."""
    g = W.grid
    lines = [FIELD_HEADER,
             "# " + ",".join([_fmt(g.z_min), _fmt(g.z_max), str(g.n_z),
                              _fmt(g.p_min), _fmt(g.p_max), str(g.n_p), _fmt(W.hbar)])]
    lines += ["# " + h for h in extra_header]
    zz, pp = g.mesh()
    cols = [zz.ravel(), pp.ravel(), W.values.real.ravel()]
    if isinstance(W, ComplexField):
        cols.append(W.values.imag.ravel())
    buf = io.StringIO()
    np.savetxt(buf, np.column_stack(cols), fmt="%.17g", delimiter=",")
    text = "\n".join(lines) + "\n" + buf.getvalue()
    if hasattr(path, "write"):
        path.write(text)
    else:
        Path(path).write_text(text)


def read_field_csv(path) -> Field:
    text = path.read() if hasattr(path, "read") else Path(path).read_text()
    lines = text.splitlines()
    try:
        pos = lines.index(FIELD_HEADER)
        vals = lines[pos + 1].lstrip("#").split(",")
        z_min, z_max, n_z, p_min, p_max, n_p, hbar = vals
        grid = GridSpec(float(z_min), float(z_max), int(n_z), float(p_min), float(p_max), int(n_p))
        hbar = float(hbar)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"not a field CSV: {exc}") from exc
    data = np.loadtxt(io.StringIO(text), delimiter=",", comments="#", ndmin=2)
    if data.shape[0] != grid.n_z * grid.n_p:
        raise ValueError(f"expected {grid.n_z * grid.n_p} rows, found {data.shape[0]}")
    shape = (grid.n_z, grid.n_p)
    if data.shape[1] == 4:
        return ComplexField(grid, (data[:, 2] + 1j * data[:, 3]).reshape(shape), hbar)
    return RealField(grid, data[:, 2].reshape(shape), hbar)
