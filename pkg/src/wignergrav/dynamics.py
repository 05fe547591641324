"""Classical flows in linear-plus-quadratic gravity and Liouville transport.

Phase space is (z, p) throughout; velocity results follow from p = m_i v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import ndimage

from .errors import ExtrapolationLoss, NotNormalizable
from .phasespace import (ComplexField, GaussianState, GaussianWigner, GridSpec,
                         RealField)

__all__ = [
    "PhysParams",
    "AffineFlow",
    "PolynomialPotential",
    "oscillator_functions",
    "classical_flow",
    "kick_flow",
    "transport",
    "thermal_distribution",
    "central_difference",
    "classical_liouville_residual",
    "quantum_correction_residual",
]

TAYLOR_SWITCH = 1e-8


@dataclass(frozen=True)
class PhysParams:
    """Physical constants of a run.

    g is the linear acceleration and Gamma the gradient, so that
    V(z) = m_g g z + m_g Gamma z^2 / 2.
    """

    m_i: float = 1.0
    m_g: float = 1.0
    g: float = 0.0
    Gamma: float = 0.0
    hbar: float = 1.0
    k: float = 0.0

    def __post_init__(self):
        if not self.m_i > 0 or not self.m_g > 0:
            raise ValueError("masses must be positive")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        for name in ("g", "Gamma", "k"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def mass_ratio(self) -> float:
        return self.m_g / self.m_i

    @property
    def g_eff(self) -> float:
        return self.mass_ratio * self.g

    @property
    def gamma_eff(self) -> float:
        return self.mass_ratio * self.Gamma

    def potential(self) -> "PolynomialPotential":
        return PolynomialPotential((0.0, self.m_g * self.g, 0.5 * self.m_g * self.Gamma))


@dataclass(frozen=True)
class PolynomialPotential:
    """V(z) = sum_j V_j z^j up to degree 6, optionally with a hard wall.

    With ``wall`` set, V is +inf for z < wall.
    """

    coefficients: tuple = (0.0,)
    wall: Optional[float] = None

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients) or (0.0,)
        if len(c) > 7:
            raise ValueError("potential degree is limited to 6")
        if not all(math.isfinite(v) for v in c):
            raise ValueError("potential coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        nz = [j for j, v in enumerate(self.coefficients) if v != 0.0]
        return nz[-1] if nz else 0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        v = npoly.polyval(z, self.coefficients)
        if self.wall is not None:
            v = np.where(z < self.wall, np.inf, v)
        return v

    def derivative(self, order: int = 1) -> "PolynomialPotential":
        if order == 0:
            return self
        d = npoly.polyder(np.array(self.coefficients), order) if order <= self.degree else [0.0]
        return PolynomialPotential(tuple(d))


@dataclass(frozen=True)
class AffineFlow:
    """x -> matrix @ x + offset on phase-space points x = (z, p)."""

    matrix: np.ndarray
    offset: np.ndarray
    duration: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float).reshape(2, 2)
        o = np.array(self.offset, dtype=float).reshape(2)
        m.setflags(write=False)
        o.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", o)

    @classmethod
    def identity(cls) -> "AffineFlow":
        return cls(np.eye(2), np.zeros(2), 0.0)

    @property
    def det(self) -> float:
        m = self.matrix
        return float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    def apply(self, z, p):
        m, o = self.matrix, self.offset
        return m[0, 0] * z + m[0, 1] * p + o[0], m[1, 0] * z + m[1, 1] * p + o[1]

    def pullback(self, z, p):
        """Inverse map; uses det = 1, so the inverse is the adjugate."""
        (a, b), (c, d) = self.matrix
        u = z - self.offset[0]
        v = p - self.offset[1]
        return d * u - b * v, a * v - c * u

    def then(self, other: "AffineFlow") -> "AffineFlow":
        """Apply self first, then other."""
        return AffineFlow(other.matrix @ self.matrix,
                          other.matrix @ self.offset + other.offset,
                          self.duration + other.duration)

    def inverse(self) -> "AffineFlow":
        (a, b), (c, d) = self.matrix
        inv = np.array([[d, -b], [-c, a]])
        return AffineFlow(inv, -inv @ self.offset, -self.duration)


def oscillator_functions(gamma: float, t: float):
    """Return (cos(w t), sin(w t)/w, (1 - cos(w t))/gamma) with w = sqrt(gamma).

    Negative gamma continues to cosh/sinh; tiny gamma*t^2 uses the Taylor series.
    """
    x = gamma * t * t
    if abs(x) < TAYLOR_SWITCH:
        c = 1.0 - x / 2 + x * x / 24
        s = t * (1.0 - x / 6 + x * x / 120)
        h = 0.5 * t * t * (1.0 - x / 12 + x * x / 360)
        return c, s, h
    if gamma > 0:
        w = math.sqrt(gamma)
        return math.cos(w * t), math.sin(w * t) / w, 2 * math.sin(0.5 * w * t) ** 2 / gamma
    w = math.sqrt(-gamma)
    return math.cosh(w * t), math.sinh(w * t) / w, -2 * math.sinh(0.5 * w * t) ** 2 / gamma


def classical_flow(params: PhysParams, t: float) -> AffineFlow:
    """Newton flow of z'' = -g' - Gamma' z over time t, in (z, p) variables."""
    if t < 0:
        raise ValueError("t must be non-negative")
    m = params.m_i
    gp, gam = params.g_eff, params.gamma_eff
    c, s, h = oscillator_functions(gam, t)
    return AffineFlow([[c, s / m], [-m * gam * s, c]], [-gp * h, -m * gp * s], t)


def kick_flow(dp: float) -> AffineFlow:
    """Instantaneous momentum displacement p -> p + dp."""
    return AffineFlow(np.eye(2), [0.0, dp], 0.0)


Analytic = Union[GaussianState, GaussianWigner]
Source = Union[RealField, ComplexField, GaussianState, GaussianWigner]


def _bilinear(W, zq, pq):
    g = W.grid
    coords = np.array([(zq - g.z_min) / g.dz, (pq - g.p_min) / g.dp])
    vals = W.values
    if np.iscomplexobj(vals):
        return (ndimage.map_coordinates(vals.real, coords, order=1, mode="constant", cval=0.0)
                + 1j * ndimage.map_coordinates(vals.imag, coords, order=1, mode="constant", cval=0.0))
    return ndimage.map_coordinates(vals, coords, order=1, mode="constant", cval=0.0)


def _outside(grid: GridSpec, z, p):
    return ((z < grid.z_min) | (z > grid.z_max - grid.dz)
            | (p < grid.p_min) | (p > grid.p_max - grid.dp))


def transport(source: Source, flow: AffineFlow, grid: Optional[GridSpec] = None, *,
              phase: Optional[Callable] = None, loss_tol: float = 1e-3):
    """Pull a phase-space function back along an affine flow: W(x) = W0(flow^-1(x)).

    Analytic sources (GaussianState, GaussianWigner) are evaluated exactly at the
    pulled-back points and need ``grid``. Tabulated fields are bilinearly
    interpolated on their own grid. ``phase(z0, p0)``, if given, multiplies the
    result by exp(i*phase) evaluated at the initial points and yields a
    ComplexField.
    """
    tabulated = isinstance(source, (RealField, ComplexField))
    if tabulated:
        grid = grid or source.grid
    elif grid is None:
        raise ValueError("an analytic source needs a target grid")
    zz, pp = grid.mesh()
    z0, p0 = flow.pullback(zz, pp)
    if tabulated:
        g0 = source.grid
        sz, sp = g0.mesh()
        zf, pf = flow.apply(sz, sp)
        weight = np.abs(source.values)
        total = weight.sum()
        lost = weight[_outside(grid, zf, pf)].sum() / total if total > 0 else 0.0
        vals = _bilinear(source, z0, p0)
    else:
        vals = source(z0, p0)
        lost = 1.0 - float(np.abs(vals).sum() * grid.cell)
    if lost > loss_tol:
        raise ExtrapolationLoss(f"{lost:.3g} of the mass leaves the grid (limit {loss_tol:g})")
    if phase is not None:
        vals = vals * np.exp(1j * phase(z0, p0))
    if np.iscomplexobj(vals):
        return ComplexField(grid, vals, source.hbar)
    return RealField(grid, vals, source.hbar)


def thermal_distribution(params: PhysParams, kT: float, V: PolynomialPotential,
                         grid: GridSpec, *, n_particles: float = 1.0,
                         edge_tol: float = 1e-3) -> RealField:
    """Boltzmann distribution exp(-p^2/(2 m_i kT) - V(z)/kT) normalized on the grid.

    The result integrates to ``n_particles`` (1 by default).
    """
    if not kT > 0:
        raise ValueError("kT must be positive")
    z, p = grid.z, grid.p
    vz = V(z)
    finite = np.isfinite(vz)
    if not finite.any():
        raise NotNormalizable("potential is infinite on the whole grid")
    vz = vz - vz[finite].min()
    fz = np.exp(-vz / kT)
    fp = np.exp(-p * p / (2 * params.m_i * kT))
    f = np.outer(fz, fp)
    total = f.sum()
    f /= total * grid.cell
    bz, bp = max(1, grid.n_z // 32), max(1, grid.n_p // 32)
    mask = np.zeros(f.shape, bool)
    mask[:bz] = mask[-bz:] = True
    mask[:, :bp] = mask[:, -bp:] = True
    edge = f[mask].sum() * grid.cell
    if edge > edge_tol:
        raise NotNormalizable(f"edge mass {edge:.3g} exceeds {edge_tol:g}; grid too small or V not confining")
    return RealField(grid, n_particles * f, params.hbar)


def _stencil(order: int, accuracy: int):
    r = (order - 1) // 2 + accuracy // 2
    k = np.arange(-r, r + 1)
    A = np.vander(k, increasing=True).T.astype(float)
    rhs = np.zeros(2 * r + 1)
    rhs[order] = math.factorial(order)
    return k, np.linalg.solve(A, rhs)


def central_difference(a: np.ndarray, h: float, order: int, axis: int, accuracy: int = 4) -> np.ndarray:
    """Central finite-difference derivative, treating values beyond the array as zero."""
    if order == 0:
        return np.array(a, copy=True)
    offsets, weights = _stencil(order, accuracy)
    r = offsets[-1]
    pad = [(0, 0)] * a.ndim
    pad[axis] = (r, r)
    ap = np.pad(a, pad)
    n = a.shape[axis]
    out = np.zeros_like(a, dtype=np.result_type(a, float))
    for k, w in zip(offsets, weights):
        if w != 0.0:
            out += w * np.take(ap, np.arange(r + k, r + k + n), axis=axis)
    return out / h ** order


def classical_liouville_residual(fields: Sequence[RealField], dt: float, params: PhysParams,
                                 V: PolynomialPotential, index: Optional[int] = None,
                                 accuracy: int = 4) -> RealField:
    """(d/dt + (p/m_i) d/dz - V'(z) d/dp) W at one interior time sample.

    ``fields`` are snapshots spaced by dt; the default index is the middle one.
    """
    if len(fields) < 3:
        raise ValueError("need at least three time samples")
    i = len(fields) // 2 if index is None else index
    if not 1 <= i <= len(fields) - 2:
        raise ValueError("index must have neighbours on both sides")
    W = fields[i]
    g = W.grid
    dwdt = (fields[i + 1].values - fields[i - 1].values) / (2 * dt)
    dwdz = central_difference(W.values, g.dz, 1, 0, accuracy)
    dwdp = central_difference(W.values, g.dp, 1, 1, accuracy)
    force = V.derivative(1)(g.z)[:, None]
    res = dwdt + (g.p[None, :] / params.m_i) * dwdz - force * dwdp
    return RealField(g, res, W.hbar)


def quantum_correction_residual(W: RealField, V: PolynomialPotential, params: PhysParams,
                                accuracy: int = 4) -> RealField:
    """Odd-derivative quantum terms sum_{l>=1} (-1)^l (hbar/2)^{2l}/(2l+1)! V^(2l+1) d_p^(2l+1) W."""
    g = W.grid
    out = np.zeros(W.values.shape)
    hb = params.hbar
    for l in (1, 2, 3):
        dv = V.derivative(2 * l + 1)
        if dv.degree == 0 and dv.coefficients[0] == 0.0:
            continue
        coef = (-1) ** l * (hb / 2) ** (2 * l) / math.factorial(2 * l + 1)
        out += coef * dv(g.z)[:, None] * central_difference(W.values, g.dp, 2 * l + 1, 1, accuracy)
    return RealField(g, out, W.hbar)
