"""Airy solutions, bouncer and gravitational Coulomb spectra, oscillator eigenstates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize, special

from .dynamics import PhysParams, PolynomialPotential, central_difference
from .errors import ConvergenceFailure
from .phasespace import GridSpec, PositionGrid, RealField, WaveFunction, wigner_transform

__all__ = [
    "airy_ai",
    "airy_zeros",
    "AirySolution",
    "Spectrum",
    "linear_potential_solution",
    "linear_potential_eigenfunction",
    "bouncer_spectrum",
    "gravitational_coulomb_spectrum",
    "hermite_functions",
    "harmonic_wavefunction",
    "harmonic_wigner_eigenstate",
    "phase_space_eigen_residual",
]


def airy_ai(x):
    """Airy function Ai(x); scalar in, float out, arrays elementwise."""
    ai = special.airy(np.asarray(x, dtype=float))[0]
    return float(ai) if np.ndim(ai) == 0 else ai


def airy_zeros(count: int, xtol: float = 1e-12) -> np.ndarray:
    """Magnitudes a_1 < a_2 < ... of the first ``count`` zeros of Ai(-x).

    Each zero is bracketed around its asymptotic estimate and refined with brentq.
    """
    out = np.empty(count)
    for n in range(1, count + 1):
        t = 3 * np.pi / 8 * (4 * n - 1)
        guess = t ** (2 / 3) * (1 + 5 / 48 / t ** 2)
        half = 0.25 * np.pi / math.sqrt(guess)
        lo, hi = guess - half, guess + half
        f = lambda x: airy_ai(-x)
        if f(lo) * f(hi) > 0:
            raise ConvergenceFailure(f"no sign change bracketing Airy zero {n}")
        root, info = optimize.brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps,
                                     full_output=True, disp=False)
        if not info.converged:
            raise ConvergenceFailure(f"Airy zero {n} did not converge: {info.flag}")
        out[n - 1] = root
    return out


def _airy_scales(params: PhysParams):
    """Return (kappa, energy unit) for the linear potential m_g g z."""
    if not params.g > 0:
        raise ValueError("the linear potential needs g > 0")
    kappa = (2 * params.m_i * params.m_g * params.g / params.hbar ** 2) ** (1 / 3)
    unit = (params.m_g ** 2 * params.g ** 2 * params.hbar ** 2 / (2 * params.m_i)) ** (1 / 3)
    return kappa, unit


@dataclass(frozen=True)
class AirySolution:
    """u(z) = norm * Ai(kappa z - epsilon)."""

    kappa: float
    epsilon: float
    norm: float = math.sqrt(math.pi)

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")

    def __call__(self, z):
        return self.norm * airy_ai(self.kappa * np.asarray(z, dtype=float) - self.epsilon)

    def nodes(self, count: int) -> np.ndarray:
        """Positions of the first ``count`` zeros, counted downward from the turning point."""
        return (self.epsilon - airy_zeros(count)) / self.kappa


def linear_potential_solution(params: PhysParams, E: float) -> AirySolution:
    """Energy-E solution in V = m_g g z, normalized to a unit oscillation envelope.

    Ai(-x) ~ pi^(-1/2) x^(-1/4) sin(...) for large x, hence norm = sqrt(pi).
    """
    kappa, unit = _airy_scales(params)
    return AirySolution(kappa, E / unit)


def linear_potential_eigenfunction(params: PhysParams, E: float, z) -> np.ndarray:
    return linear_potential_solution(params, E)(z)


@dataclass(frozen=True)
class Spectrum:
    levels: tuple

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple((int(n), float(e)) for n, e in self.levels))

    @property
    def n(self) -> np.ndarray:
        return np.array([n for n, _ in self.levels])

    @property
    def energies(self) -> np.ndarray:
        return np.array([e for _, e in self.levels])

    def to_csv(self, header=()) -> str:
        lines = ["# " + h for h in header] + ["n,E_n"]
        lines += [f"{n},{e:.17g}" for n, e in self.levels]
        return "\n".join(lines) + "\n"

    def write_csv(self, path, header=()) -> None:
        Path(path).write_text(self.to_csv(header))


def bouncer_spectrum(params: PhysParams, n_max: int) -> Spectrum:
    """Levels n = 0..n_max-1 above a hard wall: E_n = (m_g^2 g^2 hbar^2/(2 m_i))^(1/3) a_(n+1)."""
    if not 1 <= n_max <= 100:
        raise ValueError("n_max must lie in 1..100")
    _, unit = _airy_scales(params)
    zeros = airy_zeros(n_max)
    return Spectrum(tuple((n, unit * a) for n, a in enumerate(zeros)))


def gravitational_coulomb_spectrum(params: PhysParams, M: float, G_newton: float, n_max: int) -> Spectrum:
    """E_n = -m_i m_g^2 (M G)^2 / (2 hbar^2 n^2) for n = 1..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    ryd = params.m_i * params.m_g ** 2 * (M * G_newton) ** 2 / (2 * params.hbar ** 2)
    return Spectrum(tuple((n, -ryd / n ** 2) for n in range(1, n_max + 1)))


def hermite_functions(n: int, x) -> np.ndarray:
    """Normalized Hermite functions psi_0..psi_n at x, stacked along axis 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, n):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def harmonic_wavefunction(n: int, omega: float, params: PhysParams, grid: PositionGrid) -> WaveFunction:
    """n-th eigenfunction of p^2/(2 m_i) + m_i omega^2 z^2 / 2."""
    ell = math.sqrt(params.hbar / (params.m_i * omega))
    vals = hermite_functions(n, grid.z / ell)[n] / math.sqrt(ell)
    return WaveFunction(grid, vals.astype(complex), params.hbar)


def harmonic_wigner_eigenstate(n: int, omega: float, params: PhysParams, grid: GridSpec) -> RealField:
    if not 0 <= n <= 30:
        raise ValueError("n must lie in 0..30")
    psi = harmonic_wavefunction(n, omega, params, grid.position_grid())
    return wigner_transform(psi.normalized(), grid)


def phase_space_eigen_residual(W: RealField, E: float, V: PolynomialPotential, params: PhysParams,
                               accuracy: int = 4) -> RealField:
    """[p^2/2m_i + V - (hbar^2/8m_i) d_z^2 + L_even - E] W with

    L_even = sum_{l>=1} (-1)^l (hbar/2)^{2l}/(2l)! V^(2l)(z) d_p^(2l).
    """
    g = W.grid
    w = W.values
    hb, m = params.hbar, params.m_i
    res = (g.p[None, :] ** 2 / (2 * m) + V(g.z)[:, None] - E) * w
    res -= hb ** 2 / (8 * m) * central_difference(w, g.dz, 2, 0, accuracy)
    for l in (1, 2, 3):
        dv = V.derivative(2 * l)
        if dv.degree == 0 and dv.coefficients[0] == 0.0:
            continue
        coef = (-1) ** l * (hb / 2) ** (2 * l) / math.factorial(2 * l)
        res += coef * dv(g.z)[:, None] * central_difference(w, g.dp, 2 * l, 1, accuracy)
    return RealField(g, res, W.hbar)
