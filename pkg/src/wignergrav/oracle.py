"""Two-component split-step Schrodinger simulation of the pulse sequence.

Nothing here uses phase-space machinery; it is the independent reference the
closed-form interferometer results are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from .dynamics import PhysParams, PolynomialPotential, classical_flow
from .errors import GridEscape, NonNormalized
from .interferometer import PulseSequence
from .phasespace import GaussianState, GridSpec, PositionGrid, RealField, WaveFunction, wigner_transform

__all__ = [
    "TwoComponentState",
    "SplitStepConfig",
    "OracleRun",
    "STAGES",
    "apply_pulse",
    "evolve",
    "run_interferometer",
    "phase_scan",
    "wigner_of_exit",
    "displacement_expectation",
    "default_grid",
    "write_ledger",
]

STAGES = ("before_first_pulse", "after_first_pulse", "before_second_pulse",
          "after_second_pulse", "before_third_pulse", "after_third_pulse")


@dataclass(frozen=True)
class TwoComponentState:
    """Amplitudes in |g1> and |g2> on a shared position grid."""

    psi1: WaveFunction
    psi2: WaveFunction

    def __post_init__(self):
        if not self.psi1.grid.matches(self.psi2.grid):
            raise ValueError("components must share a grid")

    @classmethod
    def ground(cls, psi: WaveFunction) -> "TwoComponentState":
        return cls(psi, WaveFunction(psi.grid, np.zeros(psi.grid.n, complex), psi.hbar))

    @property
    def grid(self) -> PositionGrid:
        return self.psi1.grid

    @property
    def hbar(self) -> float:
        return self.psi1.hbar

    def populations(self):
        return self.psi1.norm(), self.psi2.norm()

    def norm(self) -> float:
        return sum(self.populations())


@dataclass(frozen=True)
class SplitStepConfig:
    """Steps per free-evolution segment; dt = T / n_steps."""

    n_steps: int = 256
    edge_tol: float = 1e-6

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be a positive integer")

    def dt(self, T: float) -> float:
        return T / self.n_steps


@dataclass(frozen=True)
class OracleRun:
    P_g1: float
    P_g2: float
    exit: TwoComponentState
    ledger: Dict[str, TwoComponentState]


def apply_pulse(state: TwoComponentState, theta: float, k: float, phi: float) -> TwoComponentState:
    """Instantaneous Raman pulse of area theta.

    |g2> gains -i sin(theta) e^{i(kz+phi)} psi1, |g1> gains -i sin(theta) e^{-i(kz+phi)} psi2.
    """
    z = state.grid.z
    u = np.exp(1j * (k * z + phi))
    a, b = state.psi1.values, state.psi2.values
    c, s = math.cos(theta), math.sin(theta)
    new1 = c * a - 1j * s * np.conj(u) * b
    new2 = c * b - 1j * s * u * a
    h, g = state.hbar, state.grid
    return TwoComponentState(WaveFunction(g, new1, h), WaveFunction(g, new2, h))


def _escape(values: np.ndarray, tol: float) -> float:
    a = np.abs(values)
    edge = max(a[:2].max(), a[-2:].max())
    return edge if edge > tol else 0.0


def evolve(state: TwoComponentState, params: PhysParams, V: Optional[PolynomialPotential],
           T: float, cfg: SplitStepConfig = SplitStepConfig()) -> TwoComponentState:
    """Strang splitting exp(-iV dt/2h) exp(-iK dt/h) exp(-iV dt/2h), both components under H1."""
    V = params.potential() if V is None else V
    g, h = state.grid, state.hbar
    dt = cfg.dt(T)
    pot = V(g.z)
    p = g.momenta(h)
    half_v = np.exp(-0.5j * pot * dt / h)
    kin = np.exp(-1j * p * p / (2 * params.m_i) * dt / h)
    out = []
    for psi in (state.psi1, state.psi2):
        v = psi.values.copy()
        for _ in range(cfg.n_steps):
            v = half_v * np.fft.ifft(kin * np.fft.fft(half_v * v))
            edge = _escape(v, cfg.edge_tol)
            if edge:
                raise GridEscape(f"edge amplitude {edge:.3g} exceeds {cfg.edge_tol:g}")
        spec = np.abs(np.fft.fft(v)) * g.dz / math.sqrt(2 * np.pi * h)
        nyq = g.n // 2
        if spec[nyq - 2:nyq + 2].max() > cfg.edge_tol:
            raise GridEscape("momentum distribution reaches the Nyquist limit")
        out.append(WaveFunction(g, v, h))
    return TwoComponentState(*out)


def _start(psi0, grid: Optional[PositionGrid], seq, params) -> TwoComponentState:
    if isinstance(psi0, GaussianState):
        grid = grid or default_grid(seq, params, psi0)
        psi0 = psi0.wavefunction(grid)
    elif grid is not None and not psi0.grid.matches(grid):
        psi0 = psi0.resampled(grid)
    n = psi0.norm()
    if abs(n - 1.0) > 1e-6:
        raise NonNormalized(f"initial state norm {n:.12g}")
    return TwoComponentState.ground(psi0)


def _to_third_pulse(seq, params, V, psi0, cfg, grid, ledger):
    k = seq.wavenumber(params)
    st = _start(psi0, grid, seq, params)
    ledger[STAGES[0]] = st
    st = apply_pulse(st, math.pi / 4, k, seq.phi0)
    ledger[STAGES[1]] = st
    st = evolve(st, params, V, seq.T, cfg)
    ledger[STAGES[2]] = st
    st = apply_pulse(st, math.pi / 2, k, seq.phiT)
    ledger[STAGES[3]] = st
    st = evolve(st, params, V, seq.T, cfg)
    ledger[STAGES[4]] = st
    return st


def run_interferometer(seq: PulseSequence, params: PhysParams, V: Optional[PolynomialPotential],
                       psi0, cfg: SplitStepConfig = SplitStepConfig(),
                       grid: Optional[PositionGrid] = None) -> OracleRun:
    """pi/4 pulse, evolve T, pi/2 pulse, evolve T, pi/4 pulse; P_g1 is the final |g1> norm."""
    ledger: Dict[str, TwoComponentState] = {}
    st = _to_third_pulse(seq, params, V, psi0, cfg, grid, ledger)
    st = apply_pulse(st, math.pi / 4, seq.wavenumber(params), seq.phi2T)
    ledger[STAGES[5]] = st
    p1, p2 = st.populations()
    return OracleRun(p1, p2, st, ledger)


def phase_scan(seq: PulseSequence, params: PhysParams, V, psi0, delta_phis: Sequence[float],
               cfg: SplitStepConfig = SplitStepConfig(),
               grid: Optional[PositionGrid] = None) -> np.ndarray:
    """P_g1 for several laser-phase combinations.

    Only the last pulse depends on phi(2T), so the state is evolved once and
    the final pulse is applied per requested value.
    """
    ledger: Dict[str, TwoComponentState] = {}
    st = _to_third_pulse(seq, params, V, psi0, cfg, grid, ledger)
    k = seq.wavenumber(params)
    out = []
    for dphi in delta_phis:
        phi2T = seq.with_delta_phi(dphi).phi2T
        out.append(apply_pulse(st, math.pi / 4, k, phi2T).psi1.norm())
    return np.array(out)


def wigner_of_exit(state: TwoComponentState, grid: GridSpec) -> RealField:
    """Wigner function of the normalized |g1> exit amplitude."""
    return wigner_transform(state.psi1.normalized(), grid)


def displacement_expectation(psi: WaveFunction, xi: float, q: float) -> complex:
    """<psi| exp(i(xi p + q z)/hbar) |psi> computed on the wavefunction.

    Uses exp(i(xi p + q z)/hbar) = exp(i q z/hbar) exp(i xi p/hbar) exp(i xi q/(2 hbar)).
    """
    g, h = psi.grid, psi.hbar
    shifted = np.fft.ifft(np.exp(1j * xi * g.momenta(h) / h) * np.fft.fft(psi.values))
    phi = np.exp(1j * q * g.z / h) * shifted * np.exp(0.5j * xi * q / h)
    return complex(np.vdot(psi.values, phi) * g.dz)


def default_grid(seq: PulseSequence, params: PhysParams, psi0: GaussianState,
                 min_points: int = 1024, margin: float = 12.0) -> PositionGrid:
    """Power-of-two grid holding every arm's classical excursion plus a margin.

    The extent covers margin widths of the (spreading) packet around the
    extreme centre positions; the spacing resolves the largest momentum reached.
    """
    hk = params.hbar * seq.wavenumber(params)
    T, m = seq.T, params.m_i
    zs, ps = [], []
    for tt in np.linspace(0.0, 2 * T, 33):
        for kicked in (0.0, hk):
            z, p = classical_flow(params, tt).apply(psi0.z0, psi0.p0 + kicked)
            zs.append(z)
            ps.append(p)
    sp = psi0.sigma_p
    width = math.hypot(psi0.sigma_z, sp * 2 * T / m) + psi0.sigma_z
    zlo, zhi = min(zs) - margin * width, max(zs) + margin * width
    pmax = max(abs(min(ps)), abs(max(ps))) + hk + margin * sp
    dz_needed = math.pi * params.hbar / (1.25 * pmax)
    n = max(min_points, 1 << math.ceil(math.log2((zhi - zlo) / dz_needed)))
    return PositionGrid(zlo, zhi, n)


def write_ledger(run: OracleRun, directory) -> list:
    """Write one CSV per stage with columns z,re1,im1,re2,im2."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in STAGES:
        st = run.ledger[name]
        rows = np.column_stack([st.grid.z, st.psi1.values.real, st.psi1.values.imag,
                                st.psi2.values.real, st.psi2.values.imag])
        path = d / f"{name}.csv"
        np.savetxt(path, rows, fmt="%.17g", delimiter=",", header="z,re1,im1,re2,im2")
        paths.append(path)
    return paths
