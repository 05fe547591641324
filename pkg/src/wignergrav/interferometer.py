"""Three-pulse light-pulse interferometer in phase space.

Pulse sequence: beam splitter at t=0, mirror at T, beam splitter at 2T. The
|g1> exit port is built from the upper, lower and interference path Wigner
functions; the |g2> port is 1 - P_g1.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import (AffineFlow, PhysParams, classical_flow, kick_flow,
                       oscillator_functions, transport)
from .errors import GridMismatch
from .phasespace import (ComplexField, GaussianState, GaussianWigner, GridSpec,
                         RealField, WaveFunction, amplitude_phase,
                         characteristic_transform, wigner_transform)

__all__ = [
    "PulseSequence",
    "EndpointReport",
    "ExitReport",
    "kick",
    "path_flow",
    "propagate_path",
    "endpoints",
    "separation",
    "laser_phase_combination",
    "interference_phase",
    "exit_probability_exact",
    "exit_probability_weak",
    "assemble_exit_wigner",
    "exit_port_wigner",
    "exit_field_grid",
    "fit_fringe",
]

PATHS = ("upper", "lower", "interference")


@dataclass(frozen=True)
class PulseSequence:
    """Pulse timing and laser phases; k falls back to PhysParams.k when None."""

    T: float
    phi0: float = 0.0
    phiT: float = 0.0
    phi2T: float = 0.0
    k: Optional[float] = None

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")

    def wavenumber(self, params: PhysParams) -> float:
        return params.k if self.k is None else self.k

    def with_delta_phi(self, delta_phi: float) -> "PulseSequence":
        """Same sequence with phi2T chosen so that the laser combination is delta_phi."""
        return PulseSequence(self.T, self.phi0, self.phiT, delta_phi + 2 * self.phiT - self.phi0, self.k)


@dataclass(frozen=True)
class EndpointReport:
    z_u: float
    p_u: float
    z_l: float
    p_l: float
    z_i: float
    p_i: float
    delta_z: float
    delta_p: float
    delta_s: float
    delta_c: float


@dataclass(frozen=True)
class ExitReport:
    P_g1: float
    contrast: float
    beta: float
    total_phase: float
    weak_gradient_terms: Optional[dict] = None

    @property
    def P_g2(self) -> float:
        return 1.0 - self.P_g1

    def as_dict(self) -> dict:
        out = {"P_g1": self.P_g1, "P_g2": self.P_g2, "contrast": self.contrast,
               "beta": self.beta, "total_phase": self.total_phase}
        for key, val in (self.weak_gradient_terms or {}).items():
            out[key] = val
        return out

    def to_record(self) -> str:
        return "".join(f"{k} = {v:.17g}\n" for k, v in self.as_dict().items())


@dataclass(frozen=True)
class _Gradient:
    """Separation building blocks at interrogation time T."""

    c: float        # cos(x), x = sqrt(Gamma') T
    s: float        # sin(x)/sqrt(Gamma')
    h: float        # (1 - cos x)/Gamma'
    h2: float       # (1 - cos 2x)/Gamma'
    dc_over_gamma: float
    ds_over_root: float


def _gradient(params: PhysParams, T: float) -> _Gradient:
    gam = params.gamma_eff
    c, s, h = oscillator_functions(gam, T)
    _, _, h2 = oscillator_functions(gam, 2 * T)
    return _Gradient(c, s, h, h2, -2 * c * h, -2 * s * gam * h)


def laser_phase_combination(seq: PulseSequence) -> float:
    """phi(2T) - 2 phi(T) + phi(0)."""
    return seq.phi2T - 2 * seq.phiT + seq.phi0


def separation(seq: PulseSequence, params: PhysParams):
    """Return (delta_z, delta_p, delta_s, delta_c).

    delta_c = cos 2x - 2 cos x + 1 and delta_s = sin 2x - 2 sin x with
    x = sqrt(Gamma') T (sinh for Gamma' < 0, using |Gamma'|).
    """
    hk = params.hbar * seq.wavenumber(params)
    gr = _gradient(params, seq.T)
    gam = params.gamma_eff
    dz = hk / params.m_i * gr.ds_over_root
    dc = gam * gr.dc_over_gamma
    ds = math.sqrt(abs(gam)) * gr.ds_over_root
    return dz, hk * dc, ds, dc


def endpoints(seq: PulseSequence, params: PhysParams, z0: float, p0: float) -> EndpointReport:
    """Final phase-space points of the three paths started at (z0, p0)."""
    hk = params.hbar * seq.wavenumber(params)
    m, gam = params.m_i, params.gamma_eff
    gr = _gradient(params, seq.T)
    zb, pb = classical_flow(params, 2 * seq.T).apply(z0, p0)
    dc = gam * gr.dc_over_gamma
    z_u = zb + hk / m * gr.s * (2 * gr.c - 1)
    p_u = pb + hk * (dc - gam * gr.h)
    z_l = zb + hk / m * gr.s
    p_l = pb - hk * gam * gr.h
    z_i = zb + hk / m * gr.s * gr.c
    p_i = pb - 0.5 * hk * gam * gr.h2
    dz, dp, ds, dc = separation(seq, params)
    return EndpointReport(z_u, p_u, z_l, p_l, z_i, p_i, dz, dp, ds, dc)


def interference_phase(seq: PulseSequence, params: PhysParams, z0, p0):
    """delta_phi(z0, p0) = g' dp/(hbar Gamma') + k dz/2 + (dp z0 + dz p0)/hbar.

    The first term is evaluated as g' k (delta_c/Gamma'), which stays finite
    as Gamma' -> 0 and tends to -k g' T^2.
    """
    k = seq.wavenumber(params)
    gr = _gradient(params, seq.T)
    dz, dp, _, _ = separation(seq, params)
    return params.g_eff * k * gr.dc_over_gamma + 0.5 * k * dz + (dp * z0 + dz * p0) / params.hbar


def _initial_characteristic(psi0, xi: float, q: float, grid: Optional[GridSpec]) -> complex:
    if isinstance(psi0, (GaussianState, GaussianWigner)) and grid is None:
        return complex(psi0.characteristic(xi, q))
    if isinstance(psi0, WaveFunction):
        W0 = wigner_transform(psi0, grid or _default_grid(psi0))
    elif isinstance(psi0, (GaussianState, GaussianWigner)):
        zz, pp = grid.mesh()
        W0 = RealField(grid, psi0(zz, pp), psi0.hbar)
    else:
        W0 = psi0
    return characteristic_transform(W0, xi, q)


def _default_grid(psi: WaveFunction) -> GridSpec:
    g = psi.grid
    pmax = np.pi * psi.hbar / g.dz
    return GridSpec(g.z_min, g.z_max, g.n, -pmax, pmax, g.n)


def exit_probability_exact(seq: PulseSequence, params: PhysParams, psi0,
                           grid: Optional[GridSpec] = None) -> ExitReport:
    """P_g1 = [1 + |D| cos(dphi + g' dp/(hbar Gamma') + k dz/2 + beta)]/2, D = W0~(dz, dp).

    psi0 may be a GaussianState (analytic characteristic function), a
    WaveFunction (transformed on ``grid`` or on its own Nyquist grid), or a
    RealField.
    """
    k = seq.wavenumber(params)
    gr = _gradient(params, seq.T)
    dz, dp, _, _ = separation(seq, params)
    contrast, beta = amplitude_phase(_initial_characteristic(psi0, dz, dp, grid))
    total = laser_phase_combination(seq) + params.g_eff * k * gr.dc_over_gamma + 0.5 * k * dz + beta
    P = 0.5 * (1.0 + contrast * math.cos(total))
    return ExitReport(P, contrast, beta, total)


def exit_probability_weak(seq: PulseSequence, params: PhysParams, psi0,
                          grid: Optional[GridSpec] = None) -> ExitReport:
    """Leading-order gradient result with the 7/12 phase correction and recoil phase."""
    k, T, m = seq.wavenumber(params), seq.T, params.m_i
    gam = params.gamma_eff
    eps = gam * T * T
    if eps >= 0.3:
        warnings.warn(f"weak-gradient formula used at Gamma' T^2 = {eps:.3g} >= 0.3", stacklevel=2)
    hk = params.hbar * k
    phi_g = k * params.g_eff * T * T
    phi_g_tilde = phi_g * (1 - 7 / 12 * eps)
    recoil = gam * T ** 3 * params.hbar * k * k / (2 * m)
    dz_t = -hk / m * gam * T ** 3
    dp_t = -hk * gam * T * T
    contrast, beta = amplitude_phase(_initial_characteristic(psi0, dz_t, dp_t, grid))
    total = laser_phase_combination(seq) - phi_g_tilde - recoil + beta
    terms = {"delta_phi_g": phi_g, "delta_phi_g_tilde": phi_g_tilde, "recoil_phase": recoil,
             "delta_z_tilde": dz_t, "delta_p_tilde": dp_t}
    return ExitReport(0.5 * (1.0 + contrast * math.cos(total)), contrast, beta, total, terms)


def kick(W, j: float, hbar_k: float, *, loss_tol: float = 1e-3):
    """Momentum displacement W'(z, p) = W(z, p - j hbar k), j in {-1, -1/2, 1/2, 1}."""
    if j not in (-1, -0.5, 0.5, 1):
        raise ValueError(f"kick order must be one of -1, -1/2, 1/2, 1; got {j}")
    dp = j * hbar_k
    if isinstance(W, GaussianState):
        return GaussianState(W.z0, W.p0 + dp, W.sigma_z, W.hbar)
    if isinstance(W, GaussianWigner):
        return W.shifted(0.0, dp)
    return transport(W, kick_flow(dp), loss_tol=loss_tol)


def path_flow(path: str, seq: PulseSequence, params: PhysParams) -> AffineFlow:
    """Composite kick/flow map of one path over the full 2T sequence."""
    hk = params.hbar * seq.wavenumber(params)
    F = classical_flow(params, seq.T)
    K = kick_flow
    if path == "upper":
        return K(hk).then(F).then(K(-hk)).then(F)
    if path == "lower":
        return F.then(K(hk)).then(F).then(K(-hk))
    if path == "interference":
        return K(0.5 * hk).then(F).then(F).then(K(-0.5 * hk))
    raise ValueError(f"unknown path {path!r}; expected one of {PATHS}")


def propagate_path(W0, path: str, seq: PulseSequence, params: PhysParams,
                   grid: Optional[GridSpec] = None, *, loss_tol: float = 1e-3) -> ComplexField:
    """Wigner-matrix element of one path at t = 2T, sampled on ``grid``.

    Analytic Gaussian inputs are pulled back exactly; WaveFunction inputs are
    first transformed on ``grid`` and then interpolated.
    """
    flow = path_flow(path, seq, params)
    if isinstance(W0, WaveFunction):
        if grid is None:
            raise ValueError("a WaveFunction input needs a grid")
        W0 = wigner_transform(W0, grid)
    phase = None
    if path == "interference":
        phase = lambda z0, p0: interference_phase(seq, params, z0, p0)
    out = transport(W0, flow, grid, phase=phase, loss_tol=loss_tol)
    if isinstance(out, RealField):
        out = ComplexField(out.grid, out.values.astype(complex), out.hbar)
    return out


def assemble_exit_wigner(W_u, W_l, W_i, delta_phi: float, *, imag_tol: float = 1e-10) -> RealField:
    """W_g1 = [W_u + W_l + e^{i dphi} W_i + e^{-i dphi} W_i*]/4."""
    for other in (W_l, W_i):
        if not W_u.grid.matches(other.grid):
            raise GridMismatch("path fields must share one grid")
    scale = max(float(np.abs(W_u.values).max()), float(np.abs(W_l.values).max()), 1e-300)
    for name, w in (("upper", W_u), ("lower", W_l)):
        if np.iscomplexobj(w.values) and np.abs(w.values.imag).max() > imag_tol * scale:
            raise ValueError(f"{name} path field is not real")
    cross = np.exp(1j * delta_phi) * W_i.values
    vals = 0.25 * (W_u.values.real + W_l.values.real + 2 * cross.real)
    return RealField(W_u.grid, vals, W_u.hbar)


def exit_port_wigner(W0, seq: PulseSequence, params: PhysParams, grid: GridSpec) -> RealField:
    """Propagate all three paths and assemble the |g1> exit-port Wigner function."""
    parts = [propagate_path(W0, p, seq, params, grid) for p in PATHS]
    return assemble_exit_wigner(*parts, laser_phase_combination(seq))


def exit_field_grid(seq: PulseSequence, params: PhysParams, psi0: GaussianState,
                    n: int = 256, widths: float = 9.0) -> GridSpec:
    """Square grid centred on (z_i, p_i) holding both arms and their fringes.

    Half widths are |dz|/2 (resp. |dp|/2) plus ``widths`` standard deviations
    of the initial Gaussian pushed through the interference-path map.
    """
    flow = path_flow("interference", seq, params)
    W = psi0.phase_space().pushed(flow.matrix, flow.offset)
    (zc, pc), (sz, sp) = W.mean, np.sqrt(np.diag(W.cov))
    dz, dp, _, _ = separation(seq, params)
    hz, hp = 0.5 * abs(dz) + widths * sz, 0.5 * abs(dp) + widths * sp
    return GridSpec(zc - hz, zc + hz, n, pc - hp, pc + hp, n)


def fit_fringe(delta_phi, P) -> dict:
    """Least-squares fit P = offset + (contrast/2) cos(delta_phi + phase)."""
    x = np.asarray(delta_phi, dtype=float)
    A = np.column_stack([np.ones_like(x), np.cos(x), np.sin(x)])
    (a, b, c), *_ = np.linalg.lstsq(A, np.asarray(P, dtype=float), rcond=None)
    fit = A @ np.array([a, b, c])
    return {"offset": float(a), "contrast": float(2 * math.hypot(b, c)),
            "phase": float(math.atan2(-c, b)), "max_residual": float(np.abs(fit - P).max())}
