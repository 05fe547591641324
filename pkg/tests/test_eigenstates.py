import math
import warnings

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st
from scipy import integrate, optimize, special

from wignergrav.dynamics import PhysParams, PolynomialPotential
from wignergrav.eigenstates import (AirySolution, Spectrum, airy_ai, airy_zeros, bouncer_spectrum,
                                    gravitational_coulomb_spectrum, harmonic_wavefunction,
                                    harmonic_wigner_eigenstate, hermite_functions,
                                    linear_potential_eigenfunction, linear_potential_solution,
                                    phase_space_eigen_residual)
from wignergrav.phasespace import GridSpec, phase_space_overlap


def airy_quad(x):
    """Ai(x) from the steepest-descent contour t = s exp(+-i pi/3):

    Ai(x) = (1/pi) Im int_0^inf exp(-s^3/3 - x s e^{i pi/3}) e^{i pi/3} ds.
    """
    w = complex(0.5, math.sqrt(3) / 2)
    f = lambda s: (np.exp(-s ** 3 / 3 - x * s * w) * w).imag
    with warnings.catch_warnings():
        # quad flags roundoff near the zeros of Ai, where the result is tiny
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(f, 0, 12 + abs(x), limit=400, epsabs=1e-15, epsrel=1e-13)
    return val / math.pi


def airy_maclaurin(x, terms=60):
    c1 = 1 / (3 ** (2 / 3) * math.gamma(2 / 3))
    c2 = 1 / (3 ** (1 / 3) * math.gamma(1 / 3))
    f = g = 0.0
    fk, gk = 1.0, x
    for k in range(terms):
        f += fk
        g += gk
        fk *= x ** 3 / ((3 * k + 2) * (3 * k + 3))
        gk *= x ** 3 / ((3 * k + 3) * (3 * k + 4))
    return c1 * f - c2 * g


def laguerre_wigner(n, z, p, m, omega, hbar):
    h = p * p / (2 * m) + 0.5 * m * omega ** 2 * z * z
    x = 4 * h / (hbar * omega)
    return (-1) ** n / (np.pi * hbar) * np.exp(-x / 2) * special.eval_laguerre(n, x)


class TestAiry:
    def test_value_at_origin(self):
        assert airy_ai(0.0) == pytest.approx(0.35502805388781723926, rel=1e-15)
        assert airy_quad(0.0) == pytest.approx(0.35502805388781723926, rel=1e-12)

    @pytest.mark.parametrize("x", np.linspace(-10, 5, 31))
    def test_matches_contour_quadrature(self, x):
        assert airy_ai(x) == pytest.approx(airy_quad(x), rel=1e-10, abs=1e-13)

    @pytest.mark.parametrize("x", [-4.0, -1.5, 0.7, 3.0, 4.5])
    def test_matches_maclaurin(self, x):
        assert airy_ai(x) == pytest.approx(airy_maclaurin(x), rel=1e-10)

    def test_decay(self):
        v = airy_ai(8.0)
        zeta = 2 / 3 * 8 ** 1.5
        asym = math.exp(-zeta) / (2 * math.sqrt(math.pi) * 8 ** 0.25) * (1 - 5 / (72 * zeta))
        assert 0 < v < 1e-7
        assert v == pytest.approx(asym, rel=1e-3)

    def test_ode_at_1_3(self):
        h = 1e-3
        d2 = (airy_ai(1.3 + h) - 2 * airy_ai(1.3) + airy_ai(1.3 - h)) / h ** 2
        assert d2 / airy_ai(1.3) == pytest.approx(1.3, abs=1e-6)

    def test_ode_random_points(self, rng):
        h = 5e-4
        for x in rng.uniform(-10, 5, 50):
            d2 = (airy_ai(x + h) - 2 * airy_ai(x) + airy_ai(x - h)) / h ** 2
            assert abs(d2 - x * airy_ai(x)) < 1e-6

    def test_vectorized(self):
        x = np.array([0.0, 1.0])
        assert np.allclose(airy_ai(x), [airy_ai(0.0), airy_ai(1.0)], rtol=0, atol=0)


class TestAiryZeros:
    def test_first_zero_from_quadrature_oracle(self):
        a1 = optimize.brentq(lambda x: airy_quad(-x), 2.0, 2.6, xtol=1e-13)
        assert a1 == pytest.approx(2.33810741, abs=1e-7)
        assert airy_zeros(1)[0] == pytest.approx(a1, abs=1e-10)

    def test_against_arbitrary_precision(self):
        ref = np.array([-float(mpmath.airyaizero(j)) for j in range(1, 101)])
        assert np.abs(airy_zeros(100) - ref).max() < 1e-12

    def test_increasing(self):
        z = airy_zeros(30)
        assert np.all(np.diff(z) > 0)


class TestLinearPotential:
    def test_kappa_cube_root_scaling(self):
        a = linear_potential_solution(PhysParams(g=1.0), 1.0)
        b = linear_potential_solution(PhysParams(m_i=2, m_g=2, g=2.0), 1.0)
        assert b.kappa == pytest.approx(2 * a.kappa, rel=1e-14)

    def test_nodes_are_zeros(self):
        sol = linear_potential_solution(PhysParams(g=1.3, m_g=0.7), 2.0)
        nodes = sol.nodes(5)
        assert np.all(np.abs(sol(nodes)) < 1e-12)
        assert np.allclose(nodes, (sol.epsilon - airy_zeros(5)) / sol.kappa)

    def test_zero_energy_first_node(self):
        sol = linear_potential_solution(PhysParams(g=1.0), 0.0)
        assert sol.nodes(1)[0] == pytest.approx(-2.33810741 / sol.kappa, abs=1e-7)

    @pytest.mark.parametrize("m_i,m_g,g,E", [(1, 1, 1, 1.0), (2.0, 0.5, 3.0, 0.3), (0.7, 1.4, 0.9, 4.0)])
    def test_schrodinger_residual(self, m_i, m_g, g, E):
        params = PhysParams(m_i=m_i, m_g=m_g, g=g)
        sol = linear_potential_solution(params, E)
        z = np.linspace(-3, 3, 61) / sol.kappa
        h = 5e-4 / sol.kappa
        u = lambda x: linear_potential_eigenfunction(params, E, x)
        d2 = (u(z + h) - 2 * u(z) + u(z - h)) / h ** 2
        res = -d2 / (2 * m_i) + (m_g * g * z - E) * u(z)
        unit = (m_g ** 2 * g ** 2 / (2 * m_i)) ** (1 / 3)
        assert np.abs(res).max() / unit < 1e-6

    def test_envelope_normalization(self):
        x = np.linspace(200, 210, 20001)
        u = AirySolution(1.0, 0.0)(-x)
        env = np.abs(u * x ** 0.25).max()
        assert env == pytest.approx(1.0, abs=1e-3)

    def test_requires_positive_g(self):
        with pytest.raises(ValueError):
            linear_potential_solution(PhysParams(g=0.0), 1.0)


class TestBouncer:
    def test_ten_levels_increasing(self):
        s = bouncer_spectrum(PhysParams(g=1.0), 10)
        assert list(s.n) == list(range(10))
        assert np.all(np.diff(s.energies) > 0)

    @given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.1, 10))
    def test_mass_power_law(self, m_i, m_g, g, lam):
        base = bouncer_spectrum(PhysParams(m_i=m_i, m_g=m_g, g=g), 8).energies
        Eg = bouncer_spectrum(PhysParams(m_i=m_i, m_g=m_g * lam, g=g), 8).energies
        Ei = bouncer_spectrum(PhysParams(m_i=m_i * lam, m_g=m_g, g=g), 8).energies
        assert np.allclose(Eg, base * lam ** (2 / 3), rtol=1e-12, atol=0)
        assert np.allclose(Ei, base * lam ** (-1 / 3), rtol=1e-12, atol=0)

    def test_factor_eight(self):
        base = bouncer_spectrum(PhysParams(g=1.0), 5).energies
        assert np.allclose(bouncer_spectrum(PhysParams(m_g=8, g=1.0), 5).energies, 4 * base, rtol=1e-12)
        assert np.allclose(bouncer_spectrum(PhysParams(m_i=8, g=1.0), 5).energies, base / 2, rtol=1e-12)

    @pytest.mark.parametrize("n", [0, 1, 4, 9])
    def test_node_count(self, n):
        params = PhysParams(g=1.0)
        E = bouncer_spectrum(params, 10).energies[n]
        sol = linear_potential_solution(params, E)
        assert abs(sol(0.0)) < 1e-12
        z = np.linspace(1e-6, (sol.epsilon + 10) / sol.kappa, 200001)
        assert np.sum(np.diff(np.sign(sol(z))) != 0) == n

    def test_limits(self):
        with pytest.raises(ValueError):
            bouncer_spectrum(PhysParams(g=1.0), 101)
        with pytest.raises(ValueError):
            bouncer_spectrum(PhysParams(g=-1.0), 3)


class TestCoulomb:
    def test_sequence(self):
        s = gravitational_coulomb_spectrum(PhysParams(), M=math.sqrt(2), G_newton=1.0, n_max=3)
        assert np.allclose(s.energies, [-1, -1 / 4, -1 / 9], rtol=1e-14)
        assert list(s.n) == [1, 2, 3]
        assert s.energies[0] / s.energies[1] == pytest.approx(4)

    def test_rydberg_constant(self):
        s = gravitational_coulomb_spectrum(PhysParams(m_i=1.7, m_g=0.4), 3.0, 0.2, 40)
        en2 = s.energies * s.n ** 2
        assert np.allclose(en2, en2[0], rtol=1e-12, atol=0)
        assert np.all(np.diff(s.energies) > 0)

    def test_mass_powers(self):
        base = gravitational_coulomb_spectrum(PhysParams(), 1, 1, 5).energies
        assert np.allclose(gravitational_coulomb_spectrum(PhysParams(m_g=2), 1, 1, 5).energies,
                           4 * base, rtol=1e-12)
        assert np.allclose(gravitational_coulomb_spectrum(PhysParams(m_i=2), 1, 1, 5).energies,
                           2 * base, rtol=1e-12)

    def test_csv(self, tmp_path):
        s = Spectrum(((1, -0.5), (2, -0.125)))
        text = s.to_csv(["a = 1"])
        assert text == "# a = 1\nn,E_n\n1,-0.5\n2,-0.125\n"
        s.write_csv(tmp_path / "s.csv")
        assert (tmp_path / "s.csv").read_text().startswith("n,E_n\n")


class TestHarmonic:
    def test_hermite_functions_orthonormal(self):
        x = np.linspace(-15, 15, 3001)
        H = hermite_functions(20, x)
        gram = H @ H.T * (x[1] - x[0])
        assert np.allclose(gram, np.eye(21), atol=1e-10)

    def test_ground_state_positive(self):
        grid = GridSpec(-8, 8, 128, -8, 8, 128)
        W = harmonic_wigner_eigenstate(0, 1.0, PhysParams(), grid)
        assert W.values.min() > -1e-14

    @pytest.mark.parametrize("n,m,omega,hbar", [(1, 1.0, 1.0, 1.0), (3, 2.0, 0.5, 0.7), (6, 1.0, 1.0, 1.0)])
    def test_laguerre_closed_form(self, n, m, omega, hbar):
        params = PhysParams(m_i=m, hbar=hbar)
        grid = GridSpec(-16, 16, 256, -12, 12, 256)
        W = harmonic_wigner_eigenstate(n, omega, params, grid)
        zz, pp = grid.mesh()
        assert np.abs(W.values - laguerre_wigner(n, zz, pp, m, omega, hbar)).max() < 1e-8
        assert phase_space_overlap(W, W) == pytest.approx(1.0, abs=1e-8)

    def test_six_sign_changes(self):
        grid = GridSpec(-12, 12, 512, -12, 12, 256)
        W = harmonic_wigner_eigenstate(6, 1.0, PhysParams(), grid)
        m0 = np.argmin(np.abs(grid.p))
        cut = W.values[grid.z > 0, m0]
        cut = cut[np.abs(cut) > 1e-10]
        assert np.sum(np.diff(np.sign(cut)) != 0) == 6

    def test_limit(self):
        with pytest.raises(ValueError):
            harmonic_wigner_eigenstate(31, 1.0, PhysParams(), GridSpec(-8, 8, 64, -8, 8, 64))

    def test_wavefunction_scaling(self):
        params = PhysParams(m_i=2.0, hbar=0.5)
        from wignergrav.phasespace import PositionGrid
        g = PositionGrid(-10, 10, 512)
        psi = harmonic_wavefunction(2, 3.0, params, g)
        ell = math.sqrt(0.5 / 6.0)
        x = g.z / ell
        ref = (4 * x * x - 2) * np.exp(-x * x / 2) / math.sqrt(8 * math.sqrt(math.pi)) / math.sqrt(ell)
        assert np.abs(psi.values - ref).max() < 1e-12


class TestEigenResidual:
    def _ground(self, nz=256):
        grid = GridSpec(-8, 8, nz, -8, 8, nz)
        params = PhysParams()
        return params, grid, harmonic_wigner_eigenstate(0, 1.0, params, grid)

    def test_ground_state_residual_small(self):
        params, _, W = self._ground()
        V = PolynomialPotential((0, 0, 0.5))
        assert np.abs(phase_space_eigen_residual(W, 0.5, V, params).values).max() < 1e-4

    def test_converges_under_refinement(self):
        V = PolynomialPotential((0, 0, 0.5))
        r = []
        for nz in (64, 128):
            params, _, W = self._ground(nz)
            r.append(np.abs(phase_space_eigen_residual(W, 0.5, V, params).values).max())
        assert r[1] < r[0] / 8

    def test_excited_state(self):
        params = PhysParams(m_i=1.5, hbar=0.8)
        grid = GridSpec(-8, 8, 256, -8, 8, 256)
        W = harmonic_wigner_eigenstate(3, 1.2, params, grid)
        V = PolynomialPotential((0, 0, 0.5 * 1.5 * 1.2 ** 2))
        E = 0.8 * 1.2 * 3.5
        assert np.abs(phase_space_eigen_residual(W, E, V, params, accuracy=8).values).max() < 1e-4

    def test_linear_in_energy(self):
        params, _, W = self._ground()
        V = PolynomialPotential((0, 0, 0.5))
        a = phase_space_eigen_residual(W, 0.5, V, params).values
        b = phase_space_eigen_residual(W, 0.8, V, params).values
        assert np.allclose(b - a, -0.3 * W.values, rtol=0, atol=1e-14)

    def test_constant_potential_hbar_term(self):
        grid = GridSpec(-16, 16, 256, -8, 8, 256)
        from wignergrav.phasespace import GaussianState
        W = GaussianState(0, 1.0, 1.0).phase_space()
        from wignergrav.phasespace import RealField
        zz, pp = grid.mesh()
        Wf = RealField(grid, W(zz, pp))
        params = PhysParams(m_i=2.0)
        res = phase_space_eigen_residual(Wf, 0.7, PolynomialPotential((0.3,)), params, accuracy=8)
        z, p = sp.symbols("z p")
        Ws = sp.exp(-z ** 2 / 2 - 2 * (p - 1) ** 2) / sp.pi
        expr = (p ** 2 / 4 + sp.Rational(3, 10) - sp.Rational(7, 10)) * Ws - sp.diff(Ws, z, 2) / 16
        ref = sp.lambdify((z, p), expr, "numpy")(zz, pp)
        assert np.abs(res.values - ref).max() < 1e-6

    def test_quartic_even_terms(self):
        grid = GridSpec(-8, 8, 256, -8, 8, 256)
        from wignergrav.phasespace import GaussianState, RealField
        zz, pp = grid.mesh()
        Wf = RealField(grid, GaussianState(0, 0, 1.0).phase_space()(zz, pp))
        V = PolynomialPotential((0, 0, 0, 0, 0.1))
        res = phase_space_eigen_residual(Wf, 0.0, V, PhysParams(), accuracy=8)
        z, p = sp.symbols("z p")
        Ws = sp.exp(-z ** 2 / 2 - 2 * p ** 2) / sp.pi
        Vs = z ** 4 / 10
        expr = (p ** 2 / 2 + Vs) * Ws - sp.diff(Ws, z, 2) / 8
        expr += sum((-1) ** l * sp.Rational(1, 2) ** (2 * l) / sp.factorial(2 * l)
                    * sp.diff(Vs, z, 2 * l) * sp.diff(Ws, p, 2 * l) for l in (1, 2))
        ref = sp.lambdify((z, p), expr, "numpy")(zz, pp)
        assert np.abs(res.values - ref).max() < 1e-5
