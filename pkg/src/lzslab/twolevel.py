"""Non-Hermitian two-level Landau-Zener models.

The generic Hamiltonian is

    H(t) = (F t + i kappa) sigma_z + (m + i m') sigma_x + (n + i n') sigma_y

and the real-gap special case is H(t) = F t sigma_z + m sigma_x + i gamma sigma_y.
Matrices are plain ``numpy`` arrays of shape (2, 2); the diabatic basis is
(spin-up, spin-down).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, rgamma

from . import specfun
from .errors import DegeneracyError, DegenerateGap, DomainError, ExceptionalPointError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

DEGENERACY_REL = 1e-12
BOUNDARY_TOL = 1e-12
DEFAULT_ZA = 40.0


@dataclass(frozen=True)
class GenericLZParams:
    F: float
    m: float = 0.0
    n: float = 0.0
    m_prime: float = 0.0
    n_prime: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        vals = (self.F, self.m, self.n, self.m_prime, self.n_prime, self.kappa)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("parameters must be finite")
        if self.F <= 0:
            raise DomainError("sweep velocity F must be positive")

    @property
    def delta(self) -> float:
        return (self.m ** 2 - self.m_prime ** 2 + self.n ** 2 - self.n_prime ** 2) / (2 * self.F)

    @property
    def delta_prime(self) -> float:
        return (self.m * self.m_prime + self.n * self.n_prime) / self.F

    @property
    def order(self) -> complex:
        """Order p = -i delta + delta' of the parabolic cylinder functions."""
        return complex(self.delta_prime, -self.delta)

    @property
    def upper_coupling(self) -> complex:
        """H[0, 1] = (m + i m') - i (n + i n')."""
        return complex(self.m + self.n_prime, self.m_prime - self.n)

    @property
    def lower_coupling(self) -> complex:
        """H[1, 0] = (m + i m') + i (n + i n')."""
        return complex(self.m - self.n_prime, self.m_prime + self.n)

    @classmethod
    def from_adiabatic(cls, F: float, delta: float, delta_prime: float) -> "GenericLZParams":
        """Parameters with m = n' and m' = 0 realising a given (delta, delta').

        Needs delta > 0: then n = sqrt(2 F delta) and m = n' = F delta' / n.
        """
        if delta <= 0:
            raise DomainError("the m = n' family needs delta > 0")
        n = math.sqrt(2 * F * delta)
        m = F * delta_prime / n
        return cls(F=F, m=m, n=n, m_prime=0.0, n_prime=m)


@dataclass(frozen=True)
class RealGapLZParams:
    F: float
    m: float
    gamma: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.F, self.m, self.gamma)):
            raise DomainError("parameters must be finite")
        if self.F <= 0:
            raise DomainError("sweep velocity F must be positive")

    @property
    def delta(self) -> float:
        return (self.m ** 2 - self.gamma ** 2) / (2 * self.F)

    @property
    def pt_broken(self) -> bool:
        return abs(self.gamma) > abs(self.m)

    @property
    def p_lz(self) -> float:
        return math.exp(-2 * math.pi * self.delta)

    def as_generic(self) -> GenericLZParams:
        return GenericLZParams(F=self.F, m=self.m, n_prime=self.gamma)

    def check_exceptional(self):
        if abs(abs(self.m) - abs(self.gamma)) <= BOUNDARY_TOL * max(1.0, abs(self.m)):
            raise ExceptionalPointError(
                f"|m| == |gamma| ({self.m}, {self.gamma}): real-gap formulas are singular")


@dataclass(frozen=True)
class BandPopulations:
    p_minus_plus: float
    p_minus_minus: float
    p_plus_minus: float
    p_plus_plus: float

    def as_tuple(self):
        return (self.p_minus_plus, self.p_minus_minus, self.p_plus_minus, self.p_plus_plus)


# ---------------------------------------------------------------- Hamiltonians

def hamiltonian_at(params, t: float) -> np.ndarray:
    """H(t) for GenericLZParams or RealGapLZParams."""
    if isinstance(params, RealGapLZParams):
        params = params.as_generic()
    a = complex(params.F * t, params.kappa)
    return np.array([[a, params.upper_coupling],
                     [params.lower_coupling, -a]], dtype=complex)


def adiabatic_spectrum(h: np.ndarray):
    """(E_+, E_-) of a traceless 2x2 matrix, E_+ the principal sqrt of -det h."""
    a = 0.5 * (h[0, 0] - h[1, 1])
    e = cmath.sqrt(a * a + h[0, 1] * h[1, 0])
    return e, -e


def projectors(h: np.ndarray):
    """Biorthogonal spectral projectors (P_+, P_-) of a traceless 2x2 matrix.

    P_+ = |u^R_+><u^L_+| / <u^L_+|u^R_+> = (h + E_+) / (2 E_+).  The
    eigenvector normalisation vanishes together with E_+ for 2x2 traceless
    matrices, so degeneracy is detected on the eigenvalue.
    """
    h = np.asarray(h, dtype=complex)
    e, _ = adiabatic_spectrum(h)
    scale = max(float(np.max(np.abs(h))), np.finfo(float).tiny)
    if abs(e) <= DEGENERACY_REL * scale:
        raise DegeneracyError(f"eigenvalues coalesce (|E| = {abs(e):.3g})")
    p_plus = (h + e * IDENTITY) / (2 * e)
    return p_plus, IDENTITY - p_plus


def right_eigenvector(h: np.ndarray, band: str) -> np.ndarray:
    """Unit-norm right eigenvector of h for band 'upper' or 'lower'."""
    p_plus, p_minus = projectors(h)
    proj = p_plus if band == "upper" else p_minus
    if band not in ("upper", "lower"):
        raise ValueError("band must be 'upper' or 'lower'")
    # rank-one projector: its largest column spans the eigenspace
    col = proj[:, int(np.argmax(np.linalg.norm(proj, axis=0)))]
    return col / np.linalg.norm(col)


def populations_from_states(h: np.ndarray, psi) -> tuple:
    """(to_upper, to_lower) band weights ||P_+ psi||^2, ||P_- psi||^2."""
    p_plus, p_minus = projectors(h)
    return (float(np.linalg.norm(p_plus @ psi) ** 2),
            float(np.linalg.norm(p_minus @ psi) ** 2))


def populations_from_U(U: np.ndarray, h_i: np.ndarray, h_f: np.ndarray,
                       basis: str = "adiabatic") -> BandPopulations:
    """Band populations of an evolution matrix between two Hamiltonians.

    Adiabatic basis: start in the unit right eigenvector of h_i and weigh
    the biorthogonal projections at h_f.  Diabatic basis: squared moduli
    of U, with spin-up the lower band at early times.
    """
    if basis == "diabatic":
        return BandPopulations(float(abs(U[0, 0]) ** 2), float(abs(U[1, 0]) ** 2),
                               float(abs(U[1, 1]) ** 2), float(abs(U[0, 1]) ** 2))
    if basis != "adiabatic":
        raise ValueError("basis must be 'adiabatic' or 'diabatic'")
    psi_minus = U @ right_eigenvector(h_i, "lower")
    psi_plus = U @ right_eigenvector(h_i, "upper")
    mp, mm = populations_from_states(h_f, psi_minus)
    pp, pm = populations_from_states(h_f, psi_plus)
    return BandPopulations(mp, mm, pm, pp)


# ------------------------------------------------------- closed-form evolution

def _fresnel_phase_integral(F: float, t_i: float, t_f: float) -> complex:
    """int_{t_i}^{t_f} exp(i F s^2) ds via the error function."""
    rot = cmath.exp(-1j * math.pi / 4) * math.sqrt(F)
    return (cmath.exp(1j * math.pi / 4) / math.sqrt(F) * math.sqrt(math.pi) / 2
            * (complex(erf(rot * t_f)) - complex(erf(rot * t_i))))


def _triangular_evolution(params: GenericLZParams, t_i: float, t_f: float) -> np.ndarray:
    """Exact U when one of the two couplings vanishes (delta + i delta' = 0)."""
    F = params.F
    b, c = params.upper_coupling, params.lower_coupling
    u11 = cmath.exp(-0.5j * F * (t_f ** 2 - t_i ** 2))
    u22 = u11.conjugate()
    g = _fresnel_phase_integral(F, t_i, t_f)
    u12 = -1j * b * cmath.exp(-0.5j * F * (t_f ** 2 + t_i ** 2)) * g if b != 0 else 0j
    u21 = -1j * c * cmath.exp(0.5j * F * (t_f ** 2 + t_i ** 2)) * g.conjugate() if c != 0 else 0j
    return np.array([[u11, u12], [u21, u22]], dtype=complex)


def coupling_ratio(params: GenericLZParams) -> complex:
    """C_AB linking the coefficients of the two components (A_+- = +-C_AB B_+-)."""
    dd = complex(params.delta, params.delta_prime)
    return params.upper_coupling / (math.sqrt(2 * params.F) * dd) * cmath.exp(-1j * math.pi / 4)


def wronskian_constant(p: complex) -> complex:
    """D_p(z) D_{p-1}(-z) + D_p(-z) D_{p-1}(z), independent of z."""
    return specfun.SQRT_2PI * complex(rgamma(1 - p))


def closed_form_evolution(params: GenericLZParams, t_i: float, t_f: float,
                          crossover: float = specfun.CROSSOVER_RADIUS) -> np.ndarray:
    """U(t_f, t_i) from parabolic cylinder functions (kappa = 0 only).

    With tau = e^{i pi/4} sqrt(2F) t and p = -i delta + delta',

        U11 = [D_p(tf) D_{p-1}(-ti) + D_p(-tf) D_{p-1}(ti)] / W
        U12 = [D_p(tf) D_p(-ti) - D_p(-tf) D_p(ti)] C_AB / W
        U21 = [D_{p-1}(tf) D_{p-1}(-ti) - D_{p-1}(-tf) D_{p-1}(ti)] / (C_AB W)
        U22 = [D_p(-ti) D_{p-1}(tf) + D_p(ti) D_{p-1}(-tf)] / W

    where W is the same bilinear combination evaluated at tau_i.  When
    delta + i delta' = 0 one coupling vanishes and the triangular problem is
    solved with Fresnel integrals instead.
    """
    if params.kappa != 0:
        raise DomainError("closed form requires kappa = 0; use the propagator")
    if t_f < t_i:
        raise DomainError("closed form expects t_i <= t_f")
    b, c = params.upper_coupling, params.lower_coupling
    if b == 0 and c == 0:
        raise DegenerateGap("both couplings vanish; use diabatic_evolution")
    if t_f == t_i:
        return IDENTITY.copy()
    if b * c == 0:
        return _triangular_evolution(params, t_i, t_f)

    p = params.order
    w = math.sqrt(2 * params.F) * cmath.exp(1j * math.pi / 4)
    ti, tf = w * t_i, w * t_f

    def d(order, z):
        return specfun.pcf(order, z, crossover).value

    dp_ti, dp_mti = d(p, ti), d(p, -ti)
    dq_ti, dq_mti = d(p - 1, ti), d(p - 1, -ti)
    dp_tf, dp_mtf = d(p, tf), d(p, -tf)
    dq_tf, dq_mtf = d(p - 1, tf), d(p - 1, -tf)

    wr = dp_ti * dq_mti + dp_mti * dq_ti
    if abs(wr) <= 1e-14 * max(abs(dp_ti * dq_mti), abs(dp_mti * dq_ti), 1e-300):
        raise DegeneracyError(
            f"D_p(z) and D_p(-z) are dependent at p = {p} (non-negative integer order)")
    cab = coupling_ratio(params)
    u11 = (dp_tf * dq_mti + dp_mtf * dq_ti) / wr
    u12 = (dp_tf * dp_mti - dp_mtf * dp_ti) / wr * cab
    u21 = (dq_tf * dq_mti - dq_mtf * dq_ti) / wr / cab
    u22 = (dp_mti * dq_tf + dp_ti * dq_mtf) / wr
    return np.array([[u11, u12], [u21, u22]], dtype=complex)


def diabatic_evolution(params: GenericLZParams, t_i: float, t_f: float) -> np.ndarray:
    """U for vanishing couplings: pure diagonal phases (and kappa gain)."""
    if params.upper_coupling != 0 or params.lower_coupling != 0:
        raise DomainError("couplings are nonzero")
    ph = -1j * (0.5 * params.F * (t_f ** 2 - t_i ** 2) + 1j * params.kappa * (t_f - t_i))
    return np.diag([cmath.exp(ph), cmath.exp(-ph)])


def band_populations(params: GenericLZParams, T: float, basis: str = "adiabatic",
                     initial_band: str | None = None):
    """Band populations after evolving from -T to T with the closed form.

    Returns a BandPopulations, or (to_upper, to_lower) for a single
    ``initial_band``.
    """
    if T <= 0:
        raise DomainError("T must be positive")
    U = closed_form_evolution(params, -T, T)
    pops = populations_from_U(U, hamiltonian_at(params, -T), hamiltonian_at(params, T), basis)
    if initial_band is None:
        return pops
    if initial_band == "lower":
        return pops.p_minus_plus, pops.p_minus_minus
    if initial_band == "upper":
        return pops.p_plus_plus, pops.p_plus_minus
    raise ValueError("initial_band must be 'lower', 'upper' or None")


# ------------------------------------------------ asymptotic classification

@dataclass(frozen=True)
class AsymptoticBranch:
    """Large-T behaviour of one band population.

    ``kind`` is 'constant' (value), 'power_law' (P ~ T**exponent) or
    'marginal' (value plus an optional oscillating part).
    """
    kind: str
    value: float | None = None
    exponent: float | None = None
    amplitude: float = 0.0
    phase_offset: float = 0.0
    note: str = ""

    def oscillation(self, delta: float, z_a) -> np.ndarray:
        """amplitude * sin(2 Phi(z_a) - phase_offset), Phi = z_a^2/2 + delta ln(sqrt2 z_a).

        The sign is fixed by the exact evolution (see the test-suite); the
        opposite sign is a half-period out of step with it in both bases.
        """
        z_a = np.asarray(z_a, dtype=float)
        phi = z_a ** 2 / 2 + delta * np.log(math.sqrt(2) * z_a)
        return self.amplitude * np.sin(2 * phi - self.phase_offset)

    def evaluate(self, delta: float, z_a):
        """Predicted population for the constant and marginal branches."""
        if self.kind == "power_law":
            raise ValueError("power-law branch has no finite limit")
        return self.value + self.oscillation(delta, z_a)


@dataclass(frozen=True)
class AsymptoticClassification:
    basis: str
    delta: float
    delta_prime: float
    p_minus_plus: AsymptoticBranch
    p_minus_minus: AsymptoticBranch
    flags: tuple = field(default_factory=tuple)


def _near(x: float, target: float) -> bool:
    return abs(x - target) <= BOUNDARY_TOL


def _g0(params: GenericLZParams) -> float:
    m, n, mp, np_ = params.m, params.n, params.m_prime, params.n_prime
    return (m * m + n * n - mp * mp - np_ * np_) / ((m + np_) ** 2 + (mp - n) ** 2)


def _g1(params: GenericLZParams) -> float:
    m, n, mp, np_ = params.m, params.n, params.m_prime, params.n_prime
    return ((mp + n) ** 2 + (m - np_) ** 2) / (m * m + n * n - mp * mp - np_ * np_)


def asymptotic_band_populations(delta: float, delta_prime: float,
                                params: GenericLZParams | None = None,
                                basis: str = "adiabatic") -> AsymptoticClassification:
    """Classify the large-T behaviour of P_{-+} and P_{--}.

    Adiabatic basis thresholds sit at |delta'| = 3/2 and |delta' - 3/2| = 3/2,
    diabatic ones at |delta'| = 1/2 and |delta' - 1/2| = 1/2.  Boundary
    branches are chosen only within ``BOUNDARY_TOL``.  ``params`` supplies the
    g constants of the marginal P_{--} branch.
    """
    plz = math.exp(-2 * math.pi * delta)
    flags = []
    if basis == "adiabatic":
        edge_mp, centre, slope_shift = 1.5, 1.5, 6.0
    elif basis == "diabatic":
        edge_mp, centre, slope_shift = 0.5, 0.5, 2.0
    else:
        raise ValueError("basis must be 'adiabatic' or 'diabatic'")

    a = abs(delta_prime)
    if _near(a, edge_mp):
        if basis == "adiabatic":
            q = delta * delta + 0.25
            f0 = (1 + plz) / q + plz
            amp = 2 * math.exp(-math.pi * delta) * math.sqrt((1 + plz) / q)
            off = specfun.arg_gamma(complex(-0.5, delta))
        else:
            f0 = 1 + 2 * plz
            amp = 2 * math.exp(-math.pi * delta) * math.sqrt(1 + plz)
            off = specfun.arg_gamma(complex(0.5, delta))
        mp_branch = AsymptoticBranch("marginal", value=f0, amplitude=amp, phase_offset=off)
    elif a < edge_mp:
        mp_branch = AsymptoticBranch("constant", value=plz)
    else:
        mp_branch = AsymptoticBranch("power_law", exponent=4 * a - slope_shift)

    b = abs(delta_prime - centre)
    if _near(b, centre):
        endpoint = 0.0 if _near(delta_prime, 0.0) else 2 * centre
        value = None
        if params is None:
            flags.append("marginal P_{--} constant needs the full parameter set")
        else:
            g0 = _g0(params)
            if endpoint == 0.0:
                g = g0
            elif basis == "adiabatic":
                d2 = delta * delta
                g = (d2 + 9) / (d2 * (d2 + 1) * (d2 + 4)) * g0
            else:
                g = _g1(params)
            value = g * (1 - plz)
        mm_branch = AsymptoticBranch("marginal", value=value,
                                     note=f"delta' = {endpoint:g} endpoint")
    elif b < centre:
        mm_branch = AsymptoticBranch("constant", value=0.0)
    else:
        mm_branch = AsymptoticBranch("power_law", exponent=4 * b - slope_shift)
    return AsymptoticClassification(basis, delta, delta_prime, mp_branch, mm_branch, tuple(flags))


# ------------------------------------------------------ real-gap asymptotics

def stokes_phase(delta: float) -> float:
    """pi/4 + delta (ln|delta| - 1) - arg Gamma(1 + i delta); pi/4 at delta = 0."""
    if delta == 0:
        return math.pi / 4
    return (math.pi / 4 + delta * (math.log(abs(delta)) - 1)
            - specfun.arg_gamma(complex(1.0, delta)))


def _radicand(ratio: float, plz: float) -> float:
    # ratio and (1 - P_LZ) always share a sign; clip rounding below zero
    return max(0.0, ratio * (1 - plz))


def real_gap_asymptotic_U(params: RealGapLZParams) -> np.ndarray:
    """Large-T evolution matrix of the real-gap model without dynamical phase."""
    params.check_exceptional()
    m, g = params.m, params.gamma
    delta = params.delta
    plz = params.p_lz
    phi = stokes_phase(delta)
    diag = math.exp(-math.pi * delta)
    u12 = (math.copysign(1.0, m + g) * math.sqrt(_radicand((m + g) / (m - g), plz))
           * cmath.exp(-1j * phi))
    u21 = (math.copysign(1.0, g - m) * math.sqrt(_radicand((m - g) / (m + g), plz))
           * cmath.exp(1j * phi))
    return np.array([[diag, u12], [u21, diag]], dtype=complex)


def real_gap_populations(params: RealGapLZParams) -> BandPopulations:
    params.check_exceptional()
    m, g = params.m, params.gamma
    plz = params.p_lz
    return BandPopulations(plz, (m - g) / (m + g) * (1 - plz), plz, (m + g) / (m - g) * (1 - plz))


def adiabatic_phase_integral(params: RealGapLZParams, t_a: float, t_b: float) -> float:
    """int_{t_a}^{t_b} Re sqrt(F^2 t^2 + m^2 - gamma^2) dt in closed form."""
    F = params.F
    gap2 = params.m ** 2 - params.gamma ** 2

    def prim(t):
        # antiderivative of Re E_+ on t >= 0, zero at t = 0
        if gap2 > 0:
            return 0.5 * t * math.sqrt(F * F * t * t + gap2) + gap2 / (2 * F) * math.asinh(
                F * t / math.sqrt(gap2))
        if gap2 == 0:
            return 0.5 * F * t * t
        t0 = math.sqrt(-gap2) / F
        if t <= t0:
            return 0.0
        return 0.5 * t * math.sqrt(F * F * t * t + gap2) + gap2 / (2 * F) * math.acosh(F * t / math.sqrt(-gap2))

    def signed(t):
        return math.copysign(prim(abs(t)), t)

    return signed(t_b) - signed(t_a)


def _dominant_unit(v: np.ndarray) -> np.ndarray:
    return v / v[int(np.argmax(np.abs(v)))]


def adiabatic_frame(U: np.ndarray, h_i: np.ndarray, h_f: np.ndarray) -> np.ndarray:
    """Express U in the instantaneous eigenbases at the two end times.

    Columns are (lower, upper) at the start and rows (upper, lower) at the
    end, matching the diabatic labelling of a single upward crossing.
    Eigenvectors are scaled so their dominant component equals one; they
    tend to the diabatic basis far from the crossing.
    """
    v_i = np.column_stack([_dominant_unit(right_eigenvector(h_i, "lower")),
                           _dominant_unit(right_eigenvector(h_i, "upper"))])
    v_f = np.column_stack([_dominant_unit(right_eigenvector(h_f, "upper")),
                           _dominant_unit(right_eigenvector(h_f, "lower"))])
    return np.linalg.solve(v_f, U @ v_i)


def strip_dynamical_phase(U: np.ndarray, params: RealGapLZParams, t_i: float,
                          t_f: float) -> np.ndarray:
    """Remove the adiabatic phases accumulated away from the crossing at t = 0.

    Spin-up is the lower band before the crossing and the upper band after
    it, so U = diag(e^{-i Tf}, e^{i Tf}) U_core diag(e^{i Ti}, e^{-i Ti}) with
    Tf = int_0^{t_f} Re E_+ and Ti = int_{t_i}^0 Re E_+.
    """
    th_f = adiabatic_phase_integral(params, 0.0, t_f)
    th_i = adiabatic_phase_integral(params, t_i, 0.0)
    left = np.diag([cmath.exp(1j * th_f), cmath.exp(-1j * th_f)])
    right = np.diag([cmath.exp(-1j * th_i), cmath.exp(1j * th_i)])
    return left @ U @ right


def lz_transition_time(params_or_delta) -> float:
    """tau_LZ = |1 - P_LZ| / (sqrt(2 delta (1 - P_LZ)) cos chi(delta)).

    chi(delta) = pi/4 - arg Gamma(1/2 + i delta/2) - arg Gamma(1 - i delta/2);
    the delta -> 0 limit sqrt(2 pi) is returned for |delta| < 1e-8.
    """
    if isinstance(params_or_delta, RealGapLZParams):
        delta = params_or_delta.delta
    else:
        delta = float(params_or_delta)
    if not math.isfinite(delta):
        raise DomainError("delta must be finite")
    if abs(delta) < 1e-8:
        return math.sqrt(2 * math.pi)
    one_minus = -math.expm1(-2 * math.pi * delta)
    chi = (math.pi / 4 - specfun.arg_gamma(complex(0.5, delta / 2))
           - specfun.arg_gamma(complex(1.0, -delta / 2)))
    return abs(one_minus) / (math.sqrt(2 * delta * one_minus) * math.cos(chi))


def transition_time_limit(delta: float) -> float:
    """Leading behaviour of tau_LZ for delta << -1, |delta| << 1 and delta >> 1."""
    if delta <= -1:
        return math.exp(-math.pi * delta) / math.sqrt(-2 * delta)
    if delta >= 1:
        return 2 * math.sqrt(2 * delta)
    return math.sqrt(2 * math.pi)
