"""Gain-and-loss SSH chain in a uniform field.

Bloch Hamiltonian (field in the hopping phase, theta = k d + E t):

    h(k, t) = 2J cos(theta) sigma_x - 2 alpha J sin(theta) sigma_y + i gamma sigma_z

with J_1,2 = J (1 +- alpha).  The two avoided crossings at theta = pi/2 and
3 pi/2 are LZ crossings with F = 2 J E, m = 2 alpha J and the same gamma; the
second one carries the opposite gap sign (case i).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .lzs import (LZSCase, LZSResult, LZSSetup, adiabatic_phase, analytic_populations,
                  compose, total_phase)
from .propagator import IntegratorConfig, Trajectory, band_project, integrate
from .twolevel import (SIGMA_X, SIGMA_Y, SIGMA_Z, BandPopulations, RealGapLZParams,
                       right_eigenvector)


@dataclass(frozen=True)
class SSHParams:
    J: float = 1.0
    alpha: float = 0.1
    gamma: float = 0.1
    E_field: float = 0.01
    d: float = 1.0
    N: int = 240  # number of lattice sites for real-space builders

    def __post_init__(self):
        vals = (self.J, self.alpha, self.gamma, self.E_field, self.d)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("SSH parameters must be finite")
        if self.J <= 0:
            raise DomainError("J must be positive")
        if self.d <= 0:
            raise DomainError("lattice spacing d must be positive")
        if int(self.N) != self.N or self.N < 2:
            raise DomainError("N must be an integer >= 2")
        object.__setattr__(self, "N", int(self.N))

    @property
    def J1(self) -> float:
        return self.J * (1 + self.alpha)

    @property
    def J2(self) -> float:
        return self.J * (1 - self.alpha)

    @property
    def F(self) -> float:
        return 2 * self.J * self.E_field

    @property
    def m(self) -> float:
        return 2 * self.alpha * self.J

    @property
    def delta(self) -> float:
        return (self.m ** 2 - self.gamma ** 2) / (2 * self.F)

    @property
    def period(self) -> float:
        """Bloch period 2 pi / E (in units where the phase is k d + E t)."""
        return 2 * math.pi / self.E_field

    def with_field(self, E_field: float) -> "SSHParams":
        return SSHParams(self.J, self.alpha, self.gamma, E_field, self.d, self.N)


def _theta(params: SSHParams, k: float, t: float) -> float:
    return k * params.d + params.E_field * t


def bloch_hamiltonian(params: SSHParams, k: float, t: float = 0.0) -> np.ndarray:
    th = _theta(params, k, t)
    return (2 * params.J * math.cos(th) * SIGMA_X
            - 2 * params.alpha * params.J * math.sin(th) * SIGMA_Y
            + 1j * params.gamma * SIGMA_Z)


def bloch_generator(params: SSHParams, k: float = 0.0):
    """Fast t -> h(k, t) closure for the propagator."""
    J, aJ, g, d, E = params.J, params.alpha * params.J, params.gamma, params.d, params.E_field
    kd = k * d

    def h(t):
        th = kd + E * t
        c, s = 2 * J * math.cos(th), 2 * aJ * math.sin(th)
        return np.array([[1j * g, c + 1j * s], [c - 1j * s, -1j * g]])
    return h


def dispersion_radicand(params: SSHParams, kd):
    """4J^2 cos^2(kd) + 4 alpha^2 J^2 sin^2(kd) - gamma^2."""
    kd = np.asarray(kd, dtype=float)
    J, a, g = params.J, params.alpha, params.gamma
    return 4 * J * J * np.cos(kd) ** 2 + 4 * a * a * J * J * np.sin(kd) ** 2 - g * g


def band_spectrum(params: SSHParams, k):
    """(E_+, E_-) of the field-free bands; imaginary on PT-broken arcs."""
    rad = dispersion_radicand(params, np.asarray(k, dtype=float) * params.d)
    e = np.sqrt(rad.astype(complex))
    if e.ndim == 0:
        return complex(e), -complex(e)
    return e, -e


def band_structure_table(params: SSHParams, n_k: int = 201):
    """Band data on kd in [0, pi] (the folded zone used for plotting)."""
    kd = np.linspace(0.0, math.pi, n_k)
    e, _ = band_spectrum(params, kd / params.d)
    return kd, e


def exceptional_points(params: SSHParams) -> list:
    """Quasimomenta k in [0, 2 pi/d) where the radicand vanishes."""
    J, a, g = params.J, params.alpha, params.gamma
    lo = 4 * a * a * J * J - g * g
    if lo > 0:
        return []
    tol = 1e-12 * max(1.0, g * g)
    if abs(lo) <= tol:
        return [math.pi / 2 / params.d, 3 * math.pi / 2 / params.d]
    if 4 * J * J - g * g < 0:
        # spectrum imaginary for every k: no isolated band touchings
        return []
    f = lambda x: float(dispersion_radicand(params, x))
    roots = []
    for centre in (math.pi / 2, 3 * math.pi / 2):
        roots.append(brentq(f, centre - math.pi / 2, centre, xtol=1e-15))
        roots.append(brentq(f, centre, centre + math.pi / 2, xtol=1e-15))
    return [r / params.d for r in sorted(roots)]


@dataclass(frozen=True)
class LocalExpansion:
    lz_params: RealGapLZParams
    case: LZSCase
    t1: float
    t2: float


def local_expansion(params: SSHParams, crossing: str = "first") -> LocalExpansion:
    """LZ parameters of the two crossings met from k = 0.

    Both crossings share F = 2 J E, m = 2 alpha J and gamma; the pair is
    case i.  ``crossing`` only selects which local gap sign is reported in
    ``lz_params.m`` (+m at the first, -m at the second).
    """
    if params.E_field <= 0:
        raise DomainError("the field must be positive")
    t1 = math.pi / (2 * params.E_field)
    t2 = 3 * math.pi / (2 * params.E_field)
    sign = 1.0 if crossing == "first" else -1.0
    if crossing not in ("first", "second"):
        raise DomainError("crossing must be 'first' or 'second'")
    lz = RealGapLZParams(F=params.F, m=sign * params.m, gamma=params.gamma)
    return LocalExpansion(lz, LZSCase.CASE_I, t1, t2)


def lzs_setup(params: SSHParams, k: float = 0.0) -> LZSSetup:
    loc = local_expansion(params, "first")

    def disp(t):
        e, _ = band_spectrum(params, k + params.E_field * t / params.d)
        return e, -e
    return LZSSetup(loc.lz_params, loc.t1, loc.t2, LZSCase.CASE_I, dispersion=disp)


def lzs_prediction(params: SSHParams) -> BandPopulations:
    """Adiabatic-impulse populations after one Bloch period from k = 0."""
    setup = lzs_setup(params)
    phi_p, phi_m = adiabatic_phase(setup)
    lz = setup.local_params
    return analytic_populations(lz, total_phase(phi_p, phi_m, lz.delta), LZSCase.CASE_I)


def lzs_result(params: SSHParams) -> LZSResult:
    """Composed cycle matrix for the SSH realisation (phi_t includes the pi)."""
    return compose(lzs_setup(params))


def bloch_oscillation(params: SSHParams, k0: float = 0.0, band0: str = "lower",
                      t_f: float | None = None, cfg: IntegratorConfig | None = None,
                      n_samples: int | None = 2000) -> Trajectory:
    """Evolve the band0 eigenvector of h(k0, 0) and attach band populations.

    Samples ``n_samples`` dense points per Bloch period (None stores only
    the end points).
    """
    if t_f is None:
        t_f = params.period
    h = bloch_generator(params, k0)
    psi0 = right_eigenvector(h(0.0), band0)
    t_eval = None
    if n_samples:
        n = max(2, int(round(n_samples * t_f / params.period)) + 1)
        t_eval = np.linspace(0.0, t_f, n)
    traj = integrate(h, psi0, 0.0, t_f, cfg, t_eval=t_eval)
    return band_project(traj, h)


def period_populations(params: SSHParams, k0: float = 0.0,
                       cfg: IntegratorConfig | None = None) -> BandPopulations:
    """Numerical band populations after one Bloch period for both start bands."""
    h = bloch_generator(params, k0)
    h0 = h(0.0)
    psi0 = np.column_stack([right_eigenvector(h0, "lower"), right_eigenvector(h0, "upper")])
    traj = integrate(h, psi0, 0.0, params.period, cfg)
    traj.times, traj.states = traj.times[-1:], traj.states[-1:]
    return band_project(traj, h).populations[-1]


# ----------------------------------------------------------- real space

def site_positions(n_sites: int, d: float = 1.0) -> np.ndarray:
    return np.arange(n_sites) * d


def bond_couplings(params: SSHParams, n_sites: int) -> np.ndarray:
    """Coupling of bond (j, j+1): J1 from an even site, J2 from an odd one."""
    j = np.arange(n_sites - 1)
    return np.where(j % 2 == 0, params.J1, params.J2)


def onsite_gain(params: SSHParams, n_sites: int) -> np.ndarray:
    """+i gamma on even sites (sublattice 1), -i gamma on odd sites."""
    return 1j * params.gamma * np.where(np.arange(n_sites) % 2 == 0, 1.0, -1.0)


def real_space_hamiltonian(params: SSHParams, t: float, gauge: str = "hopping",
                           periodic: bool = False) -> np.ndarray:
    """Dense N-site Hamiltonian of the chain at time t.

    gauge='length': static hoppings plus the potential -E x on each site.
    gauge='hopping': the potential is removed by exp(-i E t X), leaving the
    phase exp(i E t d) on every hop towards +x.  Periodic closure is only
    allowed in the hopping gauge, where translation symmetry holds.
    """
    n = params.N
    if periodic and n % 2:
        raise DomainError("a periodic chain needs an even number of sites")
    x = site_positions(n, params.d)
    bonds = bond_couplings(params, n)
    H = np.diag(onsite_gain(params, n))
    if gauge == "length":
        if periodic:
            raise DomainError("the length gauge has no periodic closure")
        H = H + np.diag(-params.E_field * x)
        phase = 1.0
    elif gauge == "hopping":
        phase = np.exp(1j * params.E_field * t * params.d)
    else:
        raise DomainError("gauge must be 'length' or 'hopping'")
    idx = np.arange(n - 1)
    H[idx, idx + 1] = bonds * phase
    H[idx + 1, idx] = bonds * np.conj(phase)
    if periodic:
        # last site (sublattice 2) couples to site 0 of the next cell with J2
        H[n - 1, 0] = params.J2 * phase
        H[0, n - 1] = params.J2 * np.conj(phase)
    return H


def gauge_transform(params: SSHParams, t: float, psi: np.ndarray) -> np.ndarray:
    """Map a hopping-gauge state to the length gauge: psi -> exp(i E t X) psi."""
    x = site_positions(len(psi), params.d)
    return np.exp(1j * params.E_field * t * x) * psi


def bloch_state(params: SSHParams, k: float, spinor: np.ndarray) -> np.ndarray:
    """Plane wave u_s exp(i k x_j) on the N sites, with the spinor's norm."""
    n = params.N
    x = site_positions(n, params.d)
    amp = np.where(np.arange(n) % 2 == 0, spinor[0], spinor[1])
    psi = amp * np.exp(1j * k * x)
    return psi / np.linalg.norm(psi) * np.linalg.norm(spinor)


def bloch_component(params: SSHParams, k: float, psi: np.ndarray) -> np.ndarray:
    """Sublattice spinor of momentum k contained in a real-space state."""
    n = len(psi)
    x = site_positions(n, params.d)
    w = psi * np.exp(-1j * k * x)
    spin = np.array([w[0::2].sum(), w[1::2].sum()])
    return spin / math.sqrt(n // 2)
