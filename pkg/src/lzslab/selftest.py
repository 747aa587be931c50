"""Invariant suite shared by ``lzslab selftest`` and the test-suite.

Every check is deterministic (fixed parameter grids) and reports the
measured residual next to its tolerance.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import specfun
from .propagator import IntegratorConfig, fundamental_matrix
from .ssh import SSHParams, bloch_hamiltonian
from .twolevel import (IDENTITY, GenericLZParams, RealGapLZParams, adiabatic_spectrum,
                       closed_form_evolution, hamiltonian_at, projectors)
from .waveguide import WaveguideConfig, init_gaussian, propagate


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    seconds: float

    def as_dict(self) -> dict:
        return asdict(self)


# fixed sample of couplings (m, n, m', n') with |delta|, |delta'| moderate
_COUPLINGS = [
    (0.75, 0.0, 0.0, 0.0),
    (0.5, 0.2, 0.1, 0.3),
    (0.3, -0.4, 0.2, -0.1),
    (0.9, 0.1, -0.3, 0.6),
    (0.2, 0.5, 0.4, 0.2),
]


def _generic(m, n, mp, np_, F=1.0):
    return GenericLZParams(F=F, m=m, n=n, m_prime=mp, n_prime=np_)


def check_determinant() -> float:
    worst = 0.0
    for c in _COUPLINGS:
        U = closed_form_evolution(_generic(*c), -40.0, 40.0)
        worst = max(worst, abs(np.linalg.det(U) - 1))
    return worst


def check_hermitian_unitarity() -> float:
    worst = 0.0
    for m, n in [(0.3, 0.0), (0.5, 0.4), (1.0, -0.2)]:
        U = closed_form_evolution(_generic(m, n, 0.0, 0.0), -40.0, 40.0)
        worst = max(worst, np.abs(U @ U.conj().T - IDENTITY).max())
    return worst


def check_pt_spectrum() -> float:
    """E^2 is real for PT-symmetric Hamiltonians (real or conjugate-pair spectra)."""
    worst = 0.0
    for m, g in [(0.2, 0.1), (0.2, 0.3), (0.4, 0.4 - 1e-3)]:
        p = RealGapLZParams(F=0.02, m=m, gamma=g).as_generic()
        for t in np.linspace(-30, 30, 13):
            e_plus, e_minus = adiabatic_spectrum(hamiltonian_at(p, t))
            worst = max(worst, abs((e_plus ** 2).imag), abs(e_plus + e_minus))
    sp = SSHParams(J=1.0, alpha=0.1, gamma=0.3)
    for kd in np.linspace(0, 2 * math.pi, 17):
        e_plus, _ = adiabatic_spectrum(bloch_hamiltonian(sp, kd))
        worst = max(worst, abs((e_plus ** 2).imag))
    return worst


def check_projectors() -> float:
    worst = 0.0
    mats = [0.2 * np.array([[0, 1], [1, 0]]) + 0.1j * np.array([[0, -1j], [1j, 0]]),
            np.array([[0.3 + 0.1j, 0.5 - 0.2j], [0.1 + 0.4j, -0.3 - 0.1j]]),
            np.array([[1j * 0.1, 0.4], [0.4, -1j * 0.1]])]
    for h in mats:
        h = np.asarray(h, dtype=complex)
        pp, pm = projectors(h)
        e_plus, e_minus = adiabatic_spectrum(h)
        worst = max(worst,
                    np.abs(pp @ pp - pp).max(), np.abs(pm @ pm - pm).max(),
                    np.abs(pp + pm - IDENTITY).max(),
                    np.abs(e_plus * pp + e_minus * pm - h).max() / np.abs(h).max())
    return worst


_PCF_POINTS = [(0.5, 1.2), (-1.3 + 0.7j, 2.0 - 1.0j), (2.2 - 0.4j, -1.5 + 0.5j),
               (-0.5 - 0.28125j, 3.0 * np.exp(0.25j * np.pi)), (0.3 + 1.0j, 4.0j)]


def check_pcf_recurrence() -> float:
    """D_{p+1} - z D_p + p D_{p-1} = 0, relative to the largest term."""
    worst = 0.0
    for p, z in _PCF_POINTS:
        a = specfun.pcf_value(p + 1, z)
        b = z * specfun.pcf_value(p, z)
        c = p * specfun.pcf_value(p - 1, z)
        worst = max(worst, abs(a - b + c) / max(abs(a), abs(b), abs(c)))
    return worst


def check_pcf_derivative() -> float:
    """D_p'(z) = z D_p/2 - D_{p+1}, against a five-point difference."""
    worst = 0.0
    h = 1e-3
    for p, z in _PCF_POINTS:
        f = [specfun.pcf_value(p, z + k * h) for k in (-2, -1, 1, 2)]
        num = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        exact = z / 2 * specfun.pcf_value(p, z) - specfun.pcf_value(p + 1, z)
        worst = max(worst, abs(num - exact) / max(abs(exact), abs(num)))
    return worst


def check_gaussian_norm() -> float:
    worst = 0.0
    for l in (4.0, 6.0, 8.0, 12.0):
        cfg = WaveguideConfig(SSHParams(N=240, E_field=0.0), x0=120.0, l=l, z_max=1.0,
                              check_margins=False)
        worst = max(worst, abs(float(np.sum(init_gaussian(cfg).intensity)) - 1))
    return worst


def check_closed_form_vs_ode() -> float:
    p = _generic(0.75, 0.0, 0.0, 0.0)
    U = closed_form_evolution(p, -40.0, 40.0)
    traj = fundamental_matrix(lambda t: hamiltonian_at(p, t), -40.0, 40.0,
                              IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13))
    return float(np.abs(traj.final - U).max() / max(1.0, np.abs(U).max()))


def check_hermitian_intensity() -> float:
    sp = SSHParams(J=1.0, alpha=0.1, gamma=0.0, E_field=0.0, N=160)
    cfg = WaveguideConfig(sp, x0=80.0, l=8.0, z_max=20.0, sample_every=5.0)
    states = propagate(cfg)
    norms = [float(np.sum(s.intensity)) for s in states]
    return max(abs(n - norms[0]) for n in norms)


QUICK = [
    ("determinant-1 evolution", check_determinant, 1e-8),
    ("Hermitian-limit unitarity", check_hermitian_unitarity, 1e-8),
    ("PT spectrum symmetry", check_pt_spectrum, 1e-10),
    ("projector algebra", check_projectors, 1e-12),
    ("PCF recurrence", check_pcf_recurrence, 1e-10),
    ("PCF derivative", check_pcf_derivative, 1e-8),
    ("Gaussian normalisation", check_gaussian_norm, 1e-3),
]
FULL = QUICK + [
    ("closed form vs ODE", check_closed_form_vs_ode, 1e-6),
    ("Hermitian intensity conservation", check_hermitian_intensity, 1e-8),
]


def run_suite(quick: bool = False) -> list:
    results = []
    for name, func, tol in (QUICK if quick else FULL):
        t0 = time.perf_counter()
        try:
            res = float(func())
            ok = bool(res <= tol)
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            res, ok = float("nan"), False
            name = f"{name} ({type(exc).__name__}: {exc})"
        results.append(CheckResult(name, ok, res, tol, time.perf_counter() - t0))
    return results
