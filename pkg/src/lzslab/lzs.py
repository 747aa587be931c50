"""Adiabatic-impulse model of two successive non-Hermitian LZ crossings.

The evolution over one interferometer cycle is U_A = I_2 A I_1 in the
adiabatic basis ordered (upper, lower).  I_1 and I_2 are the impulse
matrices at the two crossings, built from the large-T real-gap evolution
matrix, and A = diag(exp(-i phi_d+), exp(-i phi_d-)) carries the dynamical
phases accumulated in between.  The second crossing has local Hamiltonian
-F(t - t2) sigma_z + s_m m sigma_x + i s_g gamma sigma_y; the four sign pairs
(s_m, s_g) are the four cases.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import DomainError, QuadratureFailure
from .twolevel import BandPopulations, RealGapLZParams, real_gap_asymptotic_U, stokes_phase

QUAD_ABS_TOL = 1e-8


class LZSCase(enum.Enum):
    """Signs (of m, of gamma) in the local Hamiltonian at the second crossing."""
    CASE_I = (-1, 1)
    CASE_II = (1, -1)
    CASE_III = (1, 1)
    CASE_IV = (-1, -1)

    @property
    def has_pi_offset(self) -> bool:
        # a relative sign flip of the gap term adds pi to the total phase
        return self.value[0] < 0

    @classmethod
    def parse(cls, name) -> "LZSCase":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("case_", "").replace("case ", "")
        table = {"i": cls.CASE_I, "ii": cls.CASE_II, "iii": cls.CASE_III, "iv": cls.CASE_IV}
        if key not in table:
            raise DomainError(f"unknown LZS case {name!r}")
        return table[key]


@dataclass(frozen=True)
class LZSSetup:
    """Two identical crossings at t1 < t2 and the phase information between them.

    ``dispersion`` maps t to (E_+(t), E_-(t)); ``phases`` gives
    (phi_d+, phi_d-) directly and takes precedence.
    """
    local_params: RealGapLZParams
    t1: float
    t2: float
    case: LZSCase
    dispersion: Callable | None = None
    phases: tuple | None = None

    def __post_init__(self):
        if not self.t2 > self.t1:
            raise DomainError("crossing times must satisfy t2 > t1")
        if self.dispersion is None and self.phases is None:
            raise DomainError("need either a dispersion or explicit phases")


@dataclass(frozen=True)
class LZSResult:
    populations: BandPopulations
    phi_t: float
    phi_s: float
    U_A: np.ndarray


def impulse_matrix_first(params: RealGapLZParams) -> np.ndarray:
    """I_1 = [[U12, U11], [U22, U21]]."""
    U = real_gap_asymptotic_U(params)
    return np.array([[U[0, 1], U[0, 0]], [U[1, 1], U[1, 0]]], dtype=complex)


def impulse_matrix_second(params: RealGapLZParams, case: LZSCase) -> np.ndarray:
    """I_2 for one of the four sign cases, in terms of the first crossing's U."""
    case = LZSCase.parse(case)
    U = real_gap_asymptotic_U(params)
    u11, u12, u21, u22 = U[0, 0], U[0, 1], U[1, 0], U[1, 1]
    if case is LZSCase.CASE_I:
        rows = [[-u12, u11], [u22, -u21]]
    elif case is LZSCase.CASE_II:
        rows = [[u12, u11], [u22, u21]]
    elif case is LZSCase.CASE_III:
        rows = [[-np.conj(u21), u11], [u22, -np.conj(u12)]]
    else:
        rows = [[np.conj(u21), u11], [u22, np.conj(u12)]]
    return np.array(rows, dtype=complex)


def _quad_re(func, a, b) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = quad(func, a, b, epsabs=QUAD_ABS_TOL, epsrel=0.0, limit=500)
        except IntegrationWarning as exc:
            raise QuadratureFailure(str(exc)) from exc
    if not (math.isfinite(val) and err <= 10 * QUAD_ABS_TOL):
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} too large")
    return val


def adiabatic_phase(setup: LZSSetup):
    """(phi_d+, phi_d-) = integrals of Re E_+- over [t1, t2]."""
    if setup.phases is not None:
        return float(setup.phases[0]), float(setup.phases[1])
    disp = setup.dispersion
    plus = _quad_re(lambda t: complex(disp(t)[0]).real, setup.t1, setup.t2)
    minus = _quad_re(lambda t: complex(disp(t)[1]).real, setup.t1, setup.t2)
    return plus, minus


def populations_of(U_A: np.ndarray) -> BandPopulations:
    """Read band populations off a cycle matrix in the (upper, lower) basis."""
    return BandPopulations(float(abs(U_A[0, 1]) ** 2), float(abs(U_A[1, 1]) ** 2),
                           float(abs(U_A[1, 0]) ** 2), float(abs(U_A[0, 0]) ** 2))


def total_phase(phi_d_plus: float, phi_d_minus: float, delta: float) -> float:
    """phi_d+ - phi_d- + 2 phi_s, before any case-dependent pi offset."""
    return phi_d_plus - phi_d_minus + 2 * stokes_phase(delta)


def compose(setup: LZSSetup) -> LZSResult:
    """U_A = I_2 A I_1 and the populations it implies.

    The reported ``phi_t`` includes the pi offset of cases i and iv.
    """
    params = setup.local_params
    case = LZSCase.parse(setup.case)
    phi_p, phi_m = adiabatic_phase(setup)
    A = np.diag([np.exp(-1j * phi_p), np.exp(-1j * phi_m)])
    U_A = impulse_matrix_second(params, case) @ A @ impulse_matrix_first(params)
    phi_s = stokes_phase(params.delta)
    phi_t = phi_p - phi_m + 2 * phi_s + (math.pi if case.has_pi_offset else 0.0)
    return LZSResult(populations_of(U_A), phi_t, phi_s, U_A)


def analytic_populations(params: RealGapLZParams, phi_t: float, case) -> BandPopulations:
    """Closed-form cycle populations.

    ``phi_t`` is phi_d+ - phi_d- + 2 phi_s; the pi offset of cases i and iv
    is added here.
    """
    params.check_exceptional()
    case = LZSCase.parse(case)
    phase = phi_t + (math.pi if case.has_pi_offset else 0.0)
    m, g = params.m, params.gamma
    plz = params.p_lz
    q = 1 - plz
    r = (m - g) / (m + g)
    s2 = math.sin(phase / 2) ** 2
    c = math.cos(phase)
    if case in (LZSCase.CASE_I, LZSCase.CASE_II):
        inter = 4 * plz * q * (s2 + g * g / (m * m - g * g))
        return BandPopulations(
            inter,
            plz * plz + r * r * q * q + 2 * r * plz * q * c,
            inter,
            plz * plz + q * q / (r * r) + 2 / r * plz * q * c,
        )
    same = plz * plz + q * q + 2 * plz * q * c
    return BandPopulations(4 * r * plz * q * s2, same, 4 / r * plz * q * s2, same)
