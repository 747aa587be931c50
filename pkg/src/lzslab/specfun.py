"""Parabolic cylinder functions D_p(z) for complex order and argument.

Two evaluation regimes are used:

* ``series``: the Kummer-function representation

      D_p(z) = 2^{p/2} e^{-z^2/4} [ sqrt(pi)/Gamma((1-p)/2) M(-p/2, 1/2, z^2/2)
                                   - sqrt(2 pi) z/Gamma(-p/2) M((1-p)/2, 3/2, z^2/2) ]

  summed term by term.  The individual terms grow like e^{|z|^2/2} before
  they cancel, so double precision is only usable for moderate |z|.

* ``asymptotic``: the large-|z| expansion, optimally truncated, with the
  reflected (exponentially growing) contribution switched on for
  |arg z| > pi/2.

``pcf`` picks the regime by comparing |z| with a crossover radius.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from scipy.special import loggamma, rgamma

from .errors import DomainError, NonConvergence

__all__ = [
    "CROSSOVER_RADIUS",
    "PcfEvalReport",
    "arg_gamma",
    "pcf",
    "pcf_asymptotic",
    "pcf_ray",
    "pcf_series",
    "pcf_value",
]

EPS = 2.220446049250313e-16
SQRT_PI = math.sqrt(math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)

# Series rounding error grows like eps*e^{r^2/2} while the optimally truncated
# asymptotic error falls like e^{-r^2/2}; the two meet near r = 6.
CROSSOVER_RADIUS = 6.5

SERIES_MAX_TERMS = 10_000
SERIES_STOP_RUN = 3
SERIES_STOP_REL = 1e-16
ASYMPTOTIC_MAX_TERMS = 200
FALLBACK_REL = 1e-10


@dataclass(frozen=True)
class PcfEvalReport:
    value: complex
    regime: str
    est_abs_error: float


def arg_gamma(z: complex) -> float:
    """Continuous branch of arg Gamma(z), i.e. Im log Gamma(z)."""
    return float(loggamma(complex(z)).imag)


def _order(p) -> complex:
    p = complex(p)
    if not (math.isfinite(p.real) and math.isfinite(p.imag)):
        raise DomainError(f"order must be finite, got {p!r}")
    return p


def _kummer(a: complex, b: float, x: complex):
    """Sum M(a, b, x); return (value, truncation bound, rounding bound)."""
    term = 1.0 + 0j
    total = term
    abs_sum = 1.0
    small_run = 0
    for n in range(SERIES_MAX_TERMS):
        term *= (a + n) / (b + n) * x / (n + 1)
        total += term
        abs_sum += abs(term)
        if abs(term) < SERIES_STOP_REL * abs(total) or term == 0:
            small_run += 1
            if small_run >= SERIES_STOP_RUN:
                nxt = abs(term * (a + n + 1) / (b + n + 1) * x / (n + 2))
                return total, nxt, 4 * EPS * abs_sum
        else:
            small_run = 0
    raise NonConvergence(
        f"Kummer series M({a}, {b}, {x}) not converged after {SERIES_MAX_TERMS} terms")


def pcf_series(p, zeta) -> PcfEvalReport:
    """D_p(zeta) from the confluent hypergeometric power series.

    The error estimate combines the first omitted term with a bound on
    the accumulated rounding (eps times the weighted sum of term moduli),
    which dominates once the terms start cancelling.
    """
    p = _order(p)
    z = complex(zeta)
    x = z * z / 2.0
    pref = 2.0 ** (p / 2.0) * cmath.exp(-z * z / 4.0)
    c1 = SQRT_PI * complex(rgamma((1.0 - p) / 2.0))
    c2 = SQRT_2PI * z * complex(rgamma(-p / 2.0))

    value = 0j
    err = 0.0
    if c1 != 0:
        m1, tail1, round1 = _kummer(-p / 2.0, 0.5, x)
        value += c1 * m1
        err += abs(c1) * (tail1 + round1 + 8 * EPS * abs(m1))
    if c2 != 0:
        m2, tail2, round2 = _kummer((1.0 - p) / 2.0, 1.5, x)
        value -= c2 * m2
        err += abs(c2) * (tail2 + round2 + 8 * EPS * abs(m2))
    value *= pref
    err = abs(pref) * err + 2 * EPS * (abs(x) / 2.0 + abs(p) + 4.0) * abs(value)
    return PcfEvalReport(value, "series", err)


def _asymptotic_sum(p: complex, inv2z2: complex, reflected: bool, terms):
    """Partial sum of the asymptotic series and a bound on what was dropped.

    Main series:      sum_s (-1)^s (-p)_{2s} / (s! (2 z^2)^s)
    Reflected series: sum_s (p+1)_{2s} / (s! (2 z^2)^s)

    The bound is the larger of the last kept and the first dropped term,
    inflated when the series was cut at its smallest term.
    """
    def ratio(s):
        if reflected:
            return (p + 1 + 2 * s) * (p + 2 + 2 * s) / (s + 1) * inv2z2
        return -(p - 2 * s) * (p - 2 * s - 1) / (s + 1) * inv2z2

    term = 1.0 + 0j
    total = term
    last = 0.0
    limit = ASYMPTOTIC_MAX_TERMS if terms is None else terms - 1
    for s in range(limit):
        nxt = term * ratio(s)
        if nxt == 0:
            return total, 0.0
        if terms is None and abs(nxt) >= abs(term) and s > 0:
            # near Stokes lines the remainder exceeds the smallest term by
            # a factor growing like the square root of the optimal order
            return total, 2.0 * (1.0 + math.sqrt(s)) * max(last, abs(nxt))
        total += nxt
        term = nxt
        last = abs(nxt)
        if terms is None and last < EPS * abs(total):
            return total, last
    return total, max(last, abs(term * ratio(limit)))


def pcf_asymptotic(p, zeta, crossover: float = CROSSOVER_RADIUS,
                   terms: int | None = None) -> PcfEvalReport:
    """D_p(zeta) from its large-argument expansion.

    With ``terms=None`` each series is truncated just before its smallest
    term; ``terms=3`` keeps the corrections through 1/zeta^4 only.
    For pi/2 < |arg zeta| <= pi the second solution

        -sqrt(2 pi)/Gamma(-p) e^{+-i pi p} e^{zeta^2/4} zeta^{-p-1}

    is added with the sign of the exponent matching the sign of arg zeta.
    """
    p = _order(p)
    z = complex(zeta)
    if abs(z) < crossover:
        raise DomainError(
            f"|zeta| = {abs(z):.3g} is inside the crossover radius {crossover}; "
            "the asymptotic expansion is unreliable there")
    if terms is not None and terms < 1:
        raise ValueError("terms must be >= 1")
    logz = cmath.log(z)
    inv2z2 = 1.0 / (2.0 * z * z)

    s_main, last_main = _asymptotic_sum(p, inv2z2, False, terms)
    main = cmath.exp(-z * z / 4.0 + p * logz)
    value = main * s_main
    err = abs(main) * last_main

    phase = cmath.phase(z)
    if abs(phase) > math.pi / 2:
        g = complex(rgamma(-p))
        if g != 0:
            sign = 1.0 if phase > 0 else -1.0
            s_ref, last_ref = _asymptotic_sum(p, inv2z2, True, terms)
            refl = -SQRT_2PI * g * cmath.exp(sign * 1j * math.pi * p + z * z / 4.0
                                             - (p + 1.0) * logz)
            value += refl * s_ref
            err += abs(refl) * last_ref
    # the exponent z^2/4 + p log z is only known to eps times its size
    cond = abs(z * z) / 4.0 + abs(p * logz) + 4.0
    err += 2 * EPS * cond * abs(value)
    return PcfEvalReport(value, "asymptotic", err)


def pcf_ray(p, z_a: float, branch: str = "+", terms: int = 3) -> complex:
    """Large-z_a form of D_p(+-sqrt(2) e^{i pi/4} z_a) written with the LZ phase.

    Here p = -i*delta + delta' and Phi(z_a) = z_a^2/2 + delta*ln(sqrt(2) z_a).
    The reflected term carries the (p+1)(p+2)... corrections of the second
    solution.  Intended for cross-checking ``pcf_asymptotic`` on the two rays
    that enter the closed-form LZ evolution.
    """
    p = _order(p)
    if z_a <= 0:
        raise DomainError("z_a must be positive")
    if terms not in (1, 2, 3):
        raise ValueError("terms must be 1, 2 or 3")
    delta = -p.imag
    delta_p = p.real
    log_r = math.log(math.sqrt(2.0) * z_a)
    phi = z_a * z_a / 2.0 + delta * log_r

    def corr(q: complex, sign: complex) -> complex:
        c = 1.0 + 0j
        if terms >= 2:
            c += sign * 1j * q * (q - 1) / (4.0 * z_a ** 2)
        if terms >= 3:
            c -= q * (q - 1) * (q - 2) * (q - 3) / (32.0 * z_a ** 4)
        return c

    if branch == "+":
        return cmath.exp(-1j * (phi - math.pi * delta_p / 4.0) + delta_p * log_r
                         + math.pi * delta / 4.0) * corr(p, 1.0)
    if branch != "-":
        raise ValueError("branch must be '+' or '-'")
    first = cmath.exp(-1j * (phi + 3.0 * math.pi * delta_p / 4.0) + delta_p * log_r
                      - 3.0 * math.pi * delta / 4.0) * corr(p, 1.0)
    # (p+1)(p+2) = q(q-1) with q = -p-1; sign of the 1/z_a^2 term flips.
    q = -p - 1.0
    second = (SQRT_2PI * complex(rgamma(1j * delta - delta_p))
              * cmath.exp(1j * (phi - math.pi * (delta_p + 1.0) / 4.0)
                          - (delta_p + 1.0) * log_r - math.pi * delta / 4.0)
              * corr(q, -1.0))
    return first + second


def pcf(p, zeta, crossover: float = CROSSOVER_RADIUS) -> PcfEvalReport:
    """D_p(zeta), dispatching on |zeta| against ``crossover``.

    Beyond the crossover the asymptotic result is kept unless its error
    estimate exceeds ``FALLBACK_REL`` relative; then the series is tried as
    well and the evaluation with the smaller estimate wins.  This only
    matters off the diagonal rays, near Stokes lines at moderate |zeta|.
    """
    if abs(complex(zeta)) < crossover:
        return pcf_series(p, zeta)
    asym = pcf_asymptotic(p, zeta, crossover=crossover)
    if asym.est_abs_error <= FALLBACK_REL * abs(asym.value):
        return asym
    try:
        ser = pcf_series(p, zeta)
    except NonConvergence:
        return asym
    return ser if ser.est_abs_error < asym.est_abs_error else asym


def pcf_value(p, zeta, crossover: float = CROSSOVER_RADIUS) -> complex:
    return pcf(p, zeta, crossover).value
