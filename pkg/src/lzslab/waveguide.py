"""Gaussian beam in a gain-and-loss waveguide array with a transverse index gradient.

The modal amplitudes obey

    i dpsi_m/dz = -J_m e^{-i E z} psi_{m+1} - J_{m-1} e^{+i E z} psi_{m-1}
                  + i gamma (-1)^m psi_m

with J_m the coupling of the bond (m, m+1), alternating J_1 (m even) and
J_2 (m odd).  Site m sits at x_m = m d and site 0 carries gain.  The linear
index gradient form, static hoppings plus the on-site term E x_m, is the
same dynamics after psi -> exp(-i E z X) psi.

A plane wave u_s exp(i k x_m) sees the Bloch matrix

    h_w = -2J cos(theta) sigma_x + 2 alpha J sin(theta) sigma_y + i gamma sigma_z,

theta = k d - E z.  Since -conj(h_w) = h(E z - k d), the conjugated spinor
obeys the driven SSH equation with the same gain and loss.  Conjugation
reverses the energy order, so SSH band labels are those of -h_w: the
symmetric Gaussian beam sits in the upper band.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryContamination, DomainError, ZeroIntensity
from .propagator import IntegratorConfig, integrate
from .ssh import SSHParams, lzs_prediction
from .twolevel import (SIGMA_X, SIGMA_Y, SIGMA_Z, RealGapLZParams, projectors,
                       real_gap_asymptotic_U)

EDGE_THRESHOLD = 1e-6
MARGIN_WIDTHS = 3.0
MIN_WIDTH = 4.0
DEFAULT_OFFSET = 40


@dataclass(frozen=True)
class WaveguideConfig:
    """One propagation run.

    ``ssh.N`` is the number of waveguides (sites).  ``x0`` defaults to
    ``DEFAULT_OFFSET`` sites in from the upper end, so that the beam, which
    first moves towards negative x, stays on the array.  ``z_max`` defaults
    to one Bloch period 2 pi/E and ``sample_every`` to 1/400 of it.
    """
    ssh: SSHParams
    x0: float | None = None
    l: float | None = None
    z_max: float | None = None
    sample_every: float | None = None
    edge_threshold: float = EDGE_THRESHOLD
    check_margins: bool = True

    def __post_init__(self):
        d = self.ssh.d
        if self.ssh.E_field < 0:
            raise DomainError("the field must be non-negative")
        if self.x0 is None:
            object.__setattr__(self, "x0", (self.ssh.N - DEFAULT_OFFSET) * d)
        if self.l is None:
            object.__setattr__(self, "l", 8 * d)
        period = 2 * math.pi / self.ssh.E_field if self.ssh.E_field > 0 else None
        if self.z_max is None:
            if period is None:
                raise DomainError("z_max is required when the field is zero")
            object.__setattr__(self, "z_max", period)
        if self.sample_every is None:
            object.__setattr__(self, "sample_every", (period or self.z_max) / 400)
        if self.l < MIN_WIDTH * d:
            raise DomainError(f"beam width {self.l} below the broad-beam minimum {MIN_WIDTH}d")
        if not (self.z_max > 0 and self.sample_every > 0):
            raise DomainError("z_max and sample_every must be positive")
        if not self.edge_threshold > 0:
            raise DomainError("edge_threshold must be positive")
        if self.check_margins:
            self._check_margins()

    @property
    def n_sites(self) -> int:
        return self.ssh.N

    def _check_margins(self):
        lo, hi = 0.0, (self.n_sites - 1) * self.ssh.d
        margin = MARGIN_WIDTHS * self.l
        reach = [self.x0]
        if self.ssh.E_field > 0:
            reach.append(self.x0 + displacement(self.ssh))
        for x in reach:
            if x - lo < margin or hi - x < margin:
                raise DomainError(
                    f"beam position {x:.3g} closer than {MARGIN_WIDTHS:g} widths to the "
                    f"array edge [{lo:g}, {hi:g}]")


@dataclass
class BeamState:
    z: float
    psi: np.ndarray

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=complex)
        if not np.all(np.isfinite(self.psi)):
            raise DomainError("beam amplitudes must be finite")

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.psi) ** 2


def site_positions(n_sites: int, d: float = 1.0) -> np.ndarray:
    return np.arange(n_sites) * d


def bond_couplings(params: SSHParams, n_sites: int) -> np.ndarray:
    m = np.arange(n_sites - 1)
    return np.where(m % 2 == 0, params.J1, params.J2)


def displacement(params: SSHParams) -> float:
    """Delta x = -E_w/E with E_w = 2 E_+(k=0) the band splitting at k = 0."""
    rad = 4 * params.J ** 2 - params.gamma ** 2
    if rad < 0:
        raise DomainError("bands are complex at k = 0 (gamma > 2J)")
    return -2 * math.sqrt(rad) / params.E_field


def init_gaussian(cfg: WaveguideConfig) -> BeamState:
    """psi_m = (sqrt(pi) l)^{-1/2} exp(-(x_m - x0)^2 / (2 l^2)) on every site."""
    x = site_positions(cfg.n_sites, cfg.ssh.d)
    psi = np.exp(-((x - cfg.x0) ** 2) / (2 * cfg.l ** 2)) / math.sqrt(math.sqrt(math.pi) * cfg.l)
    return BeamState(0.0, psi.astype(complex))


def waveguide_hamiltonian(params: SSHParams, n_sites: int, z: float,
                          form: str = "hopping") -> np.ndarray:
    """Dense matrix of the modal equation (for checks; propagation is matrix free)."""
    bonds = bond_couplings(params, n_sites)
    x = site_positions(n_sites, params.d)
    H = np.diag(1j * params.gamma * np.where(np.arange(n_sites) % 2 == 0, 1.0, -1.0))
    if form == "hopping":
        phase = np.exp(-1j * params.E_field * z * params.d)
    elif form == "potential":
        phase = 1.0
        H = H + np.diag(params.E_field * x)
    else:
        raise DomainError("form must be 'hopping' or 'potential'")
    idx = np.arange(n_sites - 1)
    H[idx, idx + 1] = -bonds * phase
    H[idx + 1, idx] = -bonds * np.conj(phase)
    return H


def to_potential_form(params: SSHParams, state: BeamState) -> BeamState:
    """Hopping-phase amplitudes -> index-gradient amplitudes, psi -> exp(-i E z X) psi."""
    x = site_positions(len(state.psi), params.d)
    return BeamState(state.z, np.exp(-1j * params.E_field * state.z * x) * state.psi)


def from_potential_form(params: SSHParams, state: BeamState) -> BeamState:
    x = site_positions(len(state.psi), params.d)
    return BeamState(state.z, np.exp(1j * params.E_field * state.z * x) * state.psi)


def _make_apply(params: SSHParams, n_sites: int):
    bonds = bond_couplings(params, n_sites).astype(complex)
    gain = 1j * params.gamma * np.where(np.arange(n_sites) % 2 == 0, 1.0, -1.0)
    E, d = params.E_field, params.d

    def apply(z, psi):
        ph = complex(math.cos(E * z * d), -math.sin(E * z * d))
        out = gain * psi
        out[:-1] -= (bonds * ph) * psi[1:]
        out[1:] -= (bonds * ph.conjugate()) * psi[:-1]
        return -1j * out
    return apply


def edge_ratio(state: BeamState) -> float:
    a = np.abs(state.psi)
    top = a.max()
    if top == 0:
        raise ZeroIntensity("beam has zero intensity")
    return float(max(a[0], a[-1]) / top)


def propagate(cfg: WaveguideConfig, state0: BeamState | None = None,
              integrator: IntegratorConfig | None = None, strict: bool = False,
              form: str = "hopping") -> list:
    """Snapshots of the beam every ``sample_every`` up to ``z_max``.

    The input and output amplitudes are in the chosen ``form``; the
    integration itself always uses the hopping-phase equation.  Emits
    BoundaryContamination (raised when ``strict``) if an end site carries
    more than ``edge_threshold`` of the peak amplitude at any snapshot.
    """
    if state0 is None:
        state0 = init_gaussian(cfg)
    if len(state0.psi) != cfg.n_sites:
        raise DomainError("initial state does not match the number of sites")
    if form == "potential":
        state0 = from_potential_form(cfg.ssh, state0)
    elif form != "hopping":
        raise DomainError("form must be 'hopping' or 'potential'")
    z0 = state0.z
    n_samples = int(math.floor((cfg.z_max + 1e-9 * cfg.z_max) / cfg.sample_every))
    zs = z0 + cfg.sample_every * np.arange(n_samples + 1)
    if zs[-1] < z0 + cfg.z_max * (1 - 1e-12):
        zs = np.append(zs, z0 + cfg.z_max)
    zs[-1] = min(zs[-1], z0 + cfg.z_max)
    traj = integrate(None, state0.psi, z0, z0 + cfg.z_max, integrator, t_eval=zs,
                     apply=_make_apply(cfg.ssh, cfg.n_sites))
    out = [BeamState(float(z), psi) for z, psi in zip(traj.times, traj.states)]
    worst = max(edge_ratio(s) for s in out)
    if worst > cfg.edge_threshold:
        msg = (f"edge amplitude reached {worst:.3g} of the peak "
               f"(threshold {cfg.edge_threshold:g}); the array ends affect the result")
        if strict:
            raise BoundaryContamination(msg)
        warnings.warn(msg, BoundaryContamination, stacklevel=2)
    if form == "potential":
        out = [to_potential_form(cfg.ssh, s) for s in out]
    return out


def center_of_mass(state: BeamState, d: float = 1.0) -> float:
    """Intensity-weighted mean position sum x_m |psi_m|^2 / sum |psi_m|^2."""
    w = state.intensity
    total = w.sum()
    if not total > 0:
        raise ZeroIntensity("cannot take the centre of mass of a zero profile")
    return float(np.dot(site_positions(len(w), d), w) / total)


def analytic_com(params: SSHParams, x0: float, at: str = "full_period") -> float:
    """Centre of mass predicted by the adiabatic-impulse picture.

    half_period: ((x0 + dx)|U22|^2 + x0 |U12|^2) / (|U22|^2 + |U12|^2)
    full_period: ((x0 + dx) P_+- + x0 P_++) / (P_+- + P_++)

    U is the single-crossing real-gap matrix and P the case-i cycle
    populations with F = 2 J E, m = 2 alpha J.
    """
    dx = displacement(params)
    if at == "half_period":
        U = real_gap_asymptotic_U(RealGapLZParams(params.F, params.m, params.gamma))
        moved, stay = abs(U[1, 1]) ** 2, abs(U[0, 1]) ** 2
    elif at == "full_period":
        pops = lzs_prediction(params)
        moved, stay = pops.p_plus_minus, pops.p_plus_plus
    else:
        raise DomainError("at must be 'half_period' or 'full_period'")
    return float(((x0 + dx) * moved + x0 * stay) / (moved + stay))


def bloch_matrix(params: SSHParams, theta) -> np.ndarray:
    """h_w(theta) for an array of theta, shape (..., 2, 2)."""
    th = np.asarray(theta, dtype=float)[..., None, None]
    return (-2 * params.J * np.cos(th) * SIGMA_X + 2 * params.alpha * params.J * np.sin(th) * SIGMA_Y
            + 1j * params.gamma * SIGMA_Z)


@dataclass(frozen=True)
class BandDecomposition:
    upper_weight: float
    lower_weight: float
    upper_com: float
    lower_com: float


def band_decompose(state: BeamState, params: SSHParams) -> BandDecomposition:
    """Split a hopping-form profile into its upper- and lower-band parts.

    The sublattice amplitudes are Fourier transformed over the cells, each
    k-spinor is split with the biorthogonal projectors of h_w(k d - E z),
    and the two parts are transformed back to sites.  Weights are the
    resulting intensities, band centres of mass their mean positions.
    Labels follow the SSH bands (those of -h_w, see the module docstring).
    Treats the array as periodic, so the state should be away from the ends.
    """
    psi = state.psi
    n = len(psi)
    if n % 2:
        raise DomainError("band decomposition needs an even number of sites")
    d = params.d
    nc = n // 2
    k = 2 * math.pi * np.fft.fftfreq(nc, d=2 * d)
    a = np.fft.fft(psi[0::2])
    b = np.fft.fft(psi[1::2]) * np.exp(-1j * k * d)
    spin = np.stack([a, b], axis=-1)
    theta = k * d - params.E_field * state.z
    parts = {"upper": np.empty_like(spin), "lower": np.empty_like(spin)}
    for i, h in enumerate(bloch_matrix(params, theta)):
        p_plus, p_minus = projectors(h)
        # the +E band of h_w is the lower SSH band
        parts["lower"][i] = p_plus @ spin[i]
        parts["upper"][i] = p_minus @ spin[i]
    x = site_positions(n, d)
    res = {}
    for name, comp in parts.items():
        site = np.empty(n, dtype=complex)
        site[0::2] = np.fft.ifft(comp[:, 0])
        site[1::2] = np.fft.ifft(comp[:, 1] * np.exp(1j * k * d))
        w = np.abs(site) ** 2
        total = float(w.sum())
        com = float(np.dot(x, w) / total) if total > 0 else float("nan")
        res[name] = (total, com)
    return BandDecomposition(res["upper"][0], res["lower"][0], res["upper"][1], res["lower"][1])


def write_snapshots(path, states, params: SSHParams, header_lines=()) -> None:
    """CSV of every snapshot: z, site, re_psi, im_psi, intensity, intensity_rel.

    ``intensity_rel`` is the intensity divided by its maximum at that z.
    """
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "site", "re_psi", "im_psi", "intensity", "intensity_rel"])
        for s in states:
            inten = s.intensity
            top = inten.max()
            rel = inten / top if top > 0 else inten
            for m, amp in enumerate(s.psi):
                w.writerow([_g(s.z), m, _g(amp.real), _g(amp.imag), _g(inten[m]), _g(rel[m])])


def com_series(states, params: SSHParams) -> np.ndarray:
    """Rows (z, com, upper_weight, lower_weight) for a list of snapshots."""
    rows = []
    for s in states:
        dec = band_decompose(s, params)
        rows.append((s.z, center_of_mass(s, params.d), dec.upper_weight, dec.lower_weight))
    return np.array(rows)


def write_com_series(path, rows, header_lines=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["z", "com", "upper_weight", "lower_weight"])
        for r in rows:
            w.writerow([_g(v) for v in r])


def _g(v) -> str:
    return "%.17g" % v
