"""Adaptive integration of i d(psi)/dt = H(t) psi for non-Hermitian H.

The state may be a vector, a matrix of column states (fundamental matrix)
or a batch of either; the right-hand side is ``-1j * (H(t) @ psi)`` so
``H(t)`` may carry matching leading batch dimensions.  The norm is never
renormalised.  Steps are taken with scipy's DOP853 embedded pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import DOP853

from .errors import DegeneracyError, DomainError, StepUnderflow
from .twolevel import BandPopulations, projectors

UNDERFLOW_REL = 1e-14


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-control settings.

    ``tol_mode='norm'`` accepts a step when the error is below
    abs_tol + rel_tol * ||psi||; ``'componentwise'`` applies rel_tol to each
    entry separately (stricter, and independent across batched systems).
    ``interpolation`` selects how ``t_eval`` samples between accepted steps
    are produced: 'solver' uses the seventh-order continuous extension of
    the pair, 'hermite' a cubic Hermite fit to the step end points.
    """
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = np.inf
    dense_output: bool = True
    tol_mode: str = "norm"
    interpolation: str = "solver"

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("tolerances must be positive")
        if not self.max_step > 0:
            raise DomainError("max_step must be positive")
        if self.tol_mode not in ("norm", "componentwise"):
            raise DomainError("tol_mode must be 'norm' or 'componentwise'")
        if self.interpolation not in ("solver", "hermite"):
            raise DomainError("interpolation must be 'solver' or 'hermite'")


@dataclass
class Trajectory:
    """Stored states in integration order.

    ``times`` is monotone in the direction of integration; ``states[i]``
    has the shape of the initial state.  ``step_times``/``step_states``/
    ``step_derivs`` hold every accepted step when dense output is on.
    """
    times: np.ndarray
    states: np.ndarray
    populations: list | None = None
    n_steps: int = 0
    step_times: np.ndarray | None = field(default=None, repr=False)
    step_states: np.ndarray | None = field(default=None, repr=False)
    step_derivs: np.ndarray | None = field(default=None, repr=False)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def hermite(self, t) -> np.ndarray:
        """Cubic Hermite interpolation between accepted steps."""
        if self.step_times is None:
            raise ValueError("trajectory was integrated without dense output")
        return hermite_interpolate(self.step_times, self.step_states, self.step_derivs, t)


def hermite_interpolate(ts: np.ndarray, ys: np.ndarray, fs: np.ndarray, t) -> np.ndarray:
    """Cubic Hermite interpolant through (ts, ys) with slopes fs."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    asc = ts[-1] >= ts[0]
    key = ts if asc else -ts
    tk = t if asc else -t
    idx = np.clip(np.searchsorted(key, tk, side="right") - 1, 0, len(ts) - 2)
    out = np.empty((len(t),) + ys.shape[1:], dtype=complex)
    for j, (i, tj) in enumerate(zip(idx, t)):
        h = ts[i + 1] - ts[i]
        s = (tj - ts[i]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        out[j] = h00 * ys[i] + h10 * h * fs[i] + h01 * ys[i + 1] + h11 * h * fs[i + 1]
    return out


def _make_rhs(h_of_t, apply, shape):
    if apply is not None and len(shape) == 1:
        return apply
    if apply is not None:
        def rhs(t, y):
            return apply(t, y.reshape(shape)).reshape(-1)
    elif len(shape) == 1:
        def rhs(t, y):
            return -1j * (h_of_t(t) @ y)
    else:
        def rhs(t, y):
            return (-1j * (h_of_t(t) @ y.reshape(shape))).reshape(-1)
    return rhs


def _norm(y: np.ndarray) -> float:
    return float(np.sqrt(np.vdot(y, y).real))


def integrate(h_of_t: Callable | None, psi0, t_i: float, t_f: float,
              cfg: IntegratorConfig | None = None, t_eval=None,
              apply: Callable | None = None) -> Trajectory:
    """Integrate i dpsi/dt = H(t) psi from t_i to t_f.

    Parameters
    ----------
    h_of_t : callable
        t -> H(t), an array whose matmul with the state is defined.
    psi0 : array_like
        Initial state of any shape (vector, column matrix, batch).
    t_i, t_f : float
        End points; t_f < t_i integrates backwards.
    t_eval : array_like, optional
        Times to store, monotone in the integration direction.  Without
        it only the two end points are stored.
    apply : callable, optional
        (t, psi) -> dpsi/dt, replacing the dense ``h_of_t`` product (used for
        sparse lattice operators).

    Raises
    ------
    StepUnderflow
        If the step size collapses below 1e-14 of the span or the
        stepper fails.
    """
    cfg = cfg or IntegratorConfig()
    psi0 = np.asarray(psi0, dtype=complex)
    if not np.any(psi0):
        raise DomainError("initial state must be nonzero")
    if not (np.isfinite(t_i) and np.isfinite(t_f)):
        raise DomainError("end times must be finite")
    shape = psi0.shape
    span = abs(t_f - t_i)
    if span == 0:
        return Trajectory(np.array([t_i]), psi0[None].copy())
    direction = 1.0 if t_f > t_i else -1.0

    if t_eval is None:
        t_eval = np.array([t_i, t_f], dtype=float)
    else:
        t_eval = np.asarray(t_eval, dtype=float)
        if np.any(direction * np.diff(t_eval) <= 0):
            raise DomainError("t_eval must be strictly monotone in the integration direction")
        lo, hi = min(t_i, t_f), max(t_i, t_f)
        if t_eval.size and (t_eval.min() < lo - 1e-12 * span or t_eval.max() > hi + 1e-12 * span):
            raise DomainError("t_eval outside the integration interval")

    rhs = _make_rhs(h_of_t, apply, shape)
    y0 = psi0.reshape(-1)
    solver = DOP853(rhs, t_i, y0, t_f, max_step=cfg.max_step,
                    rtol=max(cfg.rel_tol, 1e-13), atol=cfg.abs_tol)
    # skip scipy's argument-checking wrappers; the state is already flat complex
    solver.fun = rhs
    if cfg.tol_mode == "norm":
        solver.rtol = 0.0
        solver.atol = cfg.abs_tol + cfg.rel_tol * _norm(y0)
    else:
        solver.rtol = cfg.rel_tol

    out_t = []
    out_y = []
    k = 0
    while k < len(t_eval) and direction * (t_eval[k] - t_i) <= 0:
        out_t.append(t_eval[k])
        out_y.append(y0.copy())
        k += 1

    keep_steps = cfg.dense_output
    st, sy, sf = ([t_i], [y0.copy()], [solver.f.copy()]) if keep_steps else (None, None, None)
    n_steps = 0
    min_step = UNDERFLOW_REL * span
    while solver.status == "running":
        t_old = solver.t
        msg = solver.step()
        if solver.status == "failed":
            raise StepUnderflow(f"integration failed at t = {t_old:.6g}: {msg}")
        h = abs(solver.t - t_old)
        if h < min_step and solver.status == "running":
            raise StepUnderflow(f"step {h:.3g} below {min_step:.3g} at t = {solver.t:.6g}")
        n_steps += 1
        if cfg.tol_mode == "norm":
            solver.atol = cfg.abs_tol + cfg.rel_tol * _norm(solver.y)
        if keep_steps:
            st.append(solver.t)
            sy.append(solver.y.copy())
            sf.append(solver.f.copy())
        if not np.all(np.isfinite(solver.y)):
            raise StepUnderflow(f"state overflowed at t = {solver.t:.6g}")
        dense = None
        while k < len(t_eval) and direction * (t_eval[k] - solver.t) <= 0:
            tk = t_eval[k]
            if tk == solver.t:
                out_y.append(solver.y.copy())
            elif cfg.interpolation == "hermite":
                out_y.append(hermite_interpolate(
                    np.array([t_old, solver.t]), np.array([solver.y_old, solver.y]),
                    np.array([rhs(t_old, solver.y_old), solver.f]), tk)[0])
            else:
                if dense is None:
                    dense = solver.dense_output()
                out_y.append(dense(tk))
            out_t.append(tk)
            k += 1

    traj = Trajectory(np.array(out_t), np.array(out_y).reshape((len(out_y),) + shape),
                      n_steps=n_steps)
    if keep_steps:
        traj.step_times = np.array(st)
        traj.step_states = np.array(sy).reshape((len(sy),) + shape)
        traj.step_derivs = np.array(sf).reshape((len(sf),) + shape)
    return traj


def fundamental_matrix(h_of_t: Callable, t_i: float, t_f: float,
                       cfg: IntegratorConfig | None = None, dim: int = 2,
                       t_eval=None) -> Trajectory:
    """Integrate the identity; states are U(t, t_i)."""
    return integrate(h_of_t, np.eye(dim, dtype=complex), t_i, t_f, cfg, t_eval=t_eval)


def band_project(traj: Trajectory, h_of_t: Callable) -> Trajectory:
    """Attach biorthogonal band populations to a two-level trajectory.

    A state of shape (2,) gives (to_upper, to_lower) tuples.  A state of
    shape (2, 2) is read as columns (psi_minus, psi_plus), the evolved lower
    and upper initial eigenvectors, and gives BandPopulations.  Times where
    the eigenvalues coalesce get ``None``.
    """
    shape = traj.states.shape[1:]
    if shape not in ((2,), (2, 2)):
        raise DomainError("band_project needs a two-level trajectory")
    pops = []
    for t, psi in zip(traj.times, traj.states):
        try:
            p_plus, p_minus = projectors(h_of_t(t))
        except DegeneracyError:
            pops.append(None)
            continue
        if shape == (2,):
            pops.append((float(np.linalg.norm(p_plus @ psi) ** 2),
                         float(np.linalg.norm(p_minus @ psi) ** 2)))
        else:
            up = np.linalg.norm(p_plus @ psi, axis=0) ** 2
            low = np.linalg.norm(p_minus @ psi, axis=0) ** 2
            pops.append(BandPopulations(float(up[0]), float(low[0]), float(low[1]), float(up[1])))
    traj.populations = pops
    return traj
