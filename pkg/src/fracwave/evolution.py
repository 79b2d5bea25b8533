"""Mild solutions of u'' + (-L)^alpha u + b u' + m2 u = |u|^p.

Time stepping is an exponential integrator: the linear part of every mode is
advanced exactly and only the Duhamel integral of the nonlinearity is
approximated (frozen at the left endpoint, or at a predicted midpoint).  The
nonlinearity is formed pointwise on an oversampled grid and projected back to
the band.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .harmonics import (GridField, SpectralField, analyze, build_grid, fractional_multiplier,
                        get_dual, plancherel_norm, synthesize)
from .propagator import (EvolutionState, WaveParams, damped_phi_pair, discriminant, linear_evolve,
                         mode_mu, weight_envelope)

log = logging.getLogger(__name__)

OVERFLOW_GUARD = 1e8
IMAG_TOL = 1e-8

DUHAMEL_EULER = "euler"
DUHAMEL_MIDPOINT = "midpoint"


class BlowupOverflow(FloatingPointError):
    """Raised when the sup norm passes the overflow guard during a step."""

    def __init__(self, time, linf):
        super().__init__(f"sup norm {linf:.3e} exceeds overflow guard at t={time:.6g}")
        self.time = time
        self.linf = linf


class ConvergenceError(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SchemeConfig:
    scheme: str = DUHAMEL_MIDPOINT
    dt: float = 1e-2
    dealias: bool = True
    nonlinear: bool = True

    def __post_init__(self):
        if self.scheme not in (DUHAMEL_EULER, DUHAMEL_MIDPOINT):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class NormTrace:
    """Norm history of a run.

    ``envelope`` is the weight A_{b,m2}(t) of the solution norm (1 without
    mass); ``ratio`` is the weighted energy-space quantity at each time and
    ``x_running`` its running supremum.  ``u_mean``, ``v_mean`` and
    ``forcing_mean`` are the integrals of u, u_t and |u|^p.
    """

    times: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    seminorm: list = field(default_factory=list)
    dt_l2: list = field(default_factory=list)
    envelope: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    x_norm_running: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    u_mean: list = field(default_factory=list)
    v_mean: list = field(default_factory=list)
    forcing_mean: list = field(default_factory=list)
    outcome: str = "completed"
    final_time: float = 0.0

    COLUMNS = ("t", "l2", "seminorm_alpha", "dt_l2", "envelope", "ratio", "x_running")

    def record(self, state, params, linf=float("nan"), forcing_mean=float("nan")):
        t = state.time
        if self.times and t <= self.times[-1]:
            raise ValueError("trace times must increase")
        l2 = plancherel_norm(state.u_hat)
        semi = float(np.sqrt(np.sum(state.dual.entry_dim * state.dual.entry_casimir ** params.alpha
                                    * np.abs(state.u_hat.data) ** 2)))
        dtn = plancherel_norm(state.v_hat)
        env = float(weight_envelope(t, params))
        ratio = (l2 + semi + dtn) / env
        self.times.append(t)
        self.l2.append(l2)
        self.seminorm.append(semi)
        self.dt_l2.append(dtn)
        self.envelope.append(env)
        self.ratio.append(ratio)
        self.x_norm_running.append(max(ratio, self.x_norm_running[-1]) if self.x_norm_running else ratio)
        self.linf.append(linf)
        self.u_mean.append(state.u_hat.trivial().real)
        self.v_mean.append(state.v_hat.trivial().real)
        self.forcing_mean.append(forcing_mean)
        self.final_time = t

    def __len__(self):
        return len(self.times)

    def array(self, name):
        return np.asarray(getattr(self, name), dtype=float)

    def rows(self):
        return zip(self.times, self.l2, self.seminorm, self.dt_l2, self.envelope, self.ratio,
                   self.x_norm_running)

    def to_csv(self, path, comment=None):
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(self.COLUMNS)
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


def nonlinearity(field: GridField, p) -> GridField:
    """Pointwise |u|^p of a real field (imaginary residue is dropped)."""
    v = field.values
    if np.any(np.isnan(v)):
        raise ValueError("NaN in field passed to the nonlinearity")
    if np.iscomplexobj(v):
        resid = np.max(np.abs(v.imag), initial=0.0)
        if resid > IMAG_TOL * max(1.0, np.max(np.abs(v.real), initial=0.0)):
            warnings.warn(f"discarding imaginary residue {resid:.2e} before |u|^p", RuntimeWarning)
        v = v.real
    return GridField(field.grid, np.abs(v) ** p)


def _kernel_integral(dt, mu, b, m2):
    """int_0^dt exp(-b s/2) A1(s) ds per mode."""
    kappa = mu + m2
    disc = discriminant(mu, b, m2)
    E0, E1 = damped_phi_pair(dt, disc, b)
    out = np.empty(np.shape(kappa))
    big = kappa * dt * dt >= 1e-2
    # kernel solves w'' + b w' + kappa w = 0, w(0) = 0, w'(0) = 1
    out[big] = (1 - E0[big] - 0.5 * b * E1[big]) / kappa[big]
    if np.any(~big):
        x, w = np.polynomial.legendre.leggauss(12)
        s = 0.5 * dt * (x + 1)
        _, K = damped_phi_pair(s[:, None], disc[~big][None, :], b)
        out[~big] = 0.5 * dt * (w @ K)
    return out


class DuhamelStepper:
    """Exponential Euler / midpoint stepping on a fixed dual and grid."""

    def __init__(self, dual, params: WaveParams, cfg: SchemeConfig, grid=None):
        self.dual = dual
        self.params = params
        self.cfg = cfg
        if grid is None:
            g = dual.group
            if cfg.dealias and g.oversample < 2:
                g = g.with_oversample(2)
            grid = build_grid(g)
        self.grid = grid
        self.mu = mode_mu(dual, params.alpha)
        self._coef = {}

    def coefficients(self, dt):
        if dt not in self._coef:
            p = self.params
            disc = discriminant(self.mu, p.b, p.m2)
            E0, E1 = damped_phi_pair(dt, disc, p.b)
            Q = _kernel_integral(dt, self.mu, p.b, p.m2)
            self._coef[dt] = (E1, Q)
        return self._coef[dt]

    def forcing(self, u_hat: SpectralField):
        """(F_hat, sup|u|) with F = |u|^p projected onto the band."""
        f = synthesize(u_hat, self.grid)
        linf = float(np.max(np.abs(f.values)))
        if not self.cfg.nonlinear:
            return SpectralField.zeros(self.dual, u_hat.real), linf
        F = analyze(nonlinearity(f, self.params.p), self.grid, self.dual, real=u_hat.real)
        if u_hat.real:
            F = F.enforce_reality()
        return F, linf

    def _advance(self, state, dt, F):
        lin = linear_evolve(state, state.time + dt, self.params)
        if F is None:
            return lin
        E1, Q = self.coefficients(dt)
        u = lin.u_hat.data + Q * F.data
        v = lin.v_hat.data + E1 * F.data
        return EvolutionState(lin.u_hat._like(u), lin.v_hat._like(v), lin.time)

    def step(self, state, dt=None, F=None):
        """One step; ``F`` is the forcing at ``state`` if already known."""
        dt = self.cfg.dt if dt is None else dt
        if not self.cfg.nonlinear:
            return self._advance(state, dt, None)
        if F is None:
            F, _ = self.forcing(state.u_hat)
        if self.cfg.scheme == DUHAMEL_EULER:
            return self._advance(state, dt, F)
        half = self._advance(state, 0.5 * dt, F)
        F_mid, _ = self.forcing(half.u_hat)
        return self._advance(state, dt, F_mid)


def duhamel_step(state, params, cfg, grid=None):
    return DuhamelStepper(state.dual, params, cfg, grid).step(state)


def _to_spectral(data, dual=None):
    if isinstance(data, SpectralField):
        return data
    return analyze(data, data.grid, dual)


def initial_state(u0, u1):
    u = _to_spectral(u0)
    v = _to_spectral(u1, u.dual)
    return EvolutionState(u, v, 0.0)


def simulate(params: WaveParams, u0, u1, t_end, cfg: SchemeConfig, grid=None,
             overflow=OVERFLOW_GUARD):
    """Integrate to ``t_end``; returns (NormTrace, final EvolutionState).

    On overflow the trace ends at the last valid time with outcome "blowup".
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    state = initial_state(u0, u1)
    stepper = DuhamelStepper(state.dual, params, cfg, grid)
    nsteps = max(1, math.ceil(t_end / cfg.dt - 1e-9))
    dt = t_end / nsteps
    trace = NormTrace()
    F, linf = stepper.forcing(state.u_hat)
    trace.record(state, params, linf, F.trivial().real)
    for i in range(nsteps):
        new = stepper.step(state, dt, F)
        new.time = t_end if i == nsteps - 1 else (i + 1) * dt
        F_new, linf = stepper.forcing(new.u_hat)
        if not np.isfinite(linf) or linf > overflow:
            trace.outcome = "blowup"
            log.info("overflow guard hit after t=%.6g", state.time)
            return trace, state
        state, F = new, F_new
        trace.record(state, params, linf, F.trivial().real)
    return trace, state


def x_norm(trace: NormTrace, params: WaveParams, weighted=None) -> float:
    """sup_t (|u|_2 + |(-L)^(alpha/2) u|_2 + |u_t|_2), weighted by 1/A_{b,m2} if asked."""
    if not len(trace):
        raise ValueError("empty trace")
    if weighted is None:
        weighted = params.m2 > 0
    total = trace.array("l2") + trace.array("seminorm") + trace.array("dt_l2")
    if weighted:
        total = total / weight_envelope(trace.array("times"), params)
    return float(np.max(total))


def energy(state: EvolutionState, params: WaveParams) -> float:
    d = state.dual
    u2 = np.abs(state.u_hat.data) ** 2
    return float(0.5 * np.sum(d.entry_dim * (np.abs(state.v_hat.data) ** 2
                                             + (d.entry_casimir ** params.alpha + params.m2) * u2)))


@dataclass
class PicardReport:
    times: np.ndarray
    distances: list
    ratios: list
    converged: bool
    iterations: int
    u: np.ndarray = field(repr=False, default=None)
    v: np.ndarray = field(repr=False, default=None)


def _trajectory_norms(dual, U, V, alpha):
    w = dual.entry_dim
    l2 = np.sqrt(np.sum(w * np.abs(U) ** 2, axis=1))
    semi = np.sqrt(np.sum(w * dual.entry_casimir ** alpha * np.abs(U) ** 2, axis=1))
    dtn = np.sqrt(np.sum(w * np.abs(V) ** 2, axis=1))
    return l2, semi, dtn


def picard_solve(params: WaveParams, u0, u1, T, tol=1e-10, max_iter=50,
                 cfg: SchemeConfig = SchemeConfig(dt=1e-2)):
    """Fixed-point iteration of the mild-solution map on [0, T].

    Iterates start from the linear solution; the Duhamel integral uses the
    composite trapezoid rule on ceil(T/dt) uniform intervals with the exact
    per-mode kernel.  Returns (NormTrace of the last iterate, PicardReport);
    raises ConvergenceError if the sup-in-time distance stays above ``tol``.
    """
    if not T > 0 or not tol > 0:
        raise ValueError("T and tol must be positive")
    state = initial_state(u0, u1)
    dual = state.dual
    stepper = DuhamelStepper(dual, params, cfg)
    M = max(1, math.ceil(T / cfg.dt - 1e-9))
    h = T / M
    times = h * np.arange(M + 1)
    mu = stepper.mu
    disc = discriminant(mu, params.b, params.m2)
    E0, E1 = damped_phi_pair(times[:, None], disc[None, :], params.b)
    kappa = mu + params.m2
    # linear part u^sharp and its velocity
    U_lin = E0 * state.u_hat.data + E1 * (state.v_hat.data + 0.5 * params.b * state.u_hat.data)
    V_lin = E0 * state.v_hat.data - E1 * (0.5 * params.b * state.v_hat.data + kappa * state.u_hat.data)
    KU = E1
    KV = E0 - 0.5 * params.b * E1
    weight = weight_envelope(times, params)
    real = state.u_hat.real

    def apply_map(U):
        F = np.empty_like(U)
        for j in range(M + 1):
            F[j] = stepper.forcing(SpectralField(dual, U[j], real))[0].data
        conv_u = fftconvolve(KU, F, axes=0)[:M + 1]
        conv_v = fftconvolve(KV, F, axes=0)[:M + 1]
        Iu = h * (conv_u - 0.5 * KU * F[0] - 0.5 * KU[0] * F)
        Iv = h * (conv_v - 0.5 * KV * F[0] - 0.5 * KV[0] * F)
        return U_lin + Iu, V_lin + Iv

    def distance(U, V):
        l2, semi, dtn = _trajectory_norms(dual, U, V, params.alpha)
        return float(np.max((l2 + semi + dtn) / weight))

    U, V = U_lin, V_lin
    distances, ratios = [], []
    converged = False
    for k in range(1, max_iter + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            U_new, V_new = apply_map(U)
            dist = distance(U_new - U, V_new - V)
        if distances:
            ratios.append(dist / distances[-1] if distances[-1] > 0 else 0.0)
        distances.append(dist)
        U, V = U_new, V_new
        if dist < tol:
            converged = True
            break
        if not np.isfinite(dist) or dist > 1e12:
            break
    report = PicardReport(times, distances, ratios, converged, len(distances), U, V)
    if not converged:
        raise ConvergenceError(f"Picard iteration did not converge on [0, {T}] "
                               f"(last distance {distances[-1]:.3e})", report)
    trace = NormTrace()
    for j, t in enumerate(times):
        st = EvolutionState(SpectralField(dual, U[j], real), SpectralField(dual, V[j], real), float(t))
        trace.record(st, params)
    return trace, report
