"""Exact per-mode propagators for u'' + b u' + (mu + m2) u = 0.

Each Fourier coefficient of the linear damped (massive) fractional wave
equation obeys a scalar constant-coefficient ODE with characteristic roots
-b/2 +- sqrt(disc), disc = b^2/4 - mu - m2.  The solution is written through
the pair

    A0(t) = Psi(disc t^2),   A1(t) = t Phi(disc t^2),
    Psi(z) = sum z^k / (2k)!,   Phi(z) = sum z^k / (2k+1)!,

which is cosh/sinh, cos/sin or (1, t) depending on the sign of disc and is
analytic across disc = 0.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from math import factorial

import numpy as np

from .harmonics import SpectralField

SERIES_CUTOFF = 1e-6
_SERIES_TERMS = 6
_PSI = np.array([1.0 / factorial(2 * k) for k in range(_SERIES_TERMS)])
_PHI = np.array([1.0 / factorial(2 * k + 1) for k in range(_SERIES_TERMS)])


@dataclass(frozen=True)
class WaveParams:
    alpha: float = 0.5
    b: float = 1.0
    m2: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.p <= 1:
            raise ValueError("p must exceed 1")
        if self.b < 0 or self.m2 < 0:
            raise ValueError("b and m2 must be nonnegative")


@dataclass
class EvolutionState:
    u_hat: SpectralField
    v_hat: SpectralField
    time: float = 0.0

    def __post_init__(self):
        if self.u_hat.dual != self.v_hat.dual:
            raise ValueError("position and velocity live on different duals")

    @property
    def dual(self):
        return self.u_hat.dual

    def copy(self):
        return EvolutionState(self.u_hat.copy(), self.v_hat.copy(), self.time)


class Region(enum.Enum):
    R1 = "R1"
    R2 = "R2"


def discriminant(mu, b, m2):
    return b * b / 4 - mu - m2


def _series(z, coeffs):
    out = np.zeros_like(z)
    for c in coeffs[::-1]:
        out = out * z + c
    return out


def phi_pair(t, disc):
    """(A0, A1) with A0 = d/dt A1, A1(0) = 0, A1'(0) = 1, A1'' = disc A1."""
    t, disc = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(disc, dtype=float))
    z = disc * t * t
    A0 = np.empty(z.shape)
    A1 = np.empty(z.shape)
    small = np.abs(z) < SERIES_CUTOFF
    pos = ~small & (disc > 0)
    neg = ~small & (disc < 0)
    A0[small] = _series(z[small], _PSI)
    A1[small] = t[small] * _series(z[small], _PHI)
    w = np.sqrt(disc[pos])
    A0[pos] = np.cosh(w * t[pos])
    A1[pos] = np.sinh(w * t[pos]) / w
    w = np.sqrt(-disc[neg])
    A0[neg] = np.cos(w * t[neg])
    A1[neg] = np.sin(w * t[neg]) / w
    if A0.ndim == 0:
        return float(A0), float(A1)
    return A0, A1


def damped_phi_pair(t, disc, b):
    """exp(-b t / 2) * (A0, A1), evaluated without overflow for large t."""
    t, disc = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(disc, dtype=float))
    z = disc * t * t
    E0 = np.empty(z.shape)
    E1 = np.empty(z.shape)
    hyp = (np.abs(z) >= SERIES_CUTOFF) & (disc > 0)
    other = ~hyp
    damp = np.exp(-0.5 * b * t[other])
    a0, a1 = phi_pair(t[other], disc[other])
    E0[other] = damp * a0
    E1[other] = damp * a1
    w = np.sqrt(disc[hyp])
    th = t[hyp]
    grow = np.exp((w - 0.5 * b) * th)
    decay = np.exp(-2 * w * th)
    E0[hyp] = 0.5 * grow * (1 + decay)
    E1[hyp] = -0.5 * grow * np.expm1(-2 * w * th) / w
    return E0, E1


def evolve_mode(c0, c1, t, mu, b, m2):
    """Advance (c, c') of one mode by time t; vectorized over all arguments."""
    kappa = np.asarray(mu) + m2
    E0, E1 = damped_phi_pair(t, discriminant(mu, b, m2), b)
    c = E0 * c0 + E1 * (c1 + 0.5 * b * c0)
    cdot = E0 * c1 - E1 * (0.5 * b * c1 + kappa * c0)
    return c, cdot


def mode_mu(dual, alpha):
    """mu = lambda^(2 alpha) per flat coefficient entry."""
    return dual.entry_casimir ** alpha


def classify_region(rep, alpha):
    return Region.R1 if rep.casimir ** alpha < 1.0 / 16 else Region.R2


def decay_envelope(t, params: WaveParams, norm_kind="L2"):
    """Envelope multiplying the data norm in the linear decay estimates.

    With positive mass all three norms share A_{b,m2}(t).  Without mass the
    damped (b = 1) shapes are used: 1 + t for L2, (1+t)^(-1/2) for the
    fractional seminorm, (1+t)^(-1) for the time derivative.
    """
    t = np.asarray(t, dtype=float)
    b, m2 = params.b, params.m2
    if m2 > 0:
        out = mass_envelope(t, b, m2)
    else:
        kind = norm_kind.lower() if isinstance(norm_kind, str) else norm_kind.value
        if kind == "l2":
            out = 1 + t
        elif kind == "seminorm":
            out = (1 + t) ** -0.5
        elif kind in ("timederiv", "dt"):
            out = 1 / (1 + t)
        else:
            raise ValueError(f"unknown norm kind {norm_kind!r}")
    return float(out) if out.ndim == 0 else out


def mass_envelope(t, b, m2):
    t = np.asarray(t, dtype=float)
    q = b * b - 4 * m2
    if np.isclose(q, 0, rtol=0, atol=1e-14):
        return (t + 1) * np.exp(-0.5 * b * t)
    if q < 0:
        return np.exp(-0.5 * b * t)
    return np.exp((-0.5 * b + np.sqrt(b * b / 4 - m2)) * t)


def weight_envelope(t, params: WaveParams):
    """A_{b,m2}(t) for the weighted solution norm; 1 when there is no mass."""
    if params.m2 > 0:
        return mass_envelope(t, params.b, params.m2)
    return np.ones_like(np.asarray(t, dtype=float))


def linear_evolve(state: EvolutionState, t, params: WaveParams) -> EvolutionState:
    """Exact linear flow to absolute time ``t`` (t >= state.time)."""
    dt = t - state.time
    if dt < 0:
        raise ValueError("target time precedes the state time")
    mu = mode_mu(state.dual, params.alpha)
    c, cdot = evolve_mode(state.u_hat.data, state.v_hat.data, dt, mu, params.b, params.m2)
    real = state.u_hat.real and state.v_hat.real
    return EvolutionState(SpectralField(state.dual, c, real), SpectralField(state.dual, cdot, real), t)


def write_mode_table(path, dual, params: WaveParams):
    """CSV of rep_label, casimir, mu, disc, region for each representation."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rep_label", "casimir", "mu", "disc", "region"])
        for r in dual.reps:
            mu = r.casimir ** params.alpha
            w.writerow([" ".join(map(str, r.label)), repr(r.casimir), repr(mu),
                        repr(discriminant(mu, params.b, params.m2)),
                        classify_region(r, params.alpha).value])
