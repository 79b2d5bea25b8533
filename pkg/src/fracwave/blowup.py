"""Finite-time blow-up: the mean functional, a comparison ODE and lifespans.

For nonnegative data the spatial mean U(t) = int u dx of a solution of
u'' + (-L)^alpha u + u' = |u|^p obeys U'' + U' >= |U|^p (Jensen), so the
solution of the equality system V'' + V' = |V|^p started from the same mean
data is a lower barrier.  Lifespans are first crossings of a large threshold.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid, solve_ivp

from .evolution import DuhamelStepper, NormTrace, SchemeConfig, initial_state
from .harmonics import GridField, GroupSpec, SpectralField, build_grid, synthesize
from .propagator import EvolutionState, WaveParams

log = logging.getLogger(__name__)

COMPARISON_ODE = "comparison"
FULL_PDE = "pde"
_METHOD_ALIASES = {"comparison": COMPARISON_ODE, "comparisonode": COMPARISON_ODE, "ode": COMPARISON_ODE,
                   "pde": FULL_PDE, "fullpde": FULL_PDE}

MIN_DT = 1e-12


@dataclass
class LifespanRecord:
    epsilon: float
    lifespan: float  # math.inf when no blow-up was seen
    method: str
    threshold: float
    flags: str = ""

    @property
    def finite(self):
        return math.isfinite(self.lifespan)


@dataclass
class BlowupDetection:
    time: float | None
    underflow: bool = False
    steps: int = 0
    final_dt: float = 0.0
    trace: NormTrace | None = None


def zero_mode(state: EvolutionState):
    """(U, U') = integrals of u and u_t, i.e. the trivial-representation coefficients."""
    u, v = state.u_hat.trivial(), state.v_hat.trivial()
    if max(abs(u.imag), abs(v.imag)) >= 1e-8 * max(1.0, abs(u), abs(v)):
        raise ValueError("mean of a real solution has an imaginary part")
    return u.real, v.real


def _comparison_rhs(p, b):
    def rhs(t, y):
        return [y[1], -b * y[1] + abs(y[0]) ** p]
    return rhs


def comparison_solution(p, V0, V1, times, b=1.0):
    """Solution of V'' + b V' = |V|^p sampled at ``times``."""
    times = np.asarray(times, dtype=float)
    sol = solve_ivp(_comparison_rhs(p, b), (0.0, float(times[-1])), [V0, V1], method="LSODA",
                    t_eval=times, rtol=1e-11, atol=1e-14)
    return sol.y[0]


def _first_crossing(rhs, y0, th, t_max, max_step=np.inf):
    ev = lambda t, y: y[0] - th
    ev.terminal, ev.direction = True, 1
    sol = solve_ivp(rhs, (0.0, t_max), y0, method="LSODA", events=ev, rtol=1e-10, atol=1e-14,
                    max_step=max_step)
    if not len(sol.t_events[0]):
        return math.inf, None
    return float(sol.t_events[0][0]), sol.y_events[0][0]


def comparison_crossings(p, V0, V1, thresholds, t_max=1e9, b=1.0):
    """First times V reaches each threshold (inf when not reached by t_max).

    The system is autonomous, so each crossing restarts the integrator at
    local time zero from the previous one; this keeps the short final phase
    resolvable when the crossing times themselves are large.
    """
    rhs = _comparison_rhs(p, b)
    t, y = 0.0, [V0, V1]
    out = []
    for th in sorted(thresholds):
        if not math.isfinite(t):
            out.append(math.inf)
            continue
        try:
            dt, y = _first_crossing(rhs, y, th, t_max - t)
        except ValueError:
            # root bracketing failed inside one very long step
            dt, y = _first_crossing(rhs, y, th, t_max - t, max_step=1e-3 * max(1.0, t))
        t += dt
        out.append(t)
    return out


def comparison_lifespan(p, U0_init, U0dot_init, threshold=1e6, t_max=1e9, b=1.0):
    """Blow-up time of V'' + b V' = |V|^p, V(0) = U0_init, V'(0) = U0dot_init.

    Crossing times of ``threshold`` and ``10 * threshold`` are combined by
    Richardson extrapolation using the asymptotic profile
    V ~ (T - t)^(-2/(p-1)), so the result estimates the vertical asymptote.
    """
    if U0_init < 0 or U0dot_init < 0 or (U0_init == 0 and U0dot_init == 0):
        raise ValueError("comparison data must be nonnegative and not both zero")
    if threshold <= max(U0_init, U0dot_init):
        raise ValueError("threshold must exceed the initial data")
    t1, t2 = comparison_crossings(p, U0_init, U0dot_init, [threshold, 10 * threshold], t_max, b)
    if not math.isfinite(t2):
        log.warning("no blow-up of the comparison ODE before t_max=%g", t_max)
        return math.inf
    r = 10.0 ** (-(p - 1) / 2)
    return t2 + r * (t2 - t1) / (1 - r)


def detect_blowup(params: WaveParams, data, cfg: SchemeConfig, threshold=1e6, t_max=50.0,
                  grid=None, record=False) -> BlowupDetection:
    """Step the PDE until sup|u| crosses ``threshold``.

    The step is halved whenever sup|u| (once above 1) more than doubles in
    one step.  Returns a BlowupDetection whose ``time`` is None if ``t_max``
    is reached; a step below 1e-12 stops the run and sets ``underflow``.
    """
    if threshold < 1e4:
        raise ValueError("threshold must be at least 1e4")
    u0, u1 = data
    state = initial_state(u0, u1)
    stepper = DuhamelStepper(state.dual, params, cfg, grid)
    F, linf = stepper.forcing(state.u_hat)
    trace = NormTrace() if record else None
    if record:
        trace.record(state, params, linf, F.trivial().real)
    dt = cfg.dt
    steps = 0
    while state.time < t_max - 1e-12:
        h = min(dt, t_max - state.time)
        with np.errstate(over="ignore", invalid="ignore"):
            new = stepper.step(state, h, F)
            new.time = state.time + h
            F_new, linf_new = stepper.forcing(new.u_hat)
        grew = not np.isfinite(linf_new) or (linf_new > 1.0 and linf_new > 2 * linf)
        if grew:
            if dt / 2 < MIN_DT:
                log.warning("step underflow at t=%.10g", state.time)
                return BlowupDetection(state.time, True, steps, dt, trace)
            dt /= 2
            continue
        steps += 1
        if linf_new >= threshold:
            # log-linear interpolation of the crossing inside the step
            frac = math.log(threshold / linf) / math.log(linf_new / linf) if linf > 0 else 1.0
            if record:
                trace.record(new, params, linf_new, F_new.trivial().real)
            return BlowupDetection(state.time + frac * h, False, steps, dt, trace)
        state, F, linf = new, F_new, linf_new
        if record:
            trace.record(state, params, linf, F.trivial().real)
    return BlowupDetection(None, False, steps, dt, trace)


def default_data(group=None):
    """u0 = u1 = 1 on Torus(2)."""
    group = group or GroupSpec.torus(2, 4)
    grid = build_grid(group)
    one = GridField(grid, np.ones(grid.size))
    return one, one


def _mean(field):
    if isinstance(field, SpectralField):
        return field.trivial().real
    return field.integral().real


def _scale(field, eps):
    if isinstance(field, SpectralField):
        return field * eps
    return GridField(field.grid, eps * field.values)


def lifespan_scan(p, epsilons, method=COMPARISON_ODE, params: WaveParams = None, data=None,
                  threshold=None, cfg: SchemeConfig = None, t_max=None, workers=1):
    """Lifespans over an epsilon sweep and the log-log slope.

    Returns (records, slope, slope_ci) where ``slope_ci`` is the 95%
    half-width of the least-squares slope of log T against log epsilon.
    Infinite lifespans are dropped from the fit with a warning.
    """
    method = _METHOD_ALIASES.get(str(method).lower().replace("_", ""), method)
    if method not in (COMPARISON_ODE, FULL_PDE):
        raise ValueError(f"unknown method {method!r}")
    eps = [float(e) for e in epsilons]
    if len(eps) < 3 or min(eps) <= 0:
        raise ValueError("need at least three positive epsilons")
    if len(eps) < 4 or math.log10(max(eps) / min(eps)) < 1.5:
        warnings.warn("lifespan sweep has fewer than 4 values or spans under 1.5 decades", RuntimeWarning)
    params = params or WaveParams(alpha=0.5, b=1.0, m2=0.0, p=p)
    data = data or default_data()
    u0, u1 = data

    if method == COMPARISON_ODE:
        threshold = threshold or 1e6
        t_max = t_max or 1e9
        m0, m1 = _mean(u0), _mean(u1)

        def run(e):
            T = comparison_lifespan(p, e * m0, e * m1, threshold, t_max, params.b)
            return LifespanRecord(e, T, method, threshold, "" if math.isfinite(T) else f"t_max={t_max:g}")
    else:
        if min(np.min(_grid_values(u0)), np.min(_grid_values(u1))) < 0:
            raise ValueError("full-PDE blow-up scan needs nonnegative data")
        threshold = threshold or 1e4
        t_max = t_max or 50.0
        cfg = cfg or SchemeConfig(dt=1e-3)

        def run(e):
            det = detect_blowup(params, (_scale(u0, e), _scale(u1, e)), cfg, threshold, t_max)
            if det.time is None:
                return LifespanRecord(e, math.inf, method, threshold, f"t_max={t_max:g}")
            return LifespanRecord(e, det.time, method, threshold, "underflow" if det.underflow else "")

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(run, eps))
    else:
        records = [run(e) for e in eps]
    slope, intercept, ci = fit_lifespan_law(records)
    return records, slope, ci


def _grid_values(field):
    if isinstance(field, SpectralField):
        return synthesize(field, build_grid(field.dual.group)).values.real
    return np.asarray(field.values).real


def fit_lifespan_law(records):
    """(slope, intercept, 95% half-width) of log T vs log eps over finite records."""
    fin = [r for r in records if r.finite]
    if len(fin) < len(records):
        warnings.warn(f"{len(records) - len(fin)} infinite lifespans excluded from the fit", RuntimeWarning)
    if len(fin) < 3:
        return math.nan, math.nan, math.nan
    x = np.log([r.epsilon for r in fin])
    y = np.log([r.lifespan for r in fin])
    res = stats.linregress(x, y)
    ci = stats.t.ppf(0.975, len(fin) - 2) * res.stderr
    return float(res.slope), float(res.intercept), float(ci)


def integrated_identity_residual(trace: NormTrace, params: WaveParams):
    """max_t |U'(t) - U'(0) + b (U(t) - U(0)) + m2 int U - int_0^t int |u|^p|.

    Time integrals use the trapezoid rule on the trace times.
    """
    t = trace.array("times")
    U = trace.array("u_mean")
    V = trace.array("v_mean")
    F = trace.array("forcing_mean")
    lhs = V - V[0] + params.b * (U - U[0]) + params.m2 * cumulative_trapezoid(U, t, initial=0.0)
    rhs = cumulative_trapezoid(F, t, initial=0.0)
    return float(np.max(np.abs(lhs - rhs)))


def write_scan_csv(path, records, comment=None):
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh)
        w.writerow(["epsilon", "lifespan", "method", "threshold", "flags"])
        for r in records:
            w.writerow([repr(r.epsilon), repr(r.lifespan), r.method, repr(r.threshold), r.flags])


def fit_summary(records, p, extra=None):
    slope, intercept, ci = fit_lifespan_law(records)
    out = {"slope": slope, "intercept": intercept, "ci": ci, "p": p, "expected_slope": 1 - p}
    if extra:
        out.update(extra)
    return out


def write_fit_json(path, summary):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
