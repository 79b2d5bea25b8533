"""Numerical checks of the harmonic-analysis identities and decay estimates.

Every check returns a CheckReport.  Estimates stated with unspecified
constants are checked against constants calibrated once and stored in
``data/calibration.json``; a rerun passes when it stays inside the stored
regression band.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np
from scipy.integrate import solve_ivp

from .evolution import energy
from .harmonics import (GridField, GroupSpec, analyze, build_grid, get_dual, lq_norm, plancherel_norm,
                        random_band_limited, sobolev_norm, synthesize)
from .propagator import (EvolutionState, Region, WaveParams, classify_region, evolve_mode, mass_envelope,
                         mode_mu, phi_pair)

DECAY_BAND = 0.05
GN_BAND = 0.10
PLANCHEREL_TOL = {"torus": 1e-10, "so3": 1e-8}
MODE_TOL = 1e-8
CONTINUITY_TOL = 1e-9
ENERGY_TOL = 1e-5
ENERGY_SLACK = 1e-9

DEFAULT_MU = (0.0, 1 / 16, 0.25 - 1e-9, 0.25, 0.25 + 1e-9, 0.5, 10.0)
DEFAULT_BM = ((1.0, 0.0), (2.0, 2.0), (2.0, 1.0), (3.0, 2.0))
DECAY_GROUP = GroupSpec.torus(2, 8)


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_ratio: float
    worst_case: str
    tolerance: float
    samples: int
    details: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        for k in ("worst_ratio", "tolerance"):
            if not math.isfinite(d[k]):
                d[k] = str(d[k])
        return d

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: worst={self.worst_ratio:.6g} tol={self.tolerance:.6g} ({self.worst_case})"


def _report(name, worst, case, tol, samples, details=None):
    return CheckReport(name, bool(worst <= tol), float(worst), case, float(tol), int(samples), details or {})


# -- calibration store ------------------------------------------------------

def load_calibration(path=None):
    if path is None:
        text = resources.files("fracwave").joinpath("data/calibration.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return json.loads(text)


def decay_key(params: WaveParams, group=DECAY_GROUP):
    return f"decay:{group.name}:K{group.bandlimit}:alpha={params.alpha:g}:b={params.b:g}:m2={params.m2:g}"


def gn_key(group, alpha, q):
    return f"gn:{group.name}:K{group.bandlimit}:alpha={alpha:g}:q={q:g}"


# -- Plancherel -------------------------------------------------------------

def check_plancherel(group: GroupSpec, bandlimit=None, trials=20, seed=0):
    """Relative Plancherel and round-trip errors on random band-limited fields."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if bandlimit is not None:
        group = GroupSpec(group.kind, bandlimit, group.n, group.oversample)
    dual = get_dual(group)
    grid = build_grid(group)
    tol = PLANCHEREL_TOL[group.kind]
    worst, case = 0.0, "none"
    rng = np.random.default_rng(seed)
    for i in range(trials):
        spec = random_band_limited(dual, int(rng.integers(2**31)), decay_rate=float(rng.uniform(0, 1)))
        f = synthesize(spec, grid)
        back = analyze(f)
        l2 = lq_norm(f, 2)
        err_p = abs(plancherel_norm(back) - l2) / l2
        err_r = np.max(np.abs(synthesize(back, grid).values - f.values)) / np.max(np.abs(f.values))
        err = max(err_p, err_r)
        if err > worst:
            worst, case = err, f"trial {i} (plancherel {err_p:.2e}, round-trip {err_r:.2e})"
    return _report(f"plancherel[{group.name},K={group.bandlimit}]", worst, case, tol, trials)


# -- mode propagator --------------------------------------------------------

def _ode_oracle(mu, b, m2, c0, c1, t_eval):
    kappa = mu + m2
    sol = solve_ivp(lambda t, y: [y[1], -b * y[1] - kappa * y[0]], (0, float(t_eval[-1])), [c0, c1],
                    method="DOP853", t_eval=t_eval, rtol=1e-13, atol=1e-15)
    return sol.y


def check_mode_oracle(b, m2, mu_list=DEFAULT_MU, t_list=None):
    """Largest deviation of evolve_mode from an adaptive ODE solve."""
    if t_list is None:
        t_list = np.linspace(0, 20, 81)
    t_list = np.asarray(t_list, dtype=float)
    if not len(mu_list) or not len(t_list):
        raise ValueError("mu_list and t_list must be nonempty")
    worst, case = 0.0, "none"
    for mu in mu_list:
        for c0, c1 in ((1.0, 0.0), (0.0, 1.0)):
            ref = _ode_oracle(mu, b, m2, c0, c1, t_list)
            c, cdot = evolve_mode(c0, c1, t_list, mu, b, m2)
            dev = max(np.max(np.abs(c - ref[0])), np.max(np.abs(cdot - ref[1])))
            if dev > worst:
                worst, case = dev, f"mu={mu:g} data=({c0:g},{c1:g})"
    return _report(f"mode-oracle[b={b:g},m2={m2:g}]", worst, case, MODE_TOL, len(mu_list) * len(t_list))


def check_branch_continuity(t_max=20.0, offsets=(1e-12, -1e-12)):
    """phi_pair across disc = 0, relative to max(1, |value|)."""
    t = np.linspace(0, t_max, 201)
    A0, A1 = phi_pair(t, np.zeros_like(t))
    worst = 0.0
    for d in offsets:
        B0, B1 = phi_pair(t, np.full_like(t, d))
        worst = max(worst, np.max(np.abs(B0 - A0) / np.maximum(1, np.abs(A0))),
                    np.max(np.abs(B1 - A1) / np.maximum(1, np.abs(A1))))
    return _report("branch-continuity", worst, f"disc=+-{abs(offsets[0]):g}, t<={t_max:g}",
                   CONTINUITY_TOL, len(t) * len(offsets))


# -- decay estimates --------------------------------------------------------

def decay_family(dual, family_size, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(family_size):
        r0, r1 = rng.uniform(0.0, 1.5, size=2)
        u0 = random_band_limited(dual, int(rng.integers(2**31)), float(r0))
        u1 = random_band_limited(dual, int(rng.integers(2**31)), float(r1))
        out.append((u0, u1))
    return out


def decay_ratios(params: WaveParams, u0, u1, t_grid):
    """Per-norm sup ratios of one datum against its envelope."""
    dual = u0.dual
    mu = mode_mu(dual, params.alpha)
    t = np.asarray(t_grid, dtype=float)[:, None]
    c, cdot = evolve_mode(u0.data[None, :], u1.data[None, :], t, mu[None, :], params.b, params.m2)
    w = dual.entry_dim
    l2 = np.sqrt(np.sum(w * np.abs(c) ** 2, axis=1))
    semi = np.sqrt(np.sum(w * mu * np.abs(c) ** 2, axis=1))
    dtn = np.sqrt(np.sum(w * np.abs(cdot) ** 2, axis=1))
    data_norm = sobolev_norm(u0, params.alpha) + plancherel_norm(u1)
    t = t[:, 0]
    if params.m2 > 0:
        inv = 1.0 / mass_envelope(t, params.b, params.m2)
        return {"l2": float(np.max(inv * l2) / data_norm),
                "seminorm": float(np.max(inv * semi) / data_norm),
                "dt": float(np.max(inv * dtn) / data_norm)}
    l2_data = plancherel_norm(u0) + plancherel_norm(u1)
    growth = plancherel_norm(u0) + t * plancherel_norm(u1)
    return {"seminorm": float(np.max(np.sqrt(1 + t) * semi) / data_norm),
            "dt": float(np.max((1 + t) * dtn) / data_norm),
            "l2_uniform": float(np.max(l2) / l2_data),
            "l2_growth": float(np.max(l2 / growth))}


def _primary_kinds(params):
    return ("l2", "seminorm", "dt") if params.m2 > 0 else ("seminorm", "dt")


def decay_worst(params, family_size=20, t_grid=None, seed=0, group=DECAY_GROUP):
    if t_grid is None:
        t_grid = np.linspace(0, 200, 2001)
    dual = get_dual(group)
    kinds = _primary_kinds(params)
    sups = {}
    worst, case = 0.0, "none"
    for i, (u0, u1) in enumerate(decay_family(dual, family_size, seed)):
        r = decay_ratios(params, u0, u1, t_grid)
        for k, v in r.items():
            sups[k] = max(sups.get(k, 0.0), v)
        for k in kinds:
            if r[k] > worst:
                worst, case = r[k], f"datum {i}, {k}"
    return worst, case, sups


def region_partition(dual, alpha):
    """Representations in R1; on the torus and SO(3) this is only the trivial one."""
    return [r.label for r in dual.reps if classify_region(r, alpha) is Region.R1]


def check_decay_bounds(params: WaveParams, family_size=20, t_grid=None, seed=0, group=DECAY_GROUP,
                       calibration=None):
    """Sup over a random family of the envelope-normalized norms.

    Passes when the worst ratio is at most the calibrated constant times
    (1 + 5%).
    """
    if family_size < 10:
        raise ValueError("family_size must be >= 10")
    if t_grid is None:
        t_grid = np.linspace(0, 200, 2001)
    dual = get_dual(group)
    r1 = region_partition(dual, params.alpha)
    trivial = [dual.reps[0].label]
    if r1 != trivial:
        raise AssertionError(f"R1 should hold only the trivial representation, got {r1}")
    worst, case, sups = decay_worst(params, family_size, t_grid, seed, group)
    cal = (calibration or load_calibration()).get(decay_key(params, group))
    details = {"sups": sups, "R1": [list(l) for l in r1]}
    if cal is None:
        details["calibrated"] = None
        return CheckReport(f"decay[b={params.b:g},m2={params.m2:g}]", bool(np.isfinite(worst)), worst,
                           case + " (uncalibrated)", math.inf, family_size * len(t_grid), details)
    details["calibrated"] = cal
    details["drift"] = worst / cal - 1
    return _report(f"decay[b={params.b:g},m2={params.m2:g}]", worst, case, cal * (1 + DECAY_BAND),
                   family_size * len(t_grid), details)


# -- Gagliardo-Nirenberg ----------------------------------------------------

def gn_theta(n, q, alpha):
    return (n / alpha) * (0.5 - 1.0 / q)


def gn_admissible(n, q, alpha):
    """Raise ValueError naming the violated condition."""
    if n < 2 * math.floor(alpha) + 2:
        raise ValueError(f"dimension condition n >= 2[alpha]+2 fails: n={n}, alpha={alpha}")
    if q < 2:
        raise ValueError(f"q >= 2 fails: q={q}")
    if n > 2 * alpha and q > 2 * n / (n - 2 * alpha):
        raise ValueError(f"q <= 2n/(n-2 alpha) fails: q={q} > {2 * n / (n - 2 * alpha):g}")
    theta = gn_theta(n, q, alpha)
    if not 0 <= theta <= 1:
        raise ValueError(f"theta in [0,1] fails: theta={theta:g}")
    return theta


def gn_ratio(spec, alpha, q, grid, theta):
    f = synthesize(spec, grid)
    num = lq_norm(f, q)
    h = sobolev_norm(spec, alpha)
    l2 = plancherel_norm(spec)
    return num / (h ** theta * l2 ** (1 - theta))


def gn_family(dual, family_size, seed):
    """Constant field first (ratio exactly 1 on a probability measure), then random fields."""
    rng = np.random.default_rng(seed)
    const = random_band_limited(dual, 0) * 0.0
    const.data[0] = 1.0
    out = [const]
    for _ in range(family_size - 1):
        spec = random_band_limited(dual, int(rng.integers(2**31)), float(rng.uniform(0.5, 2.5)))
        spec.data[0] = rng.normal(0, 0.5)
        out.append(spec)
    return out


def gn_worst(group, alpha, q, family_size, seed):
    theta = gn_admissible(group.dimension, q, alpha)
    dual = get_dual(group)
    grid = build_grid(group.with_oversample(max(group.oversample, q / 2)))
    ratios = [gn_ratio(spec, alpha, q, grid, theta) for spec in gn_family(dual, family_size, seed)]
    i = int(np.argmax(ratios))
    return ratios[i], f"field {i}", theta, max(ratios[1:], default=math.nan)


def check_gn(group: GroupSpec, alpha, q, family_size=100, seed=0, calibration=None):
    """Worst GN ratio over a random family against the calibrated constant (+10%)."""
    worst, case, theta, random_max = gn_worst(group, alpha, q, family_size, seed)
    cal = (calibration or load_calibration()).get(gn_key(group, alpha, q))
    name = f"gn[{group.name},alpha={alpha:g},q={q:g},seed={seed}]"
    details = {"theta": theta, "calibrated": cal, "random_max": random_max}
    if cal is None:
        return CheckReport(name, bool(np.isfinite(worst)), worst, case + " (uncalibrated)", math.inf,
                           family_size, details)
    details["drift"] = worst / cal - 1
    return _report(name, worst, case, cal * (1 + GN_BAND), family_size, details)


def gn_constant(calibration=None, group=DECAY_GROUP, alpha=0.75, q=4):
    cal = (calibration or load_calibration()).get(gn_key(group, alpha, q))
    if cal is None:
        raise KeyError("no calibrated GN constant for this configuration")
    return cal * (1 + GN_BAND)


# -- energy -----------------------------------------------------------------

def energy_profile(params, state: EvolutionState, times, h=1e-5):
    """E(t) and central-difference dE/dt along the exact linear flow."""
    dual = state.dual
    mu = mode_mu(dual, params.alpha)

    def at(t):
        c, cd = evolve_mode(state.u_hat.data[None, :], state.v_hat.data[None, :],
                            np.asarray(t, dtype=float)[:, None], mu[None, :], params.b, params.m2)
        w = dual.entry_dim
        E = 0.5 * np.sum(w * (np.abs(cd) ** 2 + (mu + params.m2) * np.abs(c) ** 2), axis=1)
        return E, np.sum(w * np.abs(cd) ** 2, axis=1)

    times = np.asarray(times, dtype=float)
    E, v2 = at(times)
    Ep, _ = at(times + h)
    Em, _ = at(np.maximum(times - h, 0))
    dEdt = (Ep - Em) / (times + h - np.maximum(times - h, 0))
    return E, dEdt, v2


def check_energy_monotone(params: WaveParams, data, t_end=50.0, cfg=None, samples=None):
    """Linear flow: E nonincreasing and dE/dt = -b |u_t|^2.

    ``data`` is a pair of SpectralFields or GridFields.  Sampling follows
    ``cfg.dt`` when given.
    """
    u0, u1 = data
    if isinstance(u0, GridField):
        u0, u1 = analyze(u0), analyze(u1)
    state = EvolutionState(u0, u1, 0.0)
    if samples is None:
        dt = cfg.dt if cfg is not None else 0.05
        samples = int(round(t_end / dt)) + 1
    times = np.linspace(0, t_end, samples)
    E, dEdt, v2 = energy_profile(params, state, times)
    assert abs(E[0] - energy(state, params)) <= 1e-12 * max(1.0, E[0])
    increase = float(np.max(np.diff(E), initial=0.0))
    expected = -params.b * v2
    scale = np.maximum(np.abs(expected), np.abs(dEdt))
    # skip the endpoint t=0 where the stencil is one-sided
    mask = (scale > 0) & (times > 0)
    rel = np.abs(dEdt - expected)[mask] / scale[mask]
    worst = float(np.max(rel, initial=0.0))
    case = f"t={times[mask][np.argmax(rel)]:.4g}" if rel.size else "zero data"
    if increase > ENERGY_SLACK:
        worst, case = math.inf, f"energy increased by {increase:.3e}"
    return _report(f"energy[b={params.b:g},m2={params.m2:g}]", worst, case, ENERGY_TOL, len(times),
                   {"max_increase": increase, "E0": float(E[0]), "E_end": float(E[-1])})


# -- suites -----------------------------------------------------------------

SUITES = ("plancherel", "modes", "decay", "gn", "energy")
DECAY_PARAMS = (WaveParams(0.75, 1.0, 0.0), WaveParams(0.75, 2.0, 2.0), WaveParams(0.75, 2.0, 1.0),
                WaveParams(0.75, 3.0, 2.0))
GN_SEEDS = (0, 1, 2)


def run_suite(selector="all", calibration=None):
    if selector != "all" and selector not in SUITES:
        raise ValueError(f"unknown suite {selector!r}")
    chosen = SUITES if selector == "all" else (selector,)
    cal = calibration or load_calibration()
    reports = []
    if "plancherel" in chosen:
        reports.append(check_plancherel(GroupSpec.torus(2, 16), trials=20, seed=0))
        reports.append(check_plancherel(GroupSpec.so3(8), trials=20, seed=0))
    if "modes" in chosen:
        for b, m2 in DEFAULT_BM:
            reports.append(check_mode_oracle(b, m2))
        reports.append(check_branch_continuity())
    if "decay" in chosen:
        for params in DECAY_PARAMS:
            reports.append(check_decay_bounds(params, 20, seed=0, calibration=cal))
    if "gn" in chosen:
        for s in GN_SEEDS:
            reports.append(check_gn(DECAY_GROUP, 0.75, 4, 100, seed=s, calibration=cal))
    if "energy" in chosen:
        dual = get_dual(DECAY_GROUP)
        data = (random_band_limited(dual, 11, 0.5), random_band_limited(dual, 12, 0.5))
        reports.append(check_energy_monotone(WaveParams(0.75, 1.0, 0.0), data, 50.0))
        reports.append(check_energy_monotone(WaveParams(0.75, 2.0, 2.0), data, 50.0))
    return reports


def calibrate(path=None, seed=0):
    """Recompute every stored constant; writes JSON when ``path`` is given."""
    out = {"version": 1}
    for params in DECAY_PARAMS:
        worst, _, _ = decay_worst(params, 20, None, seed)
        out[decay_key(params)] = worst
    worst = gn_worst(DECAY_GROUP, 0.75, 4, 100, seed)[0]
    out[gn_key(DECAY_GROUP, 0.75, 4)] = worst
    if path is not None:
        with open(path, "w") as fh:
            json.dump(out, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return out
