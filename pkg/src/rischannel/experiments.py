"""Experiment drivers behind the CLI subcommands.

Each ``run_*`` function validates its configuration block, performs the
computation and returns an :class:`ExperimentResult` holding named tables.
Nothing is written to disk here; the CLI owns all file output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import config as C
from .core import co_phase_config
from .montecarlo import ScenarioParams, derive_seed, run_trials
from .multiaccess import (
    SCHEMES,
    InfeasibleAllocationError,
    MultiAccessScenario,
    UserSpec,
    noma_outage_mc,
    outage_threshold,
    sum_rate,
    user_outage,
)
from .radiation import ris_pattern
from .statistics import (
    RicianParams,
    fit_effective,
    fit_rician,
    keff_discrete,
    keff_inverse_line,
    omega_discrete,
    outage_probability,
    outage_quantile,
)


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)

    def add(self, *values):
        self.rows.append(list(values))


@dataclass
class ExperimentResult:
    tables: dict
    summary: list = field(default_factory=list)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _db(x: float) -> float:
    return 10 * math.log10(x) if x > 0 else -math.inf


# ------------------------------------------------------------------ pattern

def run_pattern(cfg: dict, seed: int, trials: int) -> ExperimentResult:
    geom = C.geometry(cfg)
    st = C.block(cfg, "steering")
    theta_in = C.angle_deg(st, "theta_in_deg", "steering", 0.0)
    theta_t = C.angle_deg(st, "theta_target_deg", "steering", 0.0)
    quant = C.quantization(st, "steering")
    pb = C.block(cfg, "pattern", required=False)
    P = C.number(pb, "pad_p", "pattern", 512, integer=True, lo=geom.m_x)
    Q = C.number(pb, "pad_q", "pattern", 512 if geom.m_y > 1 else 1, integer=True, lo=geom.m_y)
    scale = C.number(pb, "amplitude_scale", "pattern", 1.0, lo=0, lo_open=True)

    conf = co_phase_config(geom, theta_in, theta_t, quant)
    grid = ris_pattern(geom, conf, theta_in, pad=(P, Q), amplitude_scale=scale)
    t = Table(["p", "q", "theta_deg", "phi_deg", "re", "im", "magnitude_db"])
    for p, q in zip(*np.nonzero(grid.physical)):
        v = grid.values[p, q]
        t.add(int(p), int(q), math.degrees(grid.theta[p, q]), math.degrees(grid.phi[p, q]),
              float(v.real), float(v.imag), 20 * math.log10(abs(v)) if abs(v) > 0 else -math.inf)
    p, q, th, ph, val = grid.peak()
    summary = [f"peak bin ({p}, {q}) theta {math.degrees(th):.4f} deg phi {math.degrees(ph):.4f} deg |E| {abs(val):.6g}"]
    return ExperimentResult({"pattern": t}, summary)


# ------------------------------------------------------------------ shared scenario block

def _scenario_common(cfg: dict):
    sc = C.block(cfg, "scenario")
    n = C.number(sc, "n_paths", "scenario", 64, integer=True, lo=1)
    direct = C.number(sc, "direct_power", "scenario", 1.0, lo=0, lo_open=True)
    return sc, n, direct


def _closed_form(p: ScenarioParams) -> RicianParams:
    return RicianParams(keff_discrete(p.M, p.delta, p.k_0_ratio),
                        omega_discrete(p.M, p.delta, p.omega_r, p.N, p.omega_d))


# ------------------------------------------------------------------ envelope-dist

def run_envelope_dist(cfg: dict, seed: int, trials: int) -> ExperimentResult:
    sc, n_paths, direct = _scenario_common(cfg)
    M = C.number(sc, "m", "scenario", integer=True, lo=1)
    k0 = C.number(sc, "k_0", "scenario", lo=0, lo_open=True)
    delta = C.phase_step(sc, "scenario")
    dphi = C.number(sc, "delta_phi_rad", "scenario", 0.0)
    params = ScenarioParams.from_k0(M, k0, delta=delta, N=n_paths, n_omega_d=direct, delta_phi=dphi)

    batch = run_trials(params, trials, seed)
    samples = Table(["trial", "t_c", "t_s", "magnitude", "magnitude_sq"])
    for k, (c, s, r, r2) in enumerate(zip(batch.t_c, batch.t_s, batch.magnitude, batch.magnitude_sq)):
        samples.add(k, float(c), float(s), float(r), float(r2))

    eff = fit_effective(batch.value)
    mag = fit_rician(batch.magnitude)
    closed = _closed_form(params)
    fit = Table(["estimator", "k_factor", "omega_p"])
    fit.add("complex_moments", eff.k_factor, eff.omega_p)
    fit.add("magnitude_moments", mag.k_factor, mag.omega_p)
    fit.add("closed_form", closed.k_factor, closed.omega_p)
    summary = [f"K fit (complex moments) {eff.k_factor:.6g}  (magnitude moments) {mag.k_factor:.6g}  "
               f"closed form {closed.k_factor:.6g}",
               f"Omega fit {eff.omega_p:.6g}  closed form {closed.omega_p:.6g}"]
    return ExperimentResult({"samples": samples, "fit": fit}, summary)


# ------------------------------------------------------------------ keff-sweep

def keff_sweep_points(Ms, k0s, delta, n_paths, direct, trials, seed):
    """Fitted effective ``K`` for every ``(M, K_0)`` pair; returns ``{M: [(K_0, K_hat, K_mag), ...]}``."""
    out = {}
    for i, M in enumerate(Ms):
        rows = []
        for j, k0 in enumerate(k0s):
            p = ScenarioParams.from_k0(M, k0, delta=delta, N=n_paths, n_omega_d=direct)
            b = run_trials(p, trials, derive_seed(seed, i, j))
            rows.append((k0, fit_effective(b.value).k_factor, fit_rician(b.magnitude).k_factor))
        out[M] = rows
    return out


def inverse_regression(rows):
    """Least-squares ``(slope, intercept)`` of ``1/K_hat`` against ``1/K_0``."""
    x = np.array([1 / r[0] for r in rows])
    y = np.array([1 / r[1] for r in rows])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def run_keff_sweep(cfg: dict, seed: int, trials: int) -> ExperimentResult:
    sc, n_paths, direct = _scenario_common(cfg)
    delta = C.phase_step(sc, "scenario", default=1)
    sw = C.block(cfg, "sweep")
    Ms = C.number_list(sw, "m", "sweep", integer=True, lo=1)
    k0s = C.number_list(sw, "k_0", "sweep", lo=0, lo_open=True)
    if len(k0s) < 2:
        raise C.ConfigError("sweep.k_0: need at least two values for a regression")
    if delta >= 2 * math.pi:
        raise C.ConfigError("scenario.phase_bits: 'random' has no inverse line")

    pts = keff_sweep_points(Ms, k0s, delta, n_paths, direct, trials, seed)
    points = Table(["m", "k_0", "inv_k_0", "k_hat", "inv_k_hat", "k_hat_magnitude", "inv_k_closed"])
    lines = Table(["m", "slope_fit", "intercept_fit", "slope_closed", "intercept_closed"])
    summary = []
    for M, rows in pts.items():
        s_c, i_c = keff_inverse_line(M, delta)
        for k0, kh, km in rows:
            points.add(M, k0, 1 / k0, kh, 1 / kh, km, s_c / k0 + i_c)
        s_f, i_f = inverse_regression(rows)
        lines.add(M, s_f, i_f, s_c, i_c)
        summary.append(f"M={M}: slope {s_f:.5g} (closed {s_c:.5g}), intercept {i_f:.5g} (closed {i_c:.5g})")
    return ExperimentResult({"points": points, "lines": lines}, summary)


# ------------------------------------------------------------------ outage

def required_snr_db(h_sq: np.ndarray, target: float, gamma_th: float) -> float:
    """SNR at which the empirical outage of channel powers ``h_sq`` equals ``target``."""
    return _db(gamma_th / float(np.quantile(h_sq, target)))


def outage_curve(M, k0, delta, n_paths, direct, snr_db, gamma_th, trials, seed):
    """Monte Carlo and analytic outage over an SNR sweep for one configuration."""
    p = ScenarioParams.from_k0(M, k0, delta=delta, N=n_paths, n_omega_d=direct)
    h = run_trials(p, trials, seed).magnitude_sq
    closed = _closed_form(p)
    mu = gamma_th / 10 ** (np.asarray(snr_db) / 10)
    mc = np.array([np.mean(h < m) for m in mu])
    an = np.array([outage_probability(closed, m) for m in mu])
    return mc, an, h, closed


def _noma_scenario(cfg: dict) -> tuple:
    geom = C.geometry(cfg)
    nb = C.block(cfg, "noma") if "noma" in cfg else C.block(cfg, "multiaccess")
    where = "noma" if "noma" in cfg else "multiaccess"
    users_raw = nb.get("users")
    if not isinstance(users_raw, list) or len(users_raw) < 1:
        raise C.ConfigError(f"{where}.users: expected a non-empty list of users")
    users = []
    for i, u in enumerate(users_raw):
        w = f"{where}.users[{i}]"
        if not isinstance(u, dict):
            raise C.ConfigError(f"{w}: expected a mapping")
        users.append(UserSpec(theta_out=C.angle_deg(u, "theta_deg", w),
                              tau=C.number(u, "tau", w, 1.0, lo=0),
                              a=C.number(u, "a", w, 1.0 / len(users_raw), lo=0, lo_open=True, hi=1)))
    n_paths = C.number(nb, "n_paths", where, 64, integer=True, lo=1)
    direct = C.number(nb, "direct_power", where, 1.0, lo=0, lo_open=True)
    k0 = C.number(nb, "k_0", where, 1.0, lo=0, lo_open=True)
    fr = nb.get("fdma_power_fractions")
    kw = dict(
        users=tuple(users), geom=geom,
        theta_in=C.angle_deg(nb, "theta_in_deg", where, 0.0),
        theta_target=C.angle_deg(nb, "theta_target_deg", where, math.degrees(users[-1].theta_out)),
        scheme=nb.get("scheme", "noma"),
        N=n_paths, omega_d=direct / n_paths,
        c_0=math.sqrt(k0 * direct / geom.m_x) / geom.m_y,
        gamma_min=C.number(nb, "gamma_min", where, 1.0, lo=0),
        quantization=C.quantization(nb, where),
        element_pattern=bool(nb.get("element_pattern", False)),
    )
    if fr is not None:
        fr = C.number_list(nb, "fdma_power_fractions", where, lo=0)
        kw["fdma_powers"] = tuple(fr)
    try:
        sc = MultiAccessScenario(**kw)
    except ValueError as exc:
        raise C.ConfigError(f"{where}: {exc}") from exc
    return sc, nb, where


def run_outage(cfg: dict, seed: int, trials: int) -> ExperimentResult:
    sc, n_paths, direct = _scenario_common(cfg)
    k0 = C.number(sc, "k_0", "scenario", lo=0, lo_open=True)
    ob = C.block(cfg, "outage")
    snr_db = C.sweep(ob, "snr_db", "outage")
    gamma_th = C.number(ob, "gamma_th", "outage", 1.0, lo=0, lo_open=True)
    target = C.number(ob, "target_outage", "outage", 0.01, lo=0, lo_open=True, hi=0.5)
    curves_raw = ob.get("curves", [])
    if not isinstance(curves_raw, list):
        raise C.ConfigError("outage.curves: expected a list")
    curves = []
    for i, c in enumerate(curves_raw):
        w = f"outage.curves[{i}]"
        if not isinstance(c, dict):
            raise C.ConfigError(f"{w}: expected a mapping")
        M = C.number(c, "m", w, integer=True, lo=1)
        delta = C.phase_step(c, w)
        curves.append((str(c.get("label", f"m{M}")), M, delta))
    noma = None
    if "noma" in cfg:
        noma, _, _ = _noma_scenario(cfg)
        for k in range(noma.q):
            outage_threshold(k, noma.retarget(noma.theta_target))  # InfeasibleAllocationError -> exit 3
    if not curves and noma is None:
        raise C.ConfigError("outage.curves: nothing to compute (no curves and no noma block)")

    t = Table(["snr_db", "curve", "mc_outage", "analytic_outage", "binomial_sigma"])
    req = Table(["curve", "target_outage", "analytic_snr_db", "mc_snr_db"])
    summary = []
    for i, (label, M, delta) in enumerate(curves):
        mc, an, h, closed = outage_curve(M, k0, delta, n_paths, direct, snr_db, gamma_th, trials,
                                         derive_seed(seed, i))
        for s, m, a in zip(snr_db, mc, an):
            t.add(s, label, float(m), float(a), math.sqrt(a * (1 - a) / trials))
        a_db = _db(gamma_th / outage_quantile(closed, target))
        m_db = required_snr_db(h, target, gamma_th)
        req.add(label, target, a_db, m_db)
        summary.append(f"{label}: required SNR at {target:g} outage analytic {a_db:.3f} dB, MC {m_db:.3f} dB")
    if noma is not None:
        for k in range(noma.q):
            for j, s in enumerate(snr_db):
                sc_k = _with_snr(noma, s)
                a = user_outage(k, sc_k)
                m = noma_outage_mc(k, sc_k, trials, derive_seed(seed, 1000 + k, j))
                t.add(s, f"noma_user{k + 1}", m, a, math.sqrt(a * (1 - a) / trials))
    return ExperimentResult({"outage": t, "required": req}, summary)


def _with_snr(sc: MultiAccessScenario, snr_db: float) -> MultiAccessScenario:
    p = 10 ** (snr_db / 10) * sc.sigma_sq
    fp = None if sc.fdma_powers is None else tuple(f * p for f in sc.fdma_powers)
    return replace(sc, p_t=p, fdma_powers=fp)


# ------------------------------------------------------------------ ma-sumrate

def run_ma_sumrate(cfg: dict, seed: int, trials: int) -> ExperimentResult:
    sc, nb, where = _noma_scenario(cfg)
    snr_db = C.number(nb, "snr_db", where, 10.0)
    if sc.q < 2:
        raise C.ConfigError(f"{where}.users: sum rate needs two or more users")
    sw = C.block(cfg, "sweep")
    targets_deg = C.sweep(sw, "theta_target_deg", "sweep")
    for d in targets_deg:
        if not -90 < d < 90:
            raise C.ConfigError(f"sweep.theta_target_deg: {d} outside (-90, 90)")
    sc = _with_snr(sc, snr_db)
    for k in range(sc.q):
        outage_threshold(k, sc)  # InfeasibleAllocationError -> exit 3

    res = sum_rate(sc, np.radians(targets_deg), n_draws=trials, seed=seed)
    cols = ["theta_target_deg", "scheme", "sum_rate_bps_hz"] + [f"user_{k + 1}_outage" for k in range(sc.q)]
    t = Table(cols)
    for i, d in enumerate(targets_deg):
        for s in SCHEMES:
            sc_s = replace(sc.retarget(math.radians(d)), scheme=s)
            t.add(d, s, float(res.rates[s][i]), *[user_outage(k, sc_s) for k in range(sc.q)])
    summary = [f"{s}: max sum rate {res.rates[s].max():.4f} bps/Hz at {math.degrees(res.argmax(s)):.2f} deg"
               for s in SCHEMES]
    return ExperimentResult({"sumrate": t}, summary)


RUNNERS = {
    "pattern": run_pattern,
    "envelope-dist": run_envelope_dist,
    "keff-sweep": run_keff_sweep,
    "outage": run_outage,
    "ma-sumrate": run_ma_sumrate,
}

__all__ = ["RUNNERS", "Table", "ExperimentResult", "InfeasibleAllocationError", "fmt"]
