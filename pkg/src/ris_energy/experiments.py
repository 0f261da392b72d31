"""Experiment recipes behind the CLI. Each returns a :class:`Table`."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .energy import (
    JointOptions,
    classify_case,
    derivative_perfect_csi,
    energy_perfect_csi,
    energy_relaxed,
    feasible_subarrays,
    optimize_joint,
    optimize_special_case,
    payload_sweep,
)
from .montecarlo import McConfig, mc_average_snr, mc_baseline_elements_off
from .quantization import RisCodebook
from .snr import (
    avg_snr_baseline_elements_off,
    avg_snr_exact_perfect,
    avg_snr_general,
    avg_snr_lower_bound,
    avg_snr_quantized_perfect_csi,
    snr_gain_general,
)
from .units import linear_to_db


@dataclass
class Table:
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    ok: bool = True  # False makes the CLI exit nonzero (failed verification)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append(list(values))

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, r)) for r in self.rows]


def point_seed(seed: int, *key: int) -> int:
    """Independent, reproducible seed for one sweep point."""
    return int(np.random.SeedSequence([seed, *key]).generate_state(1, dtype=np.uint64)[0])


def _mc(cfg: ExperimentConfig, key, mode="perfect_csi", codebook=None) -> McConfig:
    return McConfig(
        trials=cfg.run.trials,
        seed=point_seed(cfg.run.seed, *key),
        mode=mode,
        codebook=codebook or RisCodebook(None),
        workers=cfg.run.workers,
    )


def _rhos(cfg: ExperimentConfig) -> list[float]:
    return list(cfg.run.rho_db_values) if cfg.run.rho_db_values else [cfg.scenario.rho_db]


def _payloads(cfg: ExperimentConfig) -> list[float]:
    return list(cfg.plan.L_values) if cfg.plan.L_values else [cfg.plan.L]


def _bits_label(bits) -> str:
    return str(RisCodebook.parse(bits))


def snr_vs_n(cfg: ExperimentConfig) -> Table:
    """Average SNR against the number of subarrays, closed form and (trials > 0) Monte Carlo."""
    sc = cfg.channel_scenario()
    p_data = cfg.data_power()
    family = cfg.run.snr_family
    t = Table(["N", "curve", "closed_form", "closed_form_db", "mc_mean", "mc_std_error"])
    simulate = cfg.run.trials > 0

    curves = []  # (label, closed-form fn of N, Monte Carlo fn of (N, McConfig) or None)
    if family == "perfect":
        curves.append(("lower_bound", lambda N: avg_snr_lower_bound(sc, N, p_data), None))
        curves.append(("exact_perfect", lambda N: avg_snr_exact_perfect(sc, N, p_data),
                       lambda N, mc: mc_average_snr(sc, N, math.inf, p_data, mc)))
        curves.append(("baseline_elements_off", lambda N: avg_snr_baseline_elements_off(sc, N, p_data),
                       lambda N, mc: mc_baseline_elements_off(sc, N, p_data, mc)))
    elif family == "imperfect":
        cb = cfg.codebook()
        curves.append(("exact_perfect", lambda N: avg_snr_exact_perfect(sc, N, p_data), None))
        for P in cfg.run.p_pilot_values:
            curves.append((
                f"general_b{cb}_p{P:g}",
                lambda N, P=P: avg_snr_general(sc, N, p_data, P, cb.K),
                lambda N, mc, P=P: mc_average_snr(sc, N, P, p_data, mc),
            ))
    else:
        for bits in cfg.run.bits_values:
            cb = RisCodebook.parse(bits)
            if sc.rho == 0:
                closed = lambda N, cb=cb: avg_snr_quantized_perfect_csi(sc, N, p_data, cb.K)
            else:
                closed = lambda N, cb=cb: avg_snr_general(sc, N, p_data, math.inf, cb.K)
            curves.append((f"quantized_b{cb}", closed,
                           lambda N, mc: mc_average_snr(sc, N, math.inf, p_data, mc)))

    codebook = cfg.codebook() if family == "imperfect" else None
    mode = "estimated_csi" if family == "imperfect" else "perfect_csi"
    for ci, (label, closed, mc_fn) in enumerate(curves):
        if family == "quantized":
            codebook = RisCodebook.parse(cfg.run.bits_values[ci])
        for N in feasible_subarrays(sc.M):
            value = closed(N)
            mean = se = None
            if simulate and mc_fn is not None:
                est = mc_fn(N, _mc(cfg, (ci, N), mode, codebook))
                mean, se = est.mean, est.std_error
            t.add(N, label, value, linear_to_db(value), mean, se)
    t.meta["p_data"] = p_data
    return t


def energy_surface(cfg: ExperimentConfig) -> Table:
    """E(N, P_pilot) on a log grid, plus the optimizer path in the metadata."""
    sc = cfg.channel_scenario()
    plan = cfg.transmission_plan()
    Ns = np.geomspace(1, sc.M, cfg.run.grid_n)
    Ps = np.geomspace(*cfg.run.p_pilot_range, cfg.run.grid_p)
    t = Table(["N", "p_pilot", "energy", "p_data"])
    for N in Ns:
        for P in Ps:
            E = energy_relaxed(sc, plan, float(N), float(P))
            t.add(float(N), float(P), E, _p_data(sc, plan, N, P))
    res = optimize_joint(sc, plan, JointOptions(verify=cfg.run.verify))
    t.meta["trajectory"] = [{"iteration": i, "N": n, "p_pilot": p, "energy": e}
                            for i, (n, p, e) in enumerate(res.trajectory)]
    t.meta["optimum"] = _result_meta(res)
    return t


def _p_data(sc, plan, N, P):
    return sc.sigma2 * plan.gamma_d / snr_gain_general(sc, float(N), float(P), plan.K)


def _result_meta(res) -> dict:
    return {
        "n_star": res.n_star,
        "p_pilot_star": res.p_pilot_star,
        "energy_star": res.energy_star,
        "n_continuous": res.n_continuous,
        "p_pilot_continuous": res.p_pilot_continuous,
        "iterations": res.iterations,
        "converged": res.converged,
        "oracle_n": res.oracle_n,
        "oracle_energy": res.oracle_energy,
    }


def optimize(cfg: ExperimentConfig) -> Table:
    sc = cfg.channel_scenario()
    plan = cfg.transmission_plan()
    res = optimize_joint(sc, plan, JointOptions(verify=cfg.run.verify))
    meta = _result_meta(res)
    t = Table(list(meta) + ["p_data"])
    t.add(*meta.values(), res.breakdown.p_data_used)
    t.meta["optimum"] = meta
    t.ok = res.converged
    return t


def payload(cfg: ExperimentConfig) -> Table:
    plan = cfg.transmission_plan()
    t = Table(["rho_db", "L", "n_star", "p_pilot_star", "p_data", "pilot_energy", "energy"])
    for rho_db in _rhos(cfg):
        sc = cfg.channel_scenario(rho_db)
        for pt in payload_sweep(sc, plan, _payloads(cfg), workers=cfg.run.workers):
            t.add(rho_db, pt.L, pt.n_star, pt.p_pilot_star, pt.p_data, pt.pilot_energy, pt.energy)
    return t


def energy_vs_n(cfg: ExperimentConfig) -> Table:
    """Perfect-CSI energy over N: with the Jensen-bound SNR and with the exact SNR."""
    t = Table(["rho_db", "L", "N", "energy_bound", "energy_exact", "dE_dN", "case", "n_star"])
    for rho_db in _rhos(cfg):
        sc = cfg.channel_scenario(rho_db)
        for L in _payloads(cfg):
            plan = cfg.transmission_plan(L)
            case = classify_case(sc, plan).case
            n_star = optimize_special_case(sc, plan).n_star
            pilot_term = sc.sigma2 * plan.gamma_p / (sc.B * sc.cascade_gain)
            for N in feasible_subarrays(sc.M):
                exact = pilot_term * N + sc.sigma2 * plan.gamma_d * L / (sc.B * avg_snr_exact_perfect(sc, N, 1.0))
                t.add(rho_db, L, N, energy_perfect_csi(sc, plan, N), exact,
                      derivative_perfect_csi(sc, plan, N)[0], case, n_star)
    return t


def mc_verify(cfg: ExperimentConfig) -> Table:
    """Every closed form against its Monte Carlo estimate; passes at |z| <= 3."""
    sc = cfg.channel_scenario()
    p_data = cfg.data_power()
    trials = cfg.run.trials or 10_000
    M = sc.M
    Ns = sorted({1, min(16, M), M} & set(feasible_subarrays(M)))
    t = Table(["check", "N", "parameter", "closed_form", "mc_mean", "mc_std_error", "z", "passed"])
    key = 0

    def run(check, N, param, closed, estimate, one_sided=False):
        z = estimate.z_score(closed)
        ok = z >= -3 if one_sided else abs(z) <= 3
        t.add(check, N, param, closed, estimate.mean, estimate.std_error, z, ok)
        return ok

    def mc(mode="perfect_csi", cb=None):
        nonlocal key
        key += 1
        return McConfig(trials, point_seed(cfg.run.seed, 999, key), mode, cb or RisCodebook(None), cfg.run.workers)

    all_ok = True
    for N in Ns:
        est = mc_average_snr(sc, N, math.inf, p_data, mc())
        all_ok &= run("jensen_lower_bound", N, "", avg_snr_lower_bound(sc, N, p_data), est, one_sided=True)
        all_ok &= run("exact_perfect", N, "", avg_snr_exact_perfect(sc, N, p_data), est)
        all_ok &= run("baseline_elements_off", N, "",
                      avg_snr_baseline_elements_off(sc, N, p_data), mc_baseline_elements_off(sc, N, p_data, mc()))
    cb = cfg.codebook()
    for P in cfg.run.p_pilot_values:
        for N in Ns:
            est = mc_average_snr(sc, N, P, p_data, mc("estimated_csi", cb))
            all_ok &= run("general", N, f"bits={cb} p_pilot={P:g}", avg_snr_general(sc, N, p_data, P, cb.K), est)
    no_direct = sc.__class__(0.0, sc.alpha, sc.beta, sc.M, sc.sigma2, sc.B)
    for bits in (1, 2, 3):
        qb = RisCodebook(bits)
        for N in Ns:
            est = mc_average_snr(no_direct, N, math.inf, p_data, mc(cb=qb))
            all_ok &= run("quantized_perfect_csi", N, f"bits={bits}",
                          avg_snr_quantized_perfect_csi(no_direct, N, p_data, qb.K), est)
    t.ok = bool(all_ok)
    t.meta["trials"] = trials
    return t


RECIPES = {
    "snr-vs-N": snr_vs_n,
    "energy-surface": energy_surface,
    "optimize": optimize,
    "payload-sweep": payload,
    "energy-vs-N": energy_vs_n,
    "mc-verify": mc_verify,
}


def run_experiment(cfg: ExperimentConfig) -> Table:
    return RECIPES[cfg.run.experiment](cfg)
