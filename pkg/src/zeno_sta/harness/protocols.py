"""Scenario execution: one function per protocol, each returning rows and a summary."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..cap import CapSpec, cap_evolve, leakage_fraction, propagated_infidelity, sector_populations
from ..errors import ConfigInvalid
from ..generators import cd_hamiltonian, identity_suite, zeno_hamiltonian
from ..metrics import trace_distance
from ..oracle import reference_states
from ..operators import TimeGrid, model_hamiltonian
from ..sme import EnsembleResult, MonitoredObservable, lindblad_evolve, sme_ensemble
from ..spectral import instantaneous_frame, spectral_projectors
from ..strobe import strobe_evolve_channel, strobe_evolve_conditioned, strobe_evolve_selective
from .config import ScenarioConfig


@dataclass
class RunResult:
    rows: list
    summary: dict
    fields: list


class _Setup:
    """Model, grid, spectral family and initial eigenvector shared by the protocols."""

    def __init__(self, cfg: ScenarioConfig):
        self.H = model_hamiltonian(cfg.model)
        self.grid = TimeGrid(cfg.T, cfg.N)
        self.frame = instantaneous_frame(self.H, self.grid)
        self.fam = spectral_projectors(self.frame)
        self.sector = int(cfg.params.get("sector", 0))
        if not 0 <= self.sector < self.fam.m:
            raise ConfigInvalid("sector", f"sector must lie in [0, {self.fam.m})")
        self.psi0 = self.frame.vectors[0][:, self.sector]

    def zeno_target(self, cfg: ScenarioConfig):
        HZ = zeno_hamiltonian(self.H, self.fam, sector=self.sector)
        return reference_states(HZ, self.grid, self.psi0, R=cfg.R, order=cfg.order)


def _fid(a, b):
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))


def run_strobe(cfg: ScenarioConfig) -> RunResult:
    s = _Setup(cfg)
    mode = cfg.params["mode"]
    t = s.grid.times
    if mode == "channel":
        rho0 = np.outer(s.psi0, s.psi0.conj())
        Ps = s.fam(t)
        res = strobe_evolve_channel(s.H, s.fam, s.grid, rho0, freeze=cfg.params["freeze"])
        pops = np.real(np.einsum("nij,ji->n", Ps[-1], res.rho))
        rows = [{"t": float(tk), "trace": float(tr)} for tk, tr in zip(t, res.traces)]
        summary = {"final_trace": float(res.traces[-1]),
                   "final_target_population": float(pops[s.sector] / res.traces[-1])}
        return RunResult(rows, summary, ["t", "trace"])
    if mode == "selective":
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, 0])))
        res = strobe_evolve_selective(s.H, s.fam, s.grid, s.psi0, rng, freeze=cfg.params["freeze"])
        outcomes = np.concatenate([[s.sector], res.outcomes])
        p = np.concatenate([[1.0], res.p_surv])
        rows = [{"t": float(tk), "outcome": int(o), "p_outcome": float(pk), "cum_prob": float(c)}
                for tk, o, pk, c in zip(t, outcomes, p, res.cum_surv)]
        summary = {"record_probability": float(res.cum_surv[-1]),
                   "stayed_in_sector": bool(np.all(res.outcomes == s.sector))}
        return RunResult(rows, summary, ["t", "outcome", "p_outcome", "cum_prob"])

    res = strobe_evolve_conditioned(s.H, s.fam, s.grid, s.psi0, sector=s.sector, freeze=cfg.params["freeze"])
    target = s.zeno_target(cfg)
    p = np.concatenate([[1.0], res.p_surv])
    leak = np.concatenate([[0.0], res.leak])
    rows = [{"t": float(t[k]), "p_surv": float(p[k]), "cum_surv": float(res.cum_surv[k]),
             "fidelity_to_target": _fid(target[k], res.states[k]), "leak_rate": float(leak[k] / s.grid.dt)}
            for k in range(len(t))]
    summary = {
        "dt": s.grid.dt,
        "infidelity": propagated_infidelity(target[-1], res.propagated),
        "step_leak": float(np.mean(res.leak)),
        "final_survival": float(res.cum_surv[-1]),
        "final_fidelity": rows[-1]["fidelity_to_target"],
    }
    return RunResult(rows, summary, list(rows[0]))


def _sme_ensemble_threaded(H, obs, grid, rho0, cfg, threads):
    M = cfg.params["M"]
    kw = dict(thin=cfg.params["thin"], scheme=cfg.params["scheme"])
    if threads <= 1 or M < 2:
        return sme_ensemble(H, obs, grid, rho0, cfg.seed, M, **kw)
    chunks = [c for c in np.array_split(np.arange(M), min(threads, M)) if len(c)]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: sme_ensemble(H, obs, grid, rho0, cfg.seed, len(c),
                                                     first_stream=int(c[0]), **kw), chunks))
    mean = sum(p.mean_states * p.M for p in parts) / M
    return EnsembleResult(parts[0].times, mean, np.concatenate([p.final_states for p in parts]), cfg.seed, M)


def run_sme(cfg: ScenarioConfig, threads: int = 1) -> RunResult:
    s = _Setup(cfg)
    x = cfg.params["x"]
    obs = MonitoredObservable(s.fam, float(cfg.params["kappa"]), None if x is None else tuple(x))
    rho0 = np.outer(s.psi0, s.psi0.conj())
    ens = _sme_ensemble_threaded(s.H, obs, s.grid, rho0, cfg, threads)
    lin = lindblad_evolve(s.H, obs, s.grid, rho0)
    idx = np.searchsorted(s.grid.times, ens.times)
    P = s.fam(ens.times)[:, s.sector]
    pop = np.real(np.einsum("kij,kji->k", P, ens.mean_states))
    lpop = np.real(np.einsum("kij,kji->k", P, lin.states[idx]))
    td = [trace_distance(a, b) for a, b in zip(ens.mean_states, lin.states[idx])]
    rows = [{"t": float(tk), "target_population": float(a), "lindblad_population": float(b),
             "trace_distance": float(c)} for tk, a, b, c in zip(ens.times, pop, lpop, td)]
    summary = {
        "kappa": obs.kappa,
        "M": ens.M,
        "final_target_population": float(pop[-1]),
        "population_error": float(1.0 - pop[-1]),
        "trace_distance": float(td[-1]),
    }
    return RunResult(rows, summary, list(rows[0]))


def run_cap(cfg: ScenarioConfig) -> RunResult:
    s = _Setup(cfg)
    kappa = float(cfg.params["kappa"])
    if cfg.params["mode"] == "multi-sector":
        lam = cfg.params["lambdas"]
        if len(lam) != s.fam.m:
            raise ConfigInvalid("lambdas", f"need {s.fam.m} weights")
        cap = CapSpec(kappa, s.fam, "multi-sector", tuple(lam))
    else:
        cap = CapSpec(kappa, s.fam, protected=s.sector)
    res = cap_evolve(s.H, cap, s.grid, s.psi0)
    pops = sector_populations(res.states, s.fam(s.grid.times))[:, s.sector]
    rows = [{"t": float(tk), "norm": float(n), "absorbed_ratio": float(a / n), "target_population": float(p)}
            for tk, n, a, p in zip(res.times, res.norms, res.absorbed_norms, pops)]
    summary = {"kappa": kappa, "final_norm": float(res.norms[-1]), "norm_monotone": res.monotone,
               "transfer": float(1.0 - pops[-1]), "lambda_offset": res.offset}
    if cap.mode == "two-sector":
        summary["leakage"] = leakage_fraction(res, kappa) if kappa > 0 else 0.0
        summary["infidelity"] = propagated_infidelity(s.zeno_target(cfg)[-1], res.final)
    return RunResult(rows, summary, list(rows[0]))


def run_cd(cfg: ScenarioConfig) -> RunResult:
    s = _Setup(cfg)
    states = reference_states(cd_hamiltonian(s.frame), s.grid, s.psi0, R=cfg.R, order=cfg.order)
    V = s.frame.vectors[:, :, s.sector]
    fid = np.abs(np.einsum("ki,ki->k", V.conj(), states)) ** 2
    rows = [{"t": float(tk), "fidelity": float(f)} for tk, f in zip(s.grid.times, fid)]
    summary = {"min_fidelity": float(fid.min()), "final_fidelity": float(fid[-1])}
    return RunResult(rows, summary, ["t", "fidelity"])


def run_identities(cfg: ScenarioConfig) -> RunResult:
    dims = cfg.params["dims"]
    if not dims or not all(isinstance(d, int) and d >= 2 for d in dims):
        raise ConfigInvalid("dims", "dims must be integers >= 2")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([cfg.seed, 0])))
    rep = identity_suite(rng, cfg.params["count"], dims)
    flags = rep.passed()
    rows = [
        {"check": "PPdotP", "value": rep.ppp_max, "threshold": 1e-10, "passed": flags["ppp"]},
        {"check": "PPddotP+2PPdotPdotP", "value": rep.second_order_max, "threshold": 1e-10,
         "passed": flags["second_order"]},
        {"check": "gamma_decomposition_rel", "value": rep.decomposition_max, "threshold": 1e-12,
         "passed": flags["decomposition"]},
        {"check": "cross_bound_violations", "value": float(rep.bound_violations), "threshold": 0.0,
         "passed": flags["cross_bound"]},
    ]
    summary = {"count": rep.count, "all_passed": all(flags.values()), "bound_ratio_max": rep.bound_ratio_max}
    return RunResult(rows, summary, ["check", "value", "threshold", "passed"])


def run(cfg: ScenarioConfig, threads: int = 1) -> RunResult:
    if cfg.protocol == "sme":
        return run_sme(cfg, threads)
    return {"strobe": run_strobe, "cap": run_cap, "cd": run_cd, "identities": run_identities}[cfg.protocol](cfg)
