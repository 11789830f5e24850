"""Experiment runners: one named pipeline per reference result set.

Each runner produces a list of CSV rows (constant columns within a run) plus
metadata extras; ``run_experiment`` writes them next to a JSON sidecar
containing the fully resolved configuration, fits, conventions, and any
flagged positivity or convergence events.

Sweep points are independent and are dispatched to a process pool when
``threads > 1``; results are merged in sweep order, so the CSV bytes do not
depend on the worker count.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import GclsimError
from ..model import ModelOperators
from ..observables import (covariance, effective_temperature, micromotion_stats,
                           occupation, populations)
from ..propagator import steady_state
from ..semiclassics import (hysteresis_sweep, linear_response, response_continuation,
                            response_max, ringdown)
from .config import EXPERIMENTS, ExperimentConfig, params_for
from .io import write_csv, write_json

__all__ = ["RunnerResult", "run_experiment"]

POSITIVITY_FLAG = -1e-6


@dataclass
class RunnerResult:
    columns: list[str]
    rows: list[dict]
    extras: dict = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return len(self.failures) > 0


def _pmap(fn, jobs, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


# ----------------------------------------------------------------------------
# semiclassical runners
# ----------------------------------------------------------------------------

def _run_ringdown(config: ExperimentConfig, threads: int) -> RunnerResult:
    cols = ["family", "theta_over_pi", "series", "t", "amplitude", "value"]
    rows, extras, failures = [], {"gamma_eff": {}, "x0": {}}, []
    x0_cfg = config.numerics.get("x0", 0.0) or None
    spp = config.numerics.get("steps_per_period", 400)
    for family in config.families:
        for thp in config.sweep_grid:
            params = params_for(config, family, theta_over_pi=float(thp))
            try:
                res = ringdown(params, x0=x0_cfg, steps_per_period=spp)
            except GclsimError as exc:
                failures.append({"family": family, "theta_over_pi": float(thp),
                                 "error": str(exc)})
                continue
            key = f"{family},theta_over_pi={thp:.6g}"
            extras["gamma_eff"][key] = res.gamma_eff
            extras["x0"][key] = res.x0
            stride = max(1, spp // 40)
            for t, a in zip(res.times[::stride], res.amplitude[::stride]):
                rows.append({"family": family, "theta_over_pi": float(thp),
                             "series": "envelope", "t": float(t),
                             "amplitude": float(a), "value": float(a)})
            for t, a, r in zip(res.rate_times, res.rate_amplitudes, res.rates):
                rows.append({"family": family, "theta_over_pi": float(thp),
                             "series": "rate", "t": float(t),
                             "amplitude": float(a), "value": float(r)})
    return RunnerResult(cols, rows, extras, failures)


def _run_linear_response(config: ExperimentConfig, threads: int) -> RunnerResult:
    cols = ["family", "Delta", "amplitude", "phase"]
    rows = []
    w0 = config.model["omega0"]
    for family in config.families:
        params = params_for(config, family)
        for delta in config.sweep_grid:
            pt = linear_response(params, w0 + float(delta), family=family)
            rows.append({"family": family, "Delta": pt.Delta, "amplitude": pt.A,
                         "phase": pt.delta})
    return RunnerResult(cols, rows)


def _run_response_maxima(config: ExperimentConfig, threads: int) -> RunnerResult:
    cols = ["family", "theta_over_pi", "A_max", "Delta_max"]
    rows = []
    for family in config.families:
        for thp in config.sweep_grid:
            params = params_for(config, family, theta_over_pi=float(thp))
            a_max, d_max = response_max(params, family=family)
            rows.append({"family": family, "theta_over_pi": float(thp),
                         "A_max": a_max, "Delta_max": d_max})
    return RunnerResult(cols, rows)


def _sweep_job(args):
    config, family, direction = args
    grid = [float(w) for w in config.sweep_grid]
    params = params_for(config, family, omega_drive=config.model["omega0"])
    return hysteresis_sweep(
        params, grid, family=family, direction=direction,
        dwell_periods=config.numerics.get("dwell_periods", 300),
        measure_periods=config.numerics.get("measure_periods", 50),
        steps_per_period=config.numerics.get("steps_per_period", 200))


def _run_bistability(config: ExperimentConfig, threads: int) -> RunnerResult:
    cols = ["family", "method", "omega", "amplitude", "stable", "settled"]
    rows, failures = [], []
    w0 = config.model["omega0"]
    for family in config.families:
        params = params_for(config, family, omega_drive=w0)
        branch = response_continuation(params, config.sweep_grid, family=family)
        for pt in branch:
            rows.append({"family": family, "method": "continuation",
                         "omega": w0 + pt.Delta, "amplitude": pt.A,
                         "stable": int(pt.stable), "settled": 1})
    jobs = [(config, family, direction)
            for family in config.families for direction in ("forward", "backward")]
    results = _pmap(_sweep_job, jobs, threads)
    for (cfg, family, direction), trace in zip(jobs, results):
        for w, amp, settled in trace:
            rows.append({"family": family, "method": f"sweep-{direction}",
                         "omega": w, "amplitude": amp, "stable": 1,
                         "settled": int(settled)})
    return RunnerResult(cols, rows, {}, failures)


# ----------------------------------------------------------------------------
# quantum runners
# ----------------------------------------------------------------------------

def _undriven_params(config: ExperimentConfig, family: str, theta_over_pi=None):
    params = params_for(config, family, theta_over_pi=theta_over_pi)
    return params.with_(drives=())


def _ss_kwargs(config: ExperimentConfig) -> dict:
    n = config.numerics
    return {"tol": n.get("ss_tol", 1e-9), "strobe_tol": n.get("strobe_tol", 1e-8),
            "max_periods": n.get("max_periods", 2000),
            "snapshots": n.get("snapshots", 200),
            "steps_per_period": n.get("steps_per_period", 200)}


def _teff_point(args):
    config, family, thp = args
    params = _undriven_params(config, family, theta_over_pi=thp)
    report = steady_state(params, **_ss_kwargs(config))
    ops = ModelOperators.build(params)
    pops = populations(report.rho_ss, ops.h0)
    fit = effective_temperature(pops)
    n_mean = occupation(report.rho_ss, ops.x, ops.p, params.omega0)
    return {"family": family, "theta_over_pi": thp, "T_eff": fit.T_eff,
            "fit_residual": fit.fit_residual, "levels_used": fit.levels_used,
            "n_mean": n_mean, "min_eig": report.min_eig,
            "converged": int(report.converged)}, pops


def _run_teff_scan(config: ExperimentConfig, threads: int) -> RunnerResult:
    cols = ["family", "theta_over_pi", "T_eff", "fit_residual", "levels_used",
            "n_mean", "min_eig", "converged"]
    jobs = [(config, family, float(thp))
            for family in config.families for thp in config.sweep_grid]
    rows, failures = [], []
    for job, res in zip(jobs, _pmap(_teff_point_safe, jobs, threads)):
        if isinstance(res, _Failure):
            failures.append({"family": job[1], "theta_over_pi": job[2],
                             "error": res.message})
            continue
        rows.append(res[0])
    return RunnerResult(cols, rows, {}, failures)


def _run_populations(config: ExperimentConfig, threads: int) -> RunnerResult:
    cols = ["family", "theta_over_pi", "level", "energy", "population"]
    jobs = [(config, family, float(thp))
            for family in config.families for thp in config.sweep_grid]
    rows, extras, failures = [], {"T_eff": {}}, []
    for job, res in zip(jobs, _pmap(_teff_point_safe, jobs, threads)):
        if isinstance(res, _Failure):
            failures.append({"family": job[1], "theta_over_pi": job[2],
                             "error": res.message})
            continue
        row, pops = res
        extras["T_eff"][f"{job[1]},theta_over_pi={job[2]:.6g}"] = row["T_eff"]
        for n, (e, p) in enumerate(pops):
            rows.append({"family": job[1], "theta_over_pi": job[2], "level": n,
                         "energy": e, "population": p})
    return RunnerResult(cols, rows, extras, failures)


def _driven_point(args):
    config, family, ctrl, rho0 = args
    w0 = config.model["omega0"]
    u = config.model["U"]
    delta = ctrl * u if config.sweep["variable"] == "delta_over_U" else ctrl
    params = params_for(config, family, omega_drive=w0 + delta)
    report = steady_state(params, rho0=rho0, **_ss_kwargs(config))
    ops = ModelOperators.build(params)
    n_vals, r_vals, nu_vals = [], [], []
    for rho in report.snapshots:
        n_vals.append(occupation(rho, ops.x, ops.p, params.omega0))
        cov = covariance(rho, ops.x, ops.p)
        r_vals.append(cov.R)
        nu_vals.append(cov.nu_geo)
    if report.snapshots:
        n_m, n_lo, n_hi = micromotion_stats(n_vals)
        r_m, r_lo, r_hi = micromotion_stats(r_vals)
        nu_m, nu_lo, nu_hi = micromotion_stats(nu_vals)
    else:
        n_m = n_lo = n_hi = r_m = r_lo = r_hi = nu_m = nu_lo = nu_hi = float("nan")
    return {"family": family, config.sweep["variable"]: ctrl,
            "n_mean": n_m, "n_p10": n_lo, "n_p90": n_hi,
            "R_mean": r_m, "R_p10": r_lo, "R_p90": r_hi,
            "nu_geo_mean": nu_m, "nu_geo_p10": nu_lo, "nu_geo_p90": nu_hi,
            "min_eig": report.min_eig, "converged": int(report.converged)}


def _run_driven_sweep(config: ExperimentConfig, threads: int) -> RunnerResult:
    var = config.sweep["variable"]
    cols = ["family", var, "n_mean", "n_p10", "n_p90", "R_mean", "R_p10", "R_p90",
            "nu_geo_mean", "nu_geo_p10", "nu_geo_p90", "min_eig", "converged"]
    rows, failures = [], []
    extras: dict = {"initial_state": "undriven steady state per family"}
    if config.experiment == "parametric":
        extras["two_photon_convention"] = "F2 = 2 * omega0 * G"
        extras["detuning_convention"] = \
            "Delta = omega - omega0; the two-photon tone is driven at 2*omega"
    for family in config.families:
        seed = steady_state(_undriven_params(config, family), **_ss_kwargs(config))
        if not seed.converged:
            failures.append({"family": family, "error": "undriven seed state "
                             f"not converged (residual {seed.residual:.3e})"})
        jobs = [(config, family, float(c), seed.rho_ss) for c in config.sweep_grid]
        for job, res in zip(jobs, _pmap(_driven_point_safe, jobs, threads)):
            if isinstance(res, _Failure):
                failures.append({"family": family, var: job[2], "error": res.message})
                continue
            rows.append(res)
    return RunnerResult(cols, rows, extras, failures)


class _Failure:
    def __init__(self, message: str):
        self.message = message


def _teff_point_safe(job):
    try:
        return _teff_point(job)
    except GclsimError as exc:
        return _Failure(f"{type(exc).__name__}: {exc}")


def _driven_point_safe(job):
    try:
        return _driven_point(job)
    except GclsimError as exc:
        return _Failure(f"{type(exc).__name__}: {exc}")


_RUNNERS = {
    "ringdown": _run_ringdown,
    "populations": _run_populations,
    "teff-scan": _run_teff_scan,
    "linear-response": _run_linear_response,
    "response-maxima": _run_response_maxima,
    "bistability": _run_bistability,
    "fluctuations": _run_driven_sweep,
    "parametric": _run_driven_sweep,
}


def run_experiment(config: ExperimentConfig, out_dir=None, threads: int = 1) -> dict:
    """Execute the named pipeline and write <prefix>.csv + <prefix>.meta.json.

    Returns a summary dict with the output paths, the partial flag, and the
    failure list. Per-point numerical failures mark the run partial; anything
    non-numerical propagates.
    """
    t_start = time.perf_counter()
    runner = _RUNNERS[config.experiment]
    result = runner(config, threads)

    out = Path(out_dir) if out_dir is not None else Path(config.output["dir"])
    out.mkdir(parents=True, exist_ok=True)
    prefix = config.output["prefix"]
    csv_path = out / f"{prefix}.csv"
    meta_path = out / f"{prefix}.meta.json"

    positivity = [r for r in result.rows
                  if isinstance(r.get("min_eig"), float) and r["min_eig"] < POSITIVITY_FLAG]
    meta = {
        "schema_version": 1,
        "package_version": __version__,
        "resolved_config": config.resolved(),
        "sweep_grid": [float(v) for v in config.sweep_grid],
        "wall_clock_s": None,  # filled below
        "partial": result.partial,
        "diagnostics": {
            "failures": result.failures,
            "positivity_flags": [
                {k: r[k] for k in ("family", "min_eig") if k in r} for r in positivity],
            "non_converged_points": sum(
                1 for r in result.rows if r.get("converged", 1) == 0),
        },
        "extras": result.extras,
    }
    write_csv(csv_path, config.experiment, result.columns, result.rows)
    meta["wall_clock_s"] = round(time.perf_counter() - t_start, 3)
    write_json(meta_path, meta)
    return {"csv": str(csv_path), "meta": str(meta_path), "partial": result.partial,
            "failures": result.failures, "rows": len(result.rows)}
