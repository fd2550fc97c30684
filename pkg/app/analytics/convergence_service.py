# app/analytics/convergence_service.py
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List
import logging
import math

import numpy as np

from app.exceptions import ConfigError
from app.services.euler_sim import linf_proxy, lp_proxy, make_field
from app.services.metrics import rate_fit
from app.services.runner import RunRecord, run

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-9
ERROR_KEYS = ("W2", "X", "V", "W1")


def _run_one(args):
    runner, scenario, frames_every = args
    return runner(scenario, frames_every=frames_every, threads=1)


class ConvergenceService:
    """eps-sweeps of the coupled run and the rate report built from them."""

    @staticmethod
    def summarize(record: RunRecord) -> Dict[str, Any]:
        """max over recorded frames of every error quantity, plus the W1 bound chain check."""
        frames = [f for f in record.frames if f.W2 is not None]
        a = np.abs(np.asarray(record.strengths, dtype=np.float64))
        errors = {key: 0.0 for key in ERROR_KEYS}
        far_field, violations = 0.0, 0
        for f in frames:
            errors["W2"] = max(errors["W2"], float(np.max(f.W2)))
            errors["X"] = max(errors["X"], float(np.max(np.hypot(*(f.X - f.Y).T))))
            errors["V"] = max(errors["V"], float(np.max(np.hypot(*(f.dX - f.dY).T))))
            errors["W1"] = max(errors["W1"], float(f.W1))
            far_field = max(far_field, float(np.max(f.F)))
            first_moment, second_moment = float(a @ f.W1i), float(a @ f.W2)
            if f.W1 > first_moment + BOUND_SLACK or first_moment > second_moment + BOUND_SLACK:
                violations += 1
        return {
            "name": record.name,
            "stopping_reason": record.stopping_reason,
            "stop_time": record.stop_time,
            "errors": errors,
            "far_field": far_field,
            "bound_violations": violations,
            "n_frames": len(record.frames),
        }

    @staticmethod
    def norm_proxies(scenario) -> Dict[str, List[float]]:
        field = make_field(scenario.patch_specs(), scenario.domain)
        return {
            "lp": [lp_proxy(field, i) for i in range(field.n_patches)],
            "linf": [linf_proxy(field, i) for i in range(field.n_patches)],
        }

    @staticmethod
    def _sweep(scenarios, runner, threads, frames_every):
        jobs = [(runner, s, frames_every) for s in scenarios]
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(_run_one, jobs))
        return [_run_one(job) for job in jobs]

    @staticmethod
    def converge(scenario, eps_list=None, runner=run, threads: int = 1, frames_every: int = None,
                 deltas=None) -> Dict[str, Any]:
        gates = scenario.converge
        eps_list = sorted((float(e) for e in (eps_list or gates.eps)), reverse=True)
        if len(eps_list) < 3:
            raise ConfigError(f"A convergence study needs at least 3 eps values, got {len(eps_list)}.")
        scenarios = [scenario.with_eps(e) for e in eps_list]
        logger.info(f"Convergence study of '{scenario.name}' over eps={eps_list}.")

        records = ConvergenceService._sweep(scenarios, runner, threads, frames_every)
        runs = []
        for eps, sub, record in zip(eps_list, scenarios, records):
            summary = ConvergenceService.summarize(record)
            summary["eps"] = eps
            summary["norms"] = ConvergenceService.norm_proxies(sub)
            runs.append(summary)

        report: Dict[str, Any] = {"scenario": scenario.name, "config_hash": scenario.config_hash,
                                  "eps": eps_list, "runs": runs, "slopes": {}, "gates": {}}

        # stopping times must not depend on eps
        t_min = gates.t_min if gates.t_min is not None else scenario.numerics.t_end
        times = [r["stop_time"] for r in runs]
        reached = all(t >= t_min - 1e-12 for t in times)
        spread = (max(times) - min(times)) / max(times) if max(times) > 0 else 0.0
        report["stop_times"] = times
        report["T_uniform"] = bool(reached and spread <= gates.uniform_T_tolerance)
        if not reached:
            logger.warning(f"Some runs stopped before t_min={t_min}: {times}; skipping rate fits.")
            report["passed"] = False
            ConvergenceService._delta_sweep(report, scenario, deltas or gates.deltas, runner, threads, frames_every)
            return report

        for key in ERROR_KEYS:
            pairs = [(r["eps"], r["errors"][key]) for r in runs]
            window = gates.windows.get(key)
            if any(err <= 0.0 for _, err in pairs):
                report["gates"][key] = {"slope": None, "window": window, "passed": False,
                                        "detail": "nonpositive errors, slope undefined"}
                continue
            slope = rate_fit(pairs)
            report["slopes"][key] = slope
            if window is not None:
                report["gates"][key] = {"slope": slope, "window": list(window),
                                        "passed": bool(window[0] <= slope <= window[1])}

        far = [r["far_field"] for r in runs]
        ratio = max(far) / min(far) if min(far) > 0 else math.inf
        report["gates"]["far_field"] = {"ratio": ratio, "limit": gates.far_field_ratio,
                                        "passed": bool(ratio < gates.far_field_ratio)}
        violations = sum(r["bound_violations"] for r in runs)
        report["gates"]["w1_bound"] = {"violations": violations, "passed": violations == 0}
        ConvergenceService._norm_gate(report, scenario, runs, gates.lp_factor)

        report["passed"] = bool(report["T_uniform"] and all(g["passed"] for g in report["gates"].values()))
        ConvergenceService._delta_sweep(report, scenario, deltas or gates.deltas, runner, threads, frames_every)
        logger.info(f"Convergence of '{scenario.name}': slopes={report['slopes']}, passed={report['passed']}.")
        return report

    @staticmethod
    def _norm_gate(report, scenario, runs, factor):
        """L^p proxies of singular patches should follow eps^(-2(1-2/p)) up to a constant factor."""
        lp = np.array([max(r["norms"]["lp"]) for r in runs])
        if not np.all(lp > 0.0):
            return
        eps = np.array([r["eps"] for r in runs])
        predicted = -2.0 * (1.0 - 2.0 / scenario.p)
        normalized = lp / eps ** predicted
        spread = float(normalized.max() / normalized.min())
        report["lp_exponent"] = rate_fit(zip(eps, lp))
        report["gates"]["lp_norm"] = {"predicted_exponent": predicted, "spread": spread,
                                      "limit": factor, "passed": bool(spread <= factor)}

    @staticmethod
    def _delta_sweep(report, scenario, deltas, runner, threads, frames_every):
        """Record stopping times and errors against delta; no pass/fail gate."""
        if not deltas:
            return
        scenarios = [scenario.with_delta(d) for d in deltas]
        records = ConvergenceService._sweep(scenarios, runner, threads, frames_every)
        report["delta_sweep"] = [
            dict(ConvergenceService.summarize(record), delta=float(d)) for d, record in zip(deltas, records)
        ]
