"""Scenario pipeline, Monte Carlo campaigns, CDFs and the UPA size sweep.

One realization runs: UE drop -> angular clustering -> beam steering ->
gain matrix -> greedy RB allocation -> power allocation.  Every step is
seeded from (rng_seed, realization_index) only, so any sample can be
replayed in isolation and results do not depend on the worker count.
"""

import csv
import enum
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import antenna, clustering, geometry
from .config import ScenarioConfig
from .rb_allocation import allocate_rbs
from .rsma import Network
from .sca import ScaError, run_no_rsma, run_sca

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.02


class Scenario(enum.Enum):
    WU_RSMA = 1
    CENTROID_RSMA = 2
    WU_NO_RSMA = 3

    @property
    def policy(self):
        return clustering.CENTROID if self is Scenario.CENTROID_RSMA else clustering.WORST_UE

    @property
    def rsma(self):
        return self is not Scenario.WU_NO_RSMA

    @property
    def slug(self):
        return self.name.lower()

    @classmethod
    def parse(cls, text):
        text = str(text).strip().lower()
        if text == "all":
            return list(cls)
        for s in cls:
            if text in (str(s.value), s.slug):
                return [s]
        raise ValueError(f"unknown scenario {text!r}")


@dataclass
class RealizationResult:
    scenario: Scenario
    realization: int
    se: np.ndarray | None = None  # certified per-UE SE, b/s/Hz
    min_se: float = float("nan")
    trace: list = field(default_factory=list)
    converged: bool = False
    common_power: float = 0.0
    assignments: np.ndarray | None = None
    boresights: np.ndarray | None = None
    error: str | None = None
    elapsed: float = 0.0

    @property
    def failed(self):
        return self.error is not None


def prepare_clusters(config: ScenarioConfig, realization_index):
    """UE drop and (unsteered) cluster plan shared by all scenarios."""
    ues = geometry.generate_ues(config, realization_index)
    theta, phi = geometry.angles_array(ues)
    rng = geometry.realization_rng(config.rng_seed, realization_index, stream=1)
    plan = clustering.cluster_ues(clustering.features(theta, phi), config.num_clusters,
                                  config.num_rbs, rng, config.kmeans_max_iters)
    return ues, plan


def build_network(config, ues, plan, policy):
    template = antenna.beam_template(config)
    steered = clustering.steer_clusters(plan, ues, template, policy,
                                        config.steer_resolution_deg, config.steer_padding_deg)
    gains = antenna.build_gain_matrix(clustering.beams_for(steered, template), ues)
    rb = allocate_rbs(steered.assignments, gains, config.num_rbs)
    net = Network(gains, steered.assignments, rb.rb_of, config.num_rbs, config.noise_power,
                  config.bandwidth)
    return steered, net


def run_realization(config: ScenarioConfig, realization_index, scenarios=tuple(Scenario)):
    """Run several scenarios on one realization, sharing the common steps."""
    ues, plan = prepare_clusters(config, realization_index)
    networks = {}
    out = {}
    for sc in scenarios:
        tic = time.perf_counter()
        res = RealizationResult(sc, realization_index)
        if sc.policy not in networks:
            networks[sc.policy] = build_network(config, ues, plan, sc.policy)
        steered, net = networks[sc.policy]
        res.assignments = steered.assignments
        res.boresights = steered.boresights
        try:
            solver = run_sca if sc.rsma else run_no_rsma
            sca = solver(net, config.total_power, config.sca_max_iters, config.sca_tol)
        except ScaError as exc:
            res.error = str(exc)
            res.trace = exc.trace
            log.warning("realization %d %s failed: %s", realization_index, sc.name, exc)
        else:
            res.se = sca.rates / config.bandwidth
            res.min_se = float(res.se.min())
            res.trace = sca.trace
            res.converged = sca.converged
            res.common_power = float(sca.allocation.common_power.sum())
        res.elapsed = time.perf_counter() - tic
        out[sc] = res
    return out


def run_scenario(config: ScenarioConfig, scenario: Scenario, realization_index) -> RealizationResult:
    return run_realization(config, realization_index, (scenario,))[scenario]


# -- statistics -------------------------------------------------------------------


def cdf(samples):
    """Empirical CDF: sorted values and fractions rank/N."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("cdf of an empty sample")
    return x, np.arange(1, x.size + 1) / x.size


def median(samples):
    # midpoint convention for even sample counts
    return float(np.median(np.asarray(samples, dtype=float)))


@dataclass
class CampaignResult:
    config: ScenarioConfig
    scenarios: list
    realizations: int
    results: dict  # Scenario -> list[RealizationResult], ordered by realization
    elapsed: float = 0.0

    def ok(self, sc):
        return [r for r in self.results[sc] if not r.failed]

    def samples(self, sc):
        ok = self.ok(sc)
        if not ok:
            return np.empty(0)
        return np.sort(np.concatenate([r.se for r in ok]))

    def min_se(self, sc):
        return np.array([r.min_se for r in self.ok(sc)])

    def failures(self, sc):
        return sum(r.failed for r in self.results[sc])

    def failure_fraction(self, sc):
        return self.failures(sc) / max(len(self.results[sc]), 1)

    def summary(self, sc):
        s = self.samples(sc)
        ok = self.ok(sc)
        iters = np.array([len(r.trace) - 1 for r in ok]) if ok else np.zeros(0)
        pct = {str(q): float(np.percentile(s, q)) for q in (10, 50, 90)} if s.size else {}
        return {
            "scenario": sc.value,
            "name": sc.name,
            "samples": int(s.size),
            "median_se": median(s) if s.size else None,
            "percentiles_se": pct,
            "mean_min_se": float(self.min_se(sc).mean()) if ok else None,
            "failed_realizations": self.failures(sc),
            "converged_fraction": float(np.mean([r.converged for r in ok])) if ok else None,
            "mean_iterations": float(iters.mean()) if iters.size else None,
            "max_iterations": int(iters.max()) if iters.size else None,
            "mean_seconds_per_realization": float(np.mean([r.elapsed for r in ok])) if ok else None,
        }


def _realization_job(args):
    config, idx, scenarios = args
    return run_realization(config, idx, scenarios)


def _map_realizations(config, scenarios, realizations, workers):
    jobs = [(config, i, tuple(scenarios)) for i in range(realizations)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield from pool.map(_realization_job, jobs, chunksize=1)
    else:
        yield from map(_realization_job, jobs)


def run_campaign(config: ScenarioConfig, scenarios=tuple(Scenario), realizations=1000,
                 workers=1) -> CampaignResult:
    tic = time.perf_counter()
    results = {sc: [] for sc in scenarios}
    for i, per in enumerate(_map_realizations(config, scenarios, realizations, workers)):
        for sc in scenarios:
            results[sc].append(per[sc])
        if (i + 1) % 50 == 0:
            log.info("%d/%d realizations done", i + 1, realizations)
    return CampaignResult(config, list(scenarios), realizations, results,
                          time.perf_counter() - tic)


def antenna_sweep(config: ScenarioConfig, sizes, realizations=100, workers=1):
    """Average certified min-SE of the WU-clustering + RSMA scheme per UPA size.

    Returns a list of (nx, ny, avg_min_se, failed_count).
    """
    if not sizes:
        raise ValueError("no array sizes given")
    rows = []
    for nx, ny in sizes:
        camp = run_campaign(config.replace(array_nx=nx, array_ny=ny), [Scenario.WU_RSMA],
                            realizations, workers)
        mins = camp.min_se(Scenario.WU_RSMA)
        rows.append((nx, ny, float(mins.mean()) if mins.size else float("nan"),
                     camp.failures(Scenario.WU_RSMA)))
    return rows


# -- output files -----------------------------------------------------------------

_FMT = "%.6e"


def _writer(path):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_cdf_files(camp: CampaignResult, out_dir):
    out_dir = Path(out_dir)
    columns = {}
    for sc in camp.scenarios:
        s = camp.samples(sc)
        columns[sc] = s
        fh, w = _writer(out_dir / f"cdf_{sc.slug}.csv")
        with fh:
            w.writerow(["se_bps_hz", "cum_fraction"])
            if s.size:
                x, frac = cdf(s)
                for v, f in zip(x, frac):
                    w.writerow([_FMT % v, _FMT % f])
    # all scenarios side by side, one sorted sample per row
    n = max((c.size for c in columns.values()), default=0)
    fh, w = _writer(out_dir / "cdf.csv")
    with fh:
        w.writerow(["cum_fraction"] + [f"se_{sc.slug}" for sc in camp.scenarios])
        for i in range(n):
            row = [_FMT % ((i + 1) / n)]
            row += [_FMT % columns[sc][i] if i < columns[sc].size else "" for sc in camp.scenarios]
            w.writerow(row)


def write_convergence(camp: CampaignResult, out_dir):
    fh, w = _writer(Path(out_dir) / "convergence.csv")
    with fh:
        w.writerow(["scenario", "realization", "iteration", "t", "solver_status"])
        for sc in camp.scenarios:
            for res in camp.results[sc]:
                for row in res.trace:
                    w.writerow([sc.value, res.realization, row.iteration, _FMT % row.t, row.status])


def write_sweep(rows, out_dir):
    fh, w = _writer(Path(out_dir) / "sweep.csv")
    with fh:
        w.writerow(["nx", "ny", "avg_min_se"])
        for nx, ny, avg, _ in rows:
            w.writerow([nx, ny, _FMT % avg])


def write_summary(path, config, camp=None, sweep_rows=None, extra=None):
    doc = {"config": config.to_dict()}
    if camp is not None:
        doc["realizations"] = camp.realizations
        doc["elapsed_seconds"] = camp.elapsed
        doc["scenarios"] = [camp.summary(sc) for sc in camp.scenarios]
    if sweep_rows is not None:
        doc["sweep"] = [{"nx": nx, "ny": ny, "avg_min_se": avg, "failed_realizations": f}
                        for nx, ny, avg, f in sweep_rows]
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return doc
