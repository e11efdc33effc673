"""Config-driven experiment runner.

    loglaw run --config exp.yaml [--seed N] [--workers N] [--out DIR] [--experiment NAME]
    loglaw validate --config exp.yaml
    loglaw list

Each experiment writes three files into the output directory:

    <name>.records.csv   one row per hit record / cylinder estimate / grid point
    <name>.summary.json  run manifest (config echo, version, wall time, results)
    <name>.plot.csv      x,y pairs for the log-log figure

Records are flushed row batch by row batch, so an interrupted run leaves a
file of complete rows.  Progress goes to stderr; stdout carries only the
machine-readable output of ``list`` and ``validate``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np
import yaml

from loglaw import __version__
from loglaw.catalogue import EXPERIMENTS, SYSTEMS, build_system, build_target, listing
from loglaw.errors import ConfigError, InsufficientDataError, LoglawError, SamplingFailure
from loglaw.estimators import correlation as corr
from loglaw.estimators.cylinder import conditional_dimension
from loglaw.estimators.excursion import cusp_excursion, excursion_curve, excursion_cache, geometric_grid
from loglaw.estimators.fitting import RadiusSchedule, fit_hitting_exponent
from loglaw.estimators.hitting import HitTable, default_t_max, ensemble_hits
from loglaw.estimators.section import section_check
from loglaw.hyperbolic import GeodesicFlow, liouville_sample
from loglaw.parallel import map_trajectories
from loglaw.rng import rng_stream
from loglaw.systems import Suspension

log = logging.getLogger("loglaw")

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_SAMPLING = 4
EXIT_INSUFFICIENT = 5
EXIT_FAILURE = 6

BATCH = 256


# config ---------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    name: str
    experiment: str
    system: str
    system_params: dict
    target: dict
    ensemble: int
    seed: int
    t_max: object
    output_dir: str
    workers: int | None
    options: dict

    def echo(self) -> dict:
        return {"name": self.name, "experiment": self.experiment,
                "system": {"name": self.system, "params": self.system_params}, "target": self.target,
                "ensemble": self.ensemble, "seed": self.seed, "t_max": self.t_max, "options": self.options}


_COMMON = {"name", "experiment", "system", "target", "ensemble", "seed", "t_max", "output_dir", "workers"}
_OPTIONS = {
    "hitting-exponent": {"d_expected"},
    "cylinder-dimension": {"epsilons", "samples"},
    "correlation": {"observable", "t_grid", "samples"},
    "section-check": set(),
    "excursion": {"t_grid", "band"},
    "cusp-excursion": {"t_grid"},
}


def _need(d, key, where):
    if key not in d:
        raise ConfigError(f"missing key {where}{key!r}", where + key)
    return d[key]


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", "config") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config does not parse: {exc}", "config") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping", "config")
    return raw


def _int(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{key} must be an integer", key)
    return int(v)


def parse_experiments(raw: dict, seed=None, workers=None, out=None) -> list[ExperimentConfig]:
    """Normalize a config tree into experiment configs (single or list form)."""
    defaults = {k: raw[k] for k in ("seed", "workers", "output_dir", "ensemble", "t_max") if k in raw}
    items = raw.get("experiments")
    if items is None:
        items = [{k: v for k, v in raw.items() if k not in ("workers", "output_dir")}]
    if not isinstance(items, list) or not items:
        raise ConfigError("experiments must be a non-empty list", "experiments")
    out_cfgs, names = [], set()
    for i, item in enumerate(items):
        where = f"experiments[{i}]."
        if not isinstance(item, dict):
            raise ConfigError("experiment entries must be mappings", f"experiments[{i}]")
        e = {**defaults, **item}
        kind = _need(e, "experiment", where)
        if kind not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {kind!r}", where + "experiment")
        unknown = sorted(set(e) - _COMMON - _OPTIONS[kind])
        if unknown:
            raise ConfigError(f"unknown key {unknown[0]!r}", where + unknown[0])
        sysd = _need(e, "system", where)
        if isinstance(sysd, str):
            sysd = {"name": sysd}
        if not isinstance(sysd, dict):
            raise ConfigError("system must be a name or a mapping", where + "system")
        sname = _need(sysd, "name", where + "system.")
        if sname not in SYSTEMS:
            raise ConfigError(f"unknown system {sname!r}", where + "system.name")
        target = dict(e.get("target") or {})
        name = str(e.get("name", f"{kind}-{sname}" if len(items) == 1 else f"{i:02d}-{kind}-{sname}"))
        if name in names:
            raise ConfigError(f"duplicate experiment name {name!r}", where + "name")
        names.add(name)
        cfg = ExperimentConfig(
            name=name, experiment=kind, system=sname, system_params=dict(sysd.get("params") or {}),
            target=target, ensemble=_int(e.get("ensemble", 100), where + "ensemble"),
            seed=_int(seed if seed is not None else e.get("seed", 0), where + "seed"),
            t_max=e.get("t_max"), output_dir=str(out if out is not None else e.get("output_dir", "loglaw-out")),
            workers=workers if workers is not None else (None if e.get("workers") is None
                                                          else _int(e["workers"], where + "workers")),
            options={k: e[k] for k in _OPTIONS[kind] if k in e})
        _resolve(cfg, where)
        out_cfgs.append(cfg)
    return out_cfgs


def _schedule(target: dict, where: str) -> RadiusSchedule:
    try:
        if "l_values" in target:
            return RadiusSchedule(tuple(float(v) for v in target["l_values"]))
        s = target.get("schedule")
        if s is None:
            raise ConfigError("target needs a schedule or l_values", where + "target.schedule")
        return RadiusSchedule.geometric(float(_need(s, "l0", where + "target.schedule.")),
                                        float(s.get("ratio", 0.5)), _int(s.get("count", 6), "count"))
    except (TypeError, ValueError, LoglawError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad schedule: {exc}", where + "target.schedule") from exc


def _resolve(cfg: ExperimentConfig, where: str = ""):
    """Build model and target once so every name resolves before running."""
    model = build_system(cfg.system, cfg.system_params)
    kind = cfg.experiment
    if kind == "section-check" and not isinstance(model, Suspension):
        raise ConfigError("section-check needs a suspension system", where + "system.name")
    if kind in ("excursion", "cusp-excursion") and not isinstance(model, GeodesicFlow):
        raise ConfigError(f"{kind} needs a geodesic flow", where + "system.name")
    if kind == "cusp-excursion" and model.domain.variant != "modular":
        raise ConfigError("cusp-excursion needs the modular surface", where + "system.name")
    sched = None
    if kind in ("hitting-exponent", "cylinder-dimension", "section-check"):
        sched = _schedule(cfg.target, where)
    r_max = max(0.5, sched.l_values[0]) if sched else 0.5
    target = None
    if kind != "correlation":
        target = build_target(model, cfg.system, cfg.target.get("kind", "base-ball"), cfg.target.get("center"),
                              r_max=r_max)
    return model, target, sched


# output -------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class RecordWriter:
    """Comma-separated rows with a header; every batch is flushed."""

    def __init__(self, path, header):
        self.fh = open(path, "w", newline="", encoding="utf-8")
        self.w = csv.writer(self.fh, lineterminator="\n")
        self.w.writerow(header)
        self.fh.flush()
        self.rows = 0

    def write(self, rows):
        for r in rows:
            self.w.writerow([_fmt(v) for v in r])
            self.rows += 1
        self.fh.flush()
        os.fsync(self.fh.fileno())

    def close(self):
        self.fh.close()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_plot(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


# experiments ----------------------------------------------------------------

def _t_max(cfg, sched, d_default):
    tm = cfg.t_max
    if tm is None:
        d = float(cfg.options.get("d_expected", d_default))
        return default_t_max(sched.array, d)
    if isinstance(tm, dict):
        return default_t_max(sched.array, float(tm.get("d_expected", d_default)), float(tm.get("margin", 100.0)))
    arr = np.broadcast_to(np.asarray(tm, dtype=float), sched.array.shape).copy()
    return arr


def _run_hitting(cfg, model, target, sched, rec_path):
    t_max = _t_max(cfg, sched, SYSTEMS[cfg.system].dimension)
    if cfg.target.get("kind") == "sasaki-ball" and cfg.t_max is None and "d_expected" not in cfg.options:
        t_max = default_t_max(sched.array, 2.0 * SYSTEMS[cfg.system].dimension)
    if cfg.ensemble < 30:
        raise ConfigError("hitting-exponent needs ensemble >= 30", "ensemble")
    writer = RecordWriter(rec_path, ["trajectory_id", "l", "tau", "censored", "t_max"])
    parts = []
    try:
        for lo in range(0, cfg.ensemble, BATCH):
            hi = min(cfg.ensemble, lo + BATCH)
            chunks = map_trajectories(
                lambda ids, lo=lo: ensemble_hits(model, target, sched.array, t_max, ids + lo, cfg.seed),
                hi - lo, cfg.workers)
            tab = HitTable.concat(chunks)
            parts.append(tab)
            writer.write((r.trajectory_id, r.l, r.tau, r.censored, r.t_max) for r in tab.records())
            log.info("%s: %d/%d trajectories", cfg.name, hi, cfg.ensemble)
    finally:
        writer.close()
    tab = HitTable.concat(parts)
    fit = fit_hitting_exponent(sched.array, tab.taus, tab.censored)
    plot = [(-math.log(l), m) for l, m, u in zip(fit.l_values, fit.median_log_tau, fit.used) if u]
    return fit.summary(), list(fit.warnings), (["x_neg_log_l", "y_median_log_tau"], plot)


def _run_cylinder(cfg, model, target, sched, rec_path):
    eps = cfg.options.get("epsilons", [1.0] if model.kind == "map" else [0.05, 0.1, 0.2])
    n = _int(cfg.options.get("samples", 10_000), "samples")
    de = conditional_dimension(model, target, eps, sched.l_values, n, rng_stream(cfg.seed, 0))
    writer = RecordWriter(rec_path, ["epsilon", "l", "mu_hat", "stderr", "n", "hits", "method"])
    plot = []
    try:
        for row in de.estimates:
            writer.write((c.epsilon, c.l, c.mu_hat, c.stderr, c.n, c.hits, c.method) for c in row)
            plot += [(c.epsilon, math.log(c.l), math.log(c.mu_hat)) for c in row if c.mu_hat > 0]
    finally:
        writer.close()
    return de.summary(), list(de.warnings), (["epsilon", "x_log_l", "y_log_mu"], plot)


def _observable(spec):
    spec = {"name": "cosine"} if spec is None else ({"name": spec} if isinstance(spec, str) else dict(spec))
    name = spec.get("name")
    if name == "cosine":
        return corr.cosine(tuple(spec.get("k", (1,))))
    if name == "cat-mode-series":
        return corr.cat_mode_series(float(spec.get("beta", 0.5)), tuple(spec.get("k0", (1, 0))),
                                    int(spec.get("terms", 24)))
    if name == "constant":
        return corr.constant(float(spec.get("value", 1.0)))
    raise ConfigError(f"unknown observable {name!r}", "observable.name")


def _grid(spec, default, integer=False):
    if spec is None:
        return default
    if isinstance(spec, dict):
        if "per_decade" in spec:
            return geometric_grid(float(spec.get("start", 10)), float(spec.get("stop", 1e6)),
                                  int(spec["per_decade"]))
        g = np.arange(float(spec.get("start", 0)), float(spec["stop"]), float(spec.get("step", 1)))
        return g.astype(int) if integer else g
    return np.asarray(spec, dtype=int if integer else float)


def _run_correlation(cfg, model, target, sched, rec_path):
    obs = _observable(cfg.options.get("observable"))
    t = _grid(cfg.options.get("t_grid"), np.arange(16), integer=model.kind == "map")
    n = _int(cfg.options.get("samples", 100_000), "samples")
    c = corr.correlation_curve(model, obs, obs, t, n, rng_stream(cfg.seed, 0),
                               allow_degenerate=obs.name.startswith("constant"))
    writer = RecordWriter(rec_path, ["t", "C", "noise", "supra_noise"])
    try:
        writer.write(zip(c.t, c.values, c.noise, c.used))
    finally:
        writer.close()
    plot = [(float(a), math.log(abs(b))) for a, b, u in zip(c.t, c.values, c.used) if u]
    s = c.summary()
    s["observable"] = obs.name
    return s, list(c.warnings), (["t", "y_log_abs_C"], plot)


def _run_section(cfg, model, target, sched, rec_path):
    t_max = None if cfg.t_max is None else _t_max(cfg, sched, SYSTEMS[cfg.system].dimension)
    rep = section_check(model, target, sched, cfg.ensemble, seed=cfg.seed, t_max=t_max, workers=cfg.workers)
    writer = RecordWriter(rec_path, ["trajectory_id", "l", "tau_flow", "censored", "tau_section", "residual"])
    try:
        for i in range(len(rep.residuals)):
            writer.write((i, l, rep.flow_taus[i, k], rep.flow_censored[i, k], rep.section_counts[i, k],
                          rep.residuals[i]) for k, l in enumerate(rep.l_values))
    finally:
        writer.close()
    plot = []
    for k, l in enumerate(rep.l_values):
        fl = rep.flow_fit.median_log_tau[k] if rep.flow_fit else math.nan
        se = rep.section_fit.median_log_tau[k] if rep.section_fit else math.nan
        plot.append((-math.log(l), fl, se))
    return rep.summary(), list(rep.warnings), (["x_neg_log_l", "y_flow", "y_section"], plot)


def _run_excursion(cfg, model, target, sched, rec_path, cusp=False):
    dom = model.domain
    t = _grid(cfg.options.get("t_grid"), geometric_grid(10, 1e6, 4))
    center = cfg.target.get("center")
    p = dom.center if center is None else complex(float(center[0]), float(center[1]))
    cache = None if cusp else excursion_cache(dom, p)
    seed = cfg.seed

    def job(ids):
        out = []
        for i in ids:
            u = liouville_sample(dom, rng_stream(seed, int(i)))
            if cusp:
                c = cusp_excursion(dom, u, t_grid=t, p=p)
                out.append((c.d_max, c.statistic))
            else:
                c = excursion_curve(dom, u, t_grid=t, cache=cache)
                out.append((c.d_min, c.exponent))
        return out

    res = [r for part in map_trajectories(job, cfg.ensemble, cfg.workers) for r in part]
    head = ["trajectory_id", "t", "d_max", "statistic"] if cusp else ["trajectory_id", "t", "d_min", "exponent"]
    writer = RecordWriter(rec_path, head)
    try:
        for i, (d, e) in enumerate(res):
            writer.write((i, a, b, c) for a, b, c in zip(t, d, e))
    finally:
        writer.close()
    E = np.array([e for _, e in res])
    med = np.median(E, axis=0)
    if cusp:
        summary = {"t_final": float(t[-1]), "median_statistic": float(med[-1]),
                   "statistics": [float(v) for v in E[:, -1]]}
        return summary, [], (["t", "y_median_statistic"], list(zip(t, med)))
    band = tuple(cfg.options.get("band", (0.8, 1.2)))
    fin = E[:, -1]
    summary = {"t_final": float(t[-1]), "band": list(band), "median_final_exponent": float(np.median(fin)),
               "fraction_in_band": float(np.mean((fin >= band[0]) & (fin <= band[1])))}
    return summary, [], (["t", "y_median_exponent"], list(zip(t, med)))


RUNNERS = {
    "hitting-exponent": _run_hitting,
    "cylinder-dimension": _run_cylinder,
    "correlation": _run_correlation,
    "section-check": _run_section,
    "excursion": _run_excursion,
    "cusp-excursion": lambda *a: _run_excursion(*a, cusp=True),
}


def run_experiment(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    base = os.path.join(cfg.output_dir, cfg.name)
    t0 = time.perf_counter()
    manifest = {"config": cfg.echo(), "code_version": __version__, "status": "ok"}
    code = EXIT_OK
    try:
        model, target, sched = _resolve(cfg)
        summary, warnings, (head, plot) = RUNNERS[cfg.experiment](cfg, model, target, sched,
                                                                   base + ".records.csv")
        manifest["summary"] = summary
        manifest["warnings"] = warnings
        _write_plot(base + ".plot.csv", head, plot)
    except LoglawError as exc:
        code = exit_code(exc)
        manifest.update(status="failed", error=str(exc), error_type=type(exc).__name__)
        if isinstance(exc, ConfigError) and exc.key:
            manifest["error_key"] = exc.key
        log.error("%s: %s", cfg.name, exc)
    manifest["wall_time_s"] = time.perf_counter() - t0
    _write_json(base + ".summary.json", manifest)
    return code


def exit_code(exc: Exception) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, SamplingFailure):
        return EXIT_SAMPLING
    if isinstance(exc, InsufficientDataError):
        return EXIT_INSUFFICIENT
    return EXIT_FAILURE


# entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="loglaw", description="Shrinking-target and logarithm-law experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiments of a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    run.add_argument("--workers", type=int, default=None, help="worker processes (default: LOGLAW_WORKERS or all CPUs)")
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--experiment", default=None, help="run only the experiment with this name")
    val = sub.add_parser("validate", help="check a config and print it normalized")
    val.add_argument("--config", required=True)
    val.add_argument("--experiment", default=None)
    sub.add_parser("list", help="print the sorted catalogue")
    return ap


def _select(cfgs, name):
    if name is None:
        return cfgs
    keep = [c for c in cfgs if c.name == name]
    if not keep:
        raise ConfigError(f"no experiment named {name!r}", "experiment")
    return keep


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "list":
        sys.stdout.write("\n".join(listing()) + "\n")
        return EXIT_OK
    try:
        raw = load_config(args.config)
        if args.command == "validate":
            cfgs = _select(parse_experiments(raw), args.experiment)
            sys.stdout.write(json.dumps([_clean(c.echo()) for c in cfgs], indent=2, sort_keys=True) + "\n")
            return EXIT_OK
        cfgs = _select(parse_experiments(raw, seed=args.seed, workers=args.workers, out=args.out), args.experiment)
    except ConfigError as exc:
        key = f" (key: {exc.key})" if exc.key else ""
        sys.stderr.write(f"config error: {exc}{key}\n")
        return EXIT_CONFIG
    worst = EXIT_OK
    for cfg in cfgs:
        log.info("running %s (%s on %s)", cfg.name, cfg.experiment, cfg.system)
        code = run_experiment(cfg)
        worst = worst or code
    return worst


if __name__ == "__main__":
    sys.exit(main())
