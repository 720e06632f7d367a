"""Command-line entry point: ``rislink run | calibrate | sweep``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import (EXPERIMENTS, OUTPUT_ENV, ConfigError, RunConfig, emit_config,
                     parse_assignment, parse_config)
from .experiments import (LinkBudget, calibrate_noise_power, ensemble_member,
                          run_hardening_sweep, run_interference_escalation,
                          run_single_vs_dual_ris, parallel_map)
from .results import write_constellation_csv, write_summary, write_trace_csv

log = logging.getLogger("rislink")


def pct(x) -> str:
    return f"{100.0 * x:.1f} %"


def members(cfg: RunConfig):
    if cfg.ensemble_size == 1:
        return [(cfg.cavity, cfg.seed)]
    return [ensemble_member(cfg.cavity, cfg.seed, j) for j in range(cfg.ensemble_size)]


def resolve_budget(cfg: RunConfig) -> tuple[LinkBudget, bool]:
    """Link budget from the config, calibrating the noise power when it is unset."""
    if cfg.noise_power is not None:
        return LinkBudget(cfg.signal_power, cfg.noise_power), False
    n0 = calibrate_noise_power(members(cfg), cfg.target_evm, cfg.signal_power, cfg.optimizer)
    return LinkBudget(cfg.signal_power, n0), True


def run_dir(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir) / f"{cfg.experiment}-seed{cfg.seed}"


def _write_result(out: Path, tag: str, res):
    write_trace_csv(out / "traces" / f"{tag}_{res.label}.csv", res.trace)
    write_constellation_csv(out / "constellations" / f"{tag}_{res.label}_before.csv",
                            res.constellation_before)
    write_constellation_csv(out / "constellations" / f"{tag}_{res.label}_after.csv",
                            res.constellation_after)


def _run_members(cfg: RunConfig, budget: LinkBudget):
    if cfg.experiment == "single_vs_dual":
        fn = run_single_vs_dual_ris
        args = [(p, budget, s, cfg.optimizer) for p, s in members(cfg)]
        return [list(r) for r in parallel_map(fn, args, cfg.jobs)]
    schedule = cfg.schedule() if cfg.experiment == "escalation" else [cfg.level]
    args = [(p, budget, schedule, s, cfg.optimizer) for p, s in members(cfg)]
    return [[res for _, res in r] for r in parallel_map(run_interference_escalation, args, cfg.jobs)]


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute the configured experiment and persist its outputs."""
    stdout = stdout or sys.stdout
    out = run_dir(cfg)
    for sub in ("traces", "constellations"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(emit_config(cfg))

    budget, calibrated = resolve_budget(cfg)
    summary = {
        "experiment": cfg.experiment,
        "seed": cfg.seed,
        "signal_power": budget.signal_power,
        "noise_power": budget.noise_power,
        "noise_power_calibrated": calibrated,
        "target_evm": cfg.target_evm if calibrated else None,
    }
    lines = []

    if cfg.experiment == "hardening":
        sweep = run_hardening_sweep(cfg.m_values, cfg.realizations_per_m, budget, cfg.seed,
                                    cfg.hardening_kappa, cfg.optimizer, cfg.evm_stats, cfg.jobs)
        summary["sweep"] = sweep.summary()
        for i, m in enumerate(sweep.m_values):
            evm = sweep.mean_evm[i]
            lines.append(f"M={m}: mean |h| {sweep.mean_abs_h[i]:.4f}, std/mean "
                         f"{sweep.relative_fluctuation[i]:.4f}"
                         + ("" if evm is None else f", mean EVM {pct(evm)}"))
        lines.append("log-log slope: " + ("n/a" if sweep.slope is None else f"{sweep.slope:.3f}"))
    else:
        runs = _run_members(cfg, budget)
        records = []
        for j, (stages, (params, seed)) in enumerate(zip(runs, members(cfg))):
            for res in stages:
                _write_result(out, f"m{j:03d}", res)
            records.append({"index": j, "cavity_seed": params.seed, "seed": seed,
                            "stages": [r.summary() for r in stages]})
        summary["members"] = records
        n_stages = len(runs[0])
        pre = [float(np.median([r[k].measured_initial for r in runs])) for k in range(n_stages)]
        post = [float(np.median([r[k].measured_final for r in runs])) for k in range(n_stages)]
        summary["median_measured_initial"] = pre
        summary["median_measured_final"] = post
        if cfg.experiment == "single_vs_dual":
            lines += [f"EVM random configuration: {pct(pre[0])}",
                      f"EVM one RIS: {pct(post[0])}",
                      f"EVM two RIS: {pct(post[1])}"]
        else:
            for k, res in enumerate(runs[0]):
                lines.append(f"Int {res.level}: EVM before {pct(pre[k])}, "
                             f"after re-optimization {pct(post[k])}")

    write_summary(out / "summary.json", summary)
    for line in lines:
        print(line, file=stdout)
    print(f"results written to {out}", file=stdout)
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", "-c", help="INI run configuration file")
    p.add_argument("--seed", type=str)
    p.add_argument("--output-dir", type=str, help=f"results root (default ${OUTPUT_ENV} or ./results)")
    p.add_argument("--ensemble-size", type=str)
    p.add_argument("--jobs", type=str, help="worker processes for ensemble members")
    p.add_argument("--noise-power", type=str)
    p.add_argument("--target-evm", type=str, help="calibration target as a fraction, e.g. 0.9")
    p.add_argument("--max-loops", type=str)
    p.add_argument("--frames-per-eval", type=str)
    p.add_argument("--no-crn", action="store_true", help="fresh noise for every goal evaluation")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any configuration key; repeatable")
    p.add_argument("-v", "--verbose", action="store_true")


_FLAG_KEYS = {
    "seed": ("run", "seed"),
    "output_dir": ("run", "output_dir"),
    "ensemble_size": ("run", "ensemble_size"),
    "jobs": ("run", "jobs"),
    "noise_power": ("link", "noise_power"),
    "target_evm": ("link", "target_evm"),
    "max_loops": ("optimizer", "max_loops"),
    "frames_per_eval": ("optimizer", "frames_per_eval"),
    "experiment": ("run", "experiment"),
    "m_values": ("hardening", "m_values"),
    "realizations": ("hardening", "realizations_per_m"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rislink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment and persist its results")
    p_run.add_argument("--experiment", "-e", choices=EXPERIMENTS)
    _add_common(p_run)
    p_cal = sub.add_parser("calibrate", help="noise power reaching the target starting EVM")
    _add_common(p_cal)
    p_sweep = sub.add_parser("sweep", help="channel-hardening sweep over the pixel count")
    p_sweep.add_argument("--m-values", type=str, help="comma-separated pixel counts")
    p_sweep.add_argument("--realizations", type=str, help="realizations per pixel count")
    _add_common(p_sweep)
    return parser


def config_from_args(args) -> RunConfig:
    overrides = {}
    for name, key in _FLAG_KEYS.items():
        value = getattr(args, name, None)
        if value is not None:
            overrides[key] = value
    if args.no_crn:
        overrides[("optimizer", "crn")] = "false"
    if args.command == "sweep":
        overrides[("run", "experiment")] = "hardening"
    for item in args.set:
        key, value = parse_assignment(item)
        overrides[key] = value
    return parse_config(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "calibrate":
            cfg = replace(cfg, noise_power=None)
            budget, _ = resolve_budget(cfg)
            print(f"noise_power = {budget.noise_power!r} "
                  f"(target EVM {pct(cfg.target_evm)}, {cfg.ensemble_size} member(s))")
            return 0
        return run(cfg)
    except ConfigError as exc:
        print(f"rislink: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rislink: cannot write results: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report and exit nonzero
        log.debug("run failed", exc_info=True)
        print(f"rislink: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
