"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

import argparse
import csv
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import moments, report
from .distributions import Family, fit_battery
from .geometry import sample_layout
from .montecarlo import CampaignSpec, child_rng, STREAM_LAYOUT, run_campaign
from .precoder import Normalization

OUTPUT_DIR_ENV = "ZFSTATS_OUTPUT_DIR"

# Desk-scale presets for the three figures.
PRESETS = {
    "fig1": dict(antenna_sweep=(12, 20, 40, 60, 100), num_drops=20, fadings_per_drop=200,
                 outputs=frozenset({"kstest"}), cases=tuple(Normalization)),
    "fig2": dict(antenna_sweep=(12, 20, 40), num_drops=50, fadings_per_drop=200,
                 outputs=frozenset({"moments", "outage"}), cases=(Normalization.INSTANTANEOUS,)),
    "fig3": dict(antenna_sweep=(12, 20, 40), num_drops=50, fadings_per_drop=200,
                 outputs=frozenset({"moments", "outage"}), cases=(Normalization.AVERAGE,)),
}


class UsageError(Exception):
    pass


def _rate_grid(text):
    try:
        start, stop, steps = text.split(":")
        grid = np.linspace(float(start), float(stop), int(steps))
    except ValueError:
        raise argparse.ArgumentTypeError("expected start:stop:steps") from None
    if grid.size < 1 or np.any(grid < 0):
        raise argparse.ArgumentTypeError("rates must be nonnegative with steps >= 1")
    return grid


def _antenna_list(text):
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of integers") from None


def build_parser():
    parser = argparse.ArgumentParser(prog="zfstats", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    parser.add_argument("--log-level", default="WARNING")
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", type=Path, help="key = value config file")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("--output-dir", type=Path,
                        default=Path(os.environ.get(OUTPUT_DIR_ENV, ".")))
    sim = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    sim.add_argument("--seed", type=int, help="master seed (default: config 'seed')")
    sim.add_argument("--drops", type=int)
    sim.add_argument("--fadings", type=int)
    sim.add_argument("--workers", type=int, default=1)

    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, parents, help):
        return sub.add_parser(name, parents=parents, help=help, allow_abbrev=False)

    p = add("analytic", [common],
            "closed-form moments for every user of one seeded layout")
    p.add_argument("--antennas", type=int)
    p.add_argument("--drop", type=int, default=0, help="drop index used to seed the layout")

    p = add("simulate", [common, sim], "run a Monte Carlo campaign")
    p.add_argument("--antennas", type=_antenna_list, help="comma-separated M sweep")
    p.add_argument("--outputs", default="moments,kstest,outage")

    p = add("kstest", [common], "KS battery on a CSV sample column")
    p.add_argument("input", type=Path, help="CSV with a 'value' header")
    p.add_argument("--output", type=Path, help="write CSV here instead of stdout")

    p = add("outage", [common, sim], "analytic vs empirical outage curve")
    p.add_argument("--case", type=int, choices=(1, 2), default=1)
    p.add_argument("--family", choices=("gamma", "lognormal"), default="gamma")
    p.add_argument("--rate-grid", type=_rate_grid)
    p.add_argument("--rate-units", choices=("nats", "bits"), default="nats")
    p.add_argument("--antennas", type=int)
    p.add_argument("--output", type=Path, help="write CSV here instead of stdout")

    p = add("reproduce", [common, sim], "desk-scale figure presets")
    p.add_argument("figure", choices=sorted(PRESETS))
    return parser


def _settings(args):
    if args.config is not None and not args.config.is_file():
        raise UsageError(f"--config: file not found: {args.config}")
    return cfgmod.load_settings(args.config, args.overrides)


def _spec(args, settings, **kw):
    base_m = kw.pop("base_antennas", None) or max(kw["antenna_sweep"])
    config = cfgmod.network_config(settings, base_m)
    seed = args.seed if args.seed is not None else settings["seed"]
    if args.drops is not None:
        kw["num_drops"] = args.drops
    if args.fadings is not None:
        kw["fadings_per_drop"] = args.fadings
    return CampaignSpec(config, master_seed=seed, **kw)


def cmd_analytic(args, out):
    settings = _settings(args)
    if args.antennas is not None:
        settings["antennas"] = args.antennas
    config = cfgmod.network_config(settings)
    m, k, p = config.antennas_per_bs, config.users_per_cell, config.tx_power
    layout = sample_layout(config, child_rng(settings["seed"], STREAM_LAYOUT, 0, args.drop, 0))
    serving, interfering = moments.user_gains(layout.gains())
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["user", "case", "E_S", "Var_S", "E_I", "Var_I"])
    for case in Normalization:
        sig = moments.signal_moments(case, p, m, k, serving)
        intf = moments.interference_moments(case, p, m, k, interfering)
        for (q, kk), _ in np.ndenumerate(serving):
            w.writerow([q * k + kk, case.value, report.fmt(sig.mean[q, kk]),
                        report.fmt(sig.variance[q, kk]), report.fmt(intf.mean[q, kk]),
                        report.fmt(intf.variance[q, kk])])
    return 0


def _prepare_output_dir(path):
    """Fail before any simulation work if results cannot be written."""
    path.mkdir(parents=True, exist_ok=True)
    probe = path / ".zfstats-write-test"
    probe.write_text("")
    probe.unlink()


def cmd_simulate(args, out):
    settings = _settings(args)
    _prepare_output_dir(args.output_dir)
    sweep = args.antennas or ((settings["antennas"],) if settings["antennas"] else (12, 20, 40))
    outputs = frozenset(s.strip() for s in args.outputs.split(",") if s.strip())
    spec = _spec(args, settings, antenna_sweep=sweep, outputs=outputs)
    result = run_campaign(spec, workers=args.workers)
    for path in report.write_results(result, args.output_dir):
        print(path, file=out)
    return 0


def cmd_kstest(args, out):
    values = report.read_values(args.input)
    battery = fit_battery(values)
    dest = open(args.output, "w", newline="", encoding="utf-8") if args.output else out
    try:
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(["family", "D", "p_value", "reject_5pct"])
        for fam, res in battery.items():
            w.writerow([fam.value, report.fmt(res.statistic), report.fmt(res.p_value),
                        int(bool(res.reject_at_5pct))])
    finally:
        if args.output:
            dest.close()
    return 0


def cmd_outage(args, out):
    settings = _settings(args)
    if args.antennas is not None:
        settings["antennas"] = args.antennas
    m = settings["antennas"]
    if m is None:
        raise UsageError("--antennas (or config key 'antennas') is required")
    case = Normalization(args.case)
    family = Family(args.family)
    scale = math.log(2.0) if args.rate_units == "bits" else 1.0
    grid = None if args.rate_grid is None else args.rate_grid * scale
    spec = _spec(args, settings, antenna_sweep=(m,), outputs=frozenset({"outage"}),
                 families=(family,), rate_grid=grid)
    result = run_campaign(spec, workers=args.workers)
    summ = result.outage[(m, case, family)]
    dest = open(args.output, "w", newline="", encoding="utf-8") if args.output else out
    try:
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(["R0", "analytic_outage", "empirical_outage", "abs_error"])
        for r0, a, e in zip(summ.rates / scale, summ.analytic_mean, summ.empirical_mean):
            w.writerow([report.fmt(r0), report.fmt(a), report.fmt(e), report.fmt(abs(a - e))])
    finally:
        if args.output:
            dest.close()
    return 0


def cmd_reproduce(args, out):
    settings = _settings(args)
    _prepare_output_dir(args.output_dir)
    preset = dict(PRESETS[args.figure])
    cases = preset.pop("cases")
    spec = _spec(args, settings, **preset)
    result = run_campaign(spec, workers=args.workers)
    extra = {"figure": args.figure}
    for (m, case, fam), summ in result.outage.items():
        if case in cases:
            extra[f"rmse[M={m},case={case.value},{fam.value}]"] = report.fmt(summ.rmse)
    for path in report.write_results(result, args.output_dir, cases=cases, extra=extra):
        print(path, file=out)
    return 0


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "kstest": cmd_kstest,
    "outage": cmd_outage,
    "reproduce": cmd_reproduce,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, cfgmod.ConfigError) as exc:
        print(f"zfstats {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"zfstats {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
