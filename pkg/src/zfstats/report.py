"""CSV and manifest emission for campaign results.

Floats are written with ``repr`` (shortest round-trip form), so files are
byte-identical across runs that produce identical numbers.
"""

import csv
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import describe
from .moments import Kind
from .precoder import Normalization

MOMENT_STATS = (
    ("S_mean", Kind.SIGNAL, "mean"),
    ("S_var", Kind.SIGNAL, "variance"),
    ("I_mean", Kind.INTERFERENCE, "mean"),
    ("I_var", Kind.INTERFERENCE, "variance"),
)


def fmt(x):
    return repr(float(x))


def _rel(emp, ana):
    return fmt((emp - ana) / ana) if ana != 0 else "nan"


def _open(path):
    return open(path, "w", newline="", encoding="utf-8")


def write_moments(result, path, cases=(Normalization.INSTANTANEOUS, Normalization.AVERAGE)):
    spec = result.spec
    k = spec.config.users_per_cell
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "case", "drop", "user", "stat", "analytic", "empirical", "rel_error"])
        for m in spec.antenna_sweep:
            for case in cases:
                ana, emp = result.analytic[(m, case)], result.empirical[(m, case)]
                for name, kind, attr in MOMENT_STATS:
                    a = np.asarray(getattr(ana[kind], attr))
                    e = np.asarray(getattr(emp[kind], attr))
                    for (d, q, kk), av in np.ndenumerate(a):
                        ev = e[d, q, kk]
                        w.writerow([m, case.value, d, q * k + kk, name, fmt(av), fmt(ev), _rel(ev, av)])


def write_kstest(result, path):
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "family", "acceptance_rate"])
        for m, rates in result.ks_acceptance.items():
            for fam, rate in rates.items():
                w.writerow([m, fam.value, fmt(rate)])


def write_outage(result, path, cases=(Normalization.INSTANTANEOUS, Normalization.AVERAGE)):
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "case", "family", "R0", "analytic", "empirical", "rmse"])
        for (m, case, fam), summ in result.outage.items():
            if case not in cases:
                continue
            for r0, a, e in zip(summ.rates, summ.analytic_mean, summ.empirical_mean):
                w.writerow([m, case.value, fam.value, fmt(r0), fmt(a), fmt(e), fmt(summ.rmse)])


def write_manifest(result, path, extra=None):
    spec = result.spec
    lines = [
        "# zfstats run manifest",
        f"zfstats_version = {__version__}",
        f"python = {sys.version.split()[0]}",
        f"numpy = {np.__version__}",
        f"platform = {platform.platform()}",
        f"master_seed = {spec.master_seed}",
        f"num_drops = {spec.num_drops}",
        f"fadings_per_drop = {spec.fadings_per_drop}",
        f"antenna_sweep = {','.join(map(str, spec.antenna_sweep))}",
        f"outputs = {','.join(sorted(spec.outputs))}",
        f"aborted_realizations = {result.aborted} / {result.total_realizations}",
        f"wall_time_s = {result.wall_time:.3f}",
        "[config]",
        describe(spec.config),
    ]
    for key, value in (extra or {}).items():
        lines.append(f"{key} = {value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_results(result, out_dir, cases=(Normalization.INSTANTANEOUS, Normalization.AVERAGE),
                  extra=None):
    """Write every requested artifact into ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "moments" in result.spec.outputs:
        written.append(out / "moments.csv")
        write_moments(result, written[-1], cases)
    if "kstest" in result.spec.outputs and result.ks_acceptance:
        written.append(out / "kstest.csv")
        write_kstest(result, written[-1])
    if "outage" in result.spec.outputs:
        written.append(out / "outage.csv")
        write_outage(result, written[-1], cases)
    written.append(out / "manifest.txt")
    write_manifest(result, written[-1], extra)
    return written


def read_values(path):
    """Read the ``value`` column of a one-column sample CSV."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "value" not in reader.fieldnames:
            raise ValueError(f"{path}: expected a header with a 'value' column")
        return np.array([float(row["value"]) for row in reader])
