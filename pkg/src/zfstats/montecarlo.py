"""Nested drops x fading Monte Carlo campaign with reproducible per-cell seeding.

Every (drop, fading) realization gets its own generator seeded from the
master seed, so results do not depend on how work is split across threads.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import moments
from .config import ConfigError, NetworkConfig
from .distributions import Family, fit_battery
from .geometry import ChannelRealization, sample_fading, sample_layout
from .outage import analytic_outage, default_rate_grid, empirical_outage, rmse
from .precoder import (Normalization, SingularChannelError, average_normalizers, column_power,
                       coupling, powers_from_coupling, zf_raw)

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
STREAM_FADING = 0
STREAM_LAYOUT = 1
CASES = (Normalization.INSTANTANEOUS, Normalization.AVERAGE)
MAX_ABORTED_FRACTION = 0.01


def splitmix64(x):
    """SplitMix64 output function; a bijection on 64-bit integers."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def child_seed(master, stream, m, drop, fading):
    """64-bit seed for one realization.

    The index is packed as ``stream:2 | M:14 | drop:24 | fading:24`` and the
    result is ``splitmix64(master ^ splitmix64(packed))``. Both steps are
    bijections, so distinct indices always get distinct seeds.
    """
    if not (0 <= stream < 4 and 0 <= m < 1 << 14 and 0 <= drop < 1 << 24 and 0 <= fading < 1 << 24):
        raise ValueError("seed index out of range")
    packed = (stream << 62) | (m << 48) | (drop << 24) | fading
    return splitmix64((master & MASK64) ^ splitmix64(packed))


def child_rng(master, stream, m, drop, fading):
    return np.random.Generator(np.random.PCG64(child_seed(master, stream, m, drop, fading)))


def layout_for_drop(config, master_seed, drop):
    # Layouts do not depend on M, so every M in a sweep sees the same drops.
    return sample_layout(config, child_rng(master_seed, STREAM_LAYOUT, 0, drop, 0))


@dataclass(frozen=True)
class CampaignSpec:
    config: NetworkConfig
    num_drops: int = 50
    fadings_per_drop: int = 200
    antenna_sweep: tuple = (12, 20, 40)
    master_seed: int = 2021
    outputs: frozenset = frozenset({"moments", "kstest", "outage"})
    families: tuple = (Family.GAMMA, Family.LOGNORMAL)
    rate_grid: object = None  # None: chosen per (M, case) from the analytic curve
    grid_points: int = 40
    outage_cell: int = 0
    quad_tol: float = 1e-8

    def __post_init__(self):
        if self.num_drops < 1 or self.fadings_per_drop < 1:
            raise ConfigError("need at least one drop and one fading realization")
        k = self.config.users_per_cell
        bad = [m for m in self.antenna_sweep if m <= k]
        if bad:
            raise ConfigError(f"every M in the sweep must exceed K={k}; offending: {bad}")
        unknown = set(self.outputs) - {"moments", "kstest", "outage"}
        if unknown:
            raise ConfigError(f"unknown outputs: {sorted(unknown)}")
        if not 0 <= self.outage_cell < self.config.num_cells:
            raise ConfigError("outage_cell out of range")

    def config_for(self, m):
        return replace(self.config, antennas_per_bs=m)


@dataclass
class DropSamples:
    gains: np.ndarray  # (Q, Q, K)
    signal: np.ndarray  # (case, Q, K, F)
    interference: np.ndarray  # (case, Q, K, F)
    aborted: int


def simulate_drop(spec, m, drop):
    """All fading realizations of one user drop for one antenna count."""
    cfg = spec.config_for(m)
    layout = layout_for_drop(cfg, spec.master_seed, drop)
    gains = layout.gains()
    nq, k, nf = cfg.num_cells, cfg.users_per_cell, spec.fadings_per_drop
    serving, _ = moments.user_gains(gains)
    mu2_avg = average_normalizers(serving, m, k) ** 2
    sig = np.empty((2, nq, k, nf))
    intf = np.empty((2, nq, k, nf))
    aborted = 0
    for f in range(nf):
        rng = child_rng(spec.master_seed, STREAM_FADING, m, drop, f)
        real = ChannelRealization(sample_fading(rng, m, k, (nq, nq)), gains)
        try:
            w = zf_raw(real.serving())
        except SingularChannelError:
            aborted += 1
            sig[..., f] = intf[..., f] = np.nan
            continue
        c = coupling(w, real)
        mu2_inst = 1.0 / (k * column_power(w))
        sig[0, ..., f], intf[0, ..., f] = powers_from_coupling(c, mu2_inst, cfg.tx_power)
        sig[1, ..., f], intf[1, ..., f] = powers_from_coupling(c, mu2_avg, cfg.tx_power)
    return DropSamples(gains, sig, intf, aborted)


@dataclass
class OutageSummary:
    rates: np.ndarray
    analytic: np.ndarray  # (drops, users, rates)
    empirical: np.ndarray  # (drops, users, rates)
    rmse: float

    @property
    def analytic_mean(self):
        return self.analytic.mean(axis=(0, 1))

    @property
    def empirical_mean(self):
        return self.empirical.mean(axis=(0, 1))


@dataclass
class CampaignResult:
    spec: CampaignSpec
    gains: np.ndarray  # (drops, Q, Q, K)
    analytic: dict = field(default_factory=dict)  # (M, case) -> {Kind: PowerStatistics}
    empirical: dict = field(default_factory=dict)  # (M, case) -> {Kind: PowerStatistics}
    ks_acceptance: dict = field(default_factory=dict)  # M -> {Family: rate}
    outage: dict = field(default_factory=dict)  # (M, case, family) -> OutageSummary
    samples: dict = field(default_factory=dict)  # M -> list[DropSamples]
    aborted: int = 0
    total_realizations: int = 0
    wall_time: float = 0.0

    def relative_error(self, m, case, kind, stat="mean"):
        """Mean over (drop, user) of ``(empirical - analytic) / analytic``."""
        ana = getattr(self.analytic[(m, case)][kind], stat)
        emp = getattr(self.empirical[(m, case)][kind], stat)
        return float(np.mean((emp - ana) / ana))


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(*it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, which keeps the reduction ordered.
        return list(pool.map(lambda it: fn(*it), items))


def _empirical_stats(samples, case_idx, kind, case):
    x = samples[case_idx]
    count = np.sum(~np.isnan(x), axis=-1)
    mean = np.nanmean(x, axis=-1)
    var = np.nanvar(x, axis=-1, ddof=1) if x.shape[-1] > 1 else np.zeros_like(mean)
    return moments.PowerStatistics(mean, var, kind, case, moments.Source.EMPIRICAL, count)


def run_campaign(spec, workers=1, keep_samples=False):
    """Run the full protocol for every M in the sweep.

    Results are identical for any ``workers`` value: each task uses only
    its own seeds and results are gathered in task order.
    """
    t0 = time.perf_counter()
    cfg = spec.config
    nq, k = cfg.num_cells, cfg.users_per_cell
    tasks = [(spec, m, d) for m in spec.antenna_sweep for d in range(spec.num_drops)]
    log.info("simulating %d drop cells with %d worker(s)", len(tasks), workers)
    drops = _map(simulate_drop, tasks, workers)
    by_m = {m: drops[i * spec.num_drops:(i + 1) * spec.num_drops] for i, m in enumerate(spec.antenna_sweep)}

    gains = np.stack([d.gains for d in by_m[spec.antenna_sweep[0]]])
    result = CampaignResult(spec, gains)
    result.aborted = sum(d.aborted for d in drops)
    result.total_realizations = len(drops) * spec.fadings_per_drop
    if result.aborted > MAX_ABORTED_FRACTION * result.total_realizations:
        raise RuntimeError(f"{result.aborted} of {result.total_realizations} realizations aborted")

    split = [moments.user_gains(g) for g in gains]
    serving = np.stack([s for s, _ in split])  # (D, Q, K)
    interfering = np.stack([i for _, i in split])  # (D, Q, K, Q-1)

    for m in spec.antenna_sweep:
        sig = np.stack([d.signal for d in by_m[m]], axis=1)  # (case, D, Q, K, F)
        intf = np.stack([d.interference for d in by_m[m]], axis=1)
        if keep_samples:
            result.samples[m] = by_m[m]
        for ci, case in enumerate(CASES):
            result.analytic[(m, case)] = {
                moments.Kind.SIGNAL: moments.signal_moments(case, cfg.tx_power, m, k, serving),
                moments.Kind.INTERFERENCE: moments.interference_moments(
                    case, cfg.tx_power, m, k, interfering),
            }
            result.empirical[(m, case)] = {
                moments.Kind.SIGNAL: _empirical_stats(sig, ci, moments.Kind.SIGNAL, case),
                moments.Kind.INTERFERENCE: _empirical_stats(intf, ci, moments.Kind.INTERFERENCE, case),
            }
        if "kstest" in spec.outputs and spec.fadings_per_drop >= 8 and nq > 1:
            rows = intf[0].reshape(-1, spec.fadings_per_drop)
            rows = rows[~np.isnan(rows).any(axis=1)]
            battery = fit_battery(rows)
            result.ks_acceptance[m] = {
                fam: float(np.mean(~res.reject_at_5pct)) for fam, res in battery.items()
            }

    if "outage" in spec.outputs:
        _outage_phase(spec, result, by_m, serving, interfering, workers)
    result.wall_time = time.perf_counter() - t0
    return result


def _drop_outage(spec, m, case, family, rates, serving_d, interfering_d):
    cfg = spec.config
    return analytic_outage(case, family, cfg.tx_power, m, cfg.users_per_cell, cfg.noise_power,
                           serving_d, interfering_d, rates, quad_tol=spec.quad_tol)


def _outage_phase(spec, result, by_m, serving, interfering, workers):
    cfg = spec.config
    q0 = spec.outage_cell
    srv = serving[:, q0]  # (D, K)
    itf = interfering[:, q0]  # (D, K, Q-1)
    grids = {}
    for m in spec.antenna_sweep:
        for case in CASES:
            if spec.rate_grid is not None:
                grids[(m, case)] = np.asarray(spec.rate_grid, dtype=float)
                continue
            probe = min(5, spec.num_drops)

            def avg(r, m=m, case=case):
                return _drop_outage(spec, m, case, Family.GAMMA, r, srv[:probe].ravel(),
                                    itf[:probe].reshape(srv[:probe].size, itf.shape[-1])).mean(axis=0)

            grids[(m, case)] = default_rate_grid(avg, n=spec.grid_points)

    keys = [(m, case, fam) for m in spec.antenna_sweep for case in CASES for fam in spec.families]
    tasks = [(spec, m, case, fam, grids[(m, case)], srv[d], itf[d])
             for (m, case, fam) in keys for d in range(spec.num_drops)]
    values = _map(_drop_outage, tasks, workers)
    for i, (m, case, fam) in enumerate(keys):
        ana = np.stack(values[i * spec.num_drops:(i + 1) * spec.num_drops])
        ci = CASES.index(case)
        rates = grids[(m, case)]
        emp = np.stack([
            empirical_outage(d.signal[ci, q0], d.interference[ci, q0], cfg.noise_power, rates)
            for d in by_m[m]
        ])
        summary = OutageSummary(rates, ana, emp, 0.0)
        summary.rmse = rmse(summary.analytic_mean, summary.empirical_mean)
        result.outage[(m, case, fam)] = summary
