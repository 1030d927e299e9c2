"""Outage probability ``P{ln(1 + S / (I + noise)) <= R0}`` for both precoder normalizations.

Rates are in nats/s/Hz throughout, so the SINR threshold is ``e^R0 - 1``.
"""

from dataclasses import dataclass

import numpy as np

from . import moments
from .distributions import Family, FittedDistribution, from_moments, gamma_from_moments
from .precoder import Normalization
from .quadrature import integrate

TAIL_PROBABILITY = 1e-9
# Seed points (fractions of the truncated interference range) for the
# adaptive subdivision; most of the mass sits well below the 1 - 1e-9 quantile.
_BREAKPOINTS = (0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.65, 0.8)


def sinr_threshold(rate):
    rate = np.asarray(rate, dtype=float)
    if np.any(rate < 0) or np.any(np.isnan(rate)):
        raise ValueError("target rate must be nonnegative")
    return np.expm1(rate)


def _batch_shape(*arrays):
    return np.broadcast_shapes(*(np.shape(a) for a in arrays))


def _lift(dist, batch, lead, trail):
    """Broadcast parameters to ``batch`` and pad with singleton axes."""
    shape = (1,) * lead + batch + (1,) * trail
    return FittedDistribution(
        dist.family,
        tuple(np.broadcast_to(p, batch).reshape(shape) for p in dist.params),
        dist.matched_mean,
        dist.matched_variance,
    )


def outage_case1(signal, interference, noise_power, rate, quad_tol=1e-8, return_error=False):
    """Outage with a random signal power (instantaneous normalization).

    Evaluates ``int_0^inf F_S((e^R0 - 1)(i + noise)) f_I(i) di`` by adaptive
    quadrature on ``[0, i_max]``, ``i_max`` being the ``1 - 1e-9`` quantile of
    the interference; the neglected tail is at most ``1e-9`` and its lower
    bound is added back.

    Distribution parameters and ``noise_power`` may be arrays (a batch of
    users); ``rate`` may be an array of target rates. The result has shape
    ``batch + rate.shape``. ``interference=None`` means no interference.

    Raises:
        QuadratureError: the subdivision budget ran out; carries the estimate.
    """
    thr = sinr_threshold(rate)
    r = thr.ndim
    noise = np.asarray(noise_power, dtype=float)
    if np.any(noise <= 0):
        raise ValueError("noise power must be positive")

    if interference is None:
        batch = _batch_shape(*signal.params, noise)
        sig = _lift(signal, batch, 0, r)
        val = sig.cdf(thr * noise.reshape(np.shape(noise) + (1,) * r))
        val = np.broadcast_to(val, batch + thr.shape).copy()
        return (val, 0.0) if return_error else val

    if interference.family not in (Family.GAMMA, Family.LOGNORMAL):
        raise ValueError("interference must be gamma or lognormal (nonnegative support)")
    batch = _batch_shape(*signal.params, *interference.params, noise)
    nb = len(batch)
    sig = _lift(signal, batch, 1, r)
    intf = _lift(interference, batch, 1, 0)
    i_max = np.broadcast_to(interference.isf(TAIL_PROBABILITY), batch)
    noise_b = np.broadcast_to(noise, batch)
    pad = (1,) * r

    def integrand(t):
        i = i_max[None, ...] * t.reshape((-1,) + (1,) * nb)
        dens = intf.pdf(i) * i_max
        x = thr * (i + noise_b).reshape(i.shape + pad)
        return sig.cdf(x) * dens.reshape(dens.shape + pad)

    res = integrate(integrand, 0.0, 1.0, tol=quad_tol, breakpoints=_BREAKPOINTS)
    edge = sig.cdf(thr * (i_max + noise_b).reshape(batch + pad))[0]
    tail = np.broadcast_to(interference.sf(i_max), batch).reshape(batch + pad)
    value = np.clip(res.value + edge * tail, 0.0, 1.0)
    err = res.error + float(np.max(tail * (1.0 - edge)))
    return (value, err) if return_error else value


def outage_case2(signal_power, interference, noise_power, rate):
    """Outage with a constant signal power (average normalization).

    ``1 - F_I(S / (e^R0 - 1) - noise)``, and 1 when that threshold is not
    positive (noise alone already breaks the target).
    """
    thr = sinr_threshold(rate)
    r = thr.ndim
    s = np.asarray(signal_power, dtype=float)
    if np.any(s <= 0):
        raise ValueError("signal power must be positive")
    noise = np.asarray(noise_power, dtype=float)
    pad = (1,) * r
    with np.errstate(divide="ignore"):
        t = s.reshape(s.shape + pad) / thr - noise.reshape(noise.shape + pad)
    if interference is None:
        return np.where(t <= 0, 1.0, 0.0)
    batch = _batch_shape(s, noise, *interference.params)
    intf = _lift(interference, batch, 0, r)
    tail = intf.sf(np.where(t > 0, t, 1.0))
    out = np.where(t <= 0, 1.0, tail)
    return float(out) if out.ndim == 0 else out


def empirical_outage(signal_samples, interference_samples, noise_power, rate):
    """Fraction of paired realizations whose rate is at or below ``R0``.

    Samples lie along the last axis; the result has shape
    ``samples.shape[:-1] + rate.shape``.
    """
    s = np.asarray(signal_samples, dtype=float)
    i = np.asarray(interference_samples, dtype=float)
    if s.shape != i.shape:
        raise ValueError(f"sample shapes differ: {s.shape} vs {i.shape}")
    if s.shape[-1] < 1:
        raise ValueError("need at least one sample")
    rate = np.asarray(rate, dtype=float)
    achieved = np.sort(np.log1p(s / (i + noise_power)), axis=-1)
    flat = achieved.reshape(-1, achieved.shape[-1])
    counts = np.stack([np.searchsorted(row, rate.ravel(), side="right") for row in flat])
    out = counts.reshape(achieved.shape[:-1] + rate.shape) / achieved.shape[-1]
    return float(out) if out.ndim == 0 else out


def rmse(curve_a, curve_b):
    a = np.asarray(curve_a, dtype=float)
    b = np.asarray(curve_b, dtype=float)
    if a.shape != b.shape or a.size == 0:
        raise ValueError("curves must be non-empty and of equal length")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def fitted_interference(case, family, p, m, k, interfering_gains):
    """Moment-matched interference distribution, or None without interferers."""
    gains = np.asarray(interfering_gains, dtype=float)
    if gains.shape[-1] == 0:
        return None
    stats = moments.interference_moments(case, p, m, k, gains)
    return from_moments(family, stats.mean, stats.variance)


def analytic_outage(case, family, p, m, k, noise_power, serving_gains, interfering_gains, rates,
                    quad_tol=1e-8):
    """Outage per user (rows) and target rate (columns) from the closed-form moments."""
    case = Normalization(case)
    intf = fitted_interference(case, family, p, m, k, interfering_gains)
    sig = moments.signal_moments(case, p, m, k, serving_gains)
    if case is Normalization.INSTANTANEOUS:
        return outage_case1(gamma_from_moments(sig.mean, sig.variance), intf, noise_power, rates,
                            quad_tol=quad_tol)
    return outage_case2(sig.mean, intf, noise_power, rates)


@dataclass(frozen=True)
class OutageCurve:
    rates: np.ndarray
    analytic: np.ndarray  # (users, rates)
    empirical: object  # (users, rates) or None
    analytic_mean: np.ndarray
    empirical_mean: object
    rmse: object


def outage_curve(case, family, p, m, k, noise_power, serving_gains, interfering_gains, rates,
                 signal_samples=None, interference_samples=None, quad_tol=1e-8):
    """Per-user analytic outage, optional empirical counterpart, and their RMSE.

    The RMSE compares the user-averaged curves.
    """
    rates = np.asarray(rates, dtype=float)
    ana = analytic_outage(case, family, p, m, k, noise_power, serving_gains, interfering_gains,
                          rates, quad_tol=quad_tol)
    ana = np.atleast_2d(ana)
    emp = emp_mean = err = None
    if signal_samples is not None:
        emp = np.atleast_2d(empirical_outage(signal_samples, interference_samples, noise_power, rates))
        emp_mean = emp.mean(axis=0)
        err = rmse(ana.mean(axis=0), emp_mean)
    return OutageCurve(rates, ana, emp, ana.mean(axis=0), emp_mean, err)


def default_rate_grid(average_outage, n=40, low=0.01, high=0.99, span=(1e-4, 50.0), coarse=60):
    """Log-spaced rates covering the ``[low, high]`` band of an outage curve.

    ``average_outage`` maps an array of rates to the (user-averaged) analytic
    outage at those rates.
    """
    probe = np.geomspace(span[0], span[1], coarse)
    curve = np.maximum.accumulate(np.asarray(average_outage(probe), dtype=float))
    logp = np.log(probe)
    lo = np.interp(low, curve, logp) if curve[0] < low else logp[0]
    hi = np.interp(high, curve, logp) if curve[-1] > high else logp[-1]
    if hi <= lo:
        hi = lo + np.log(10.0)
    return np.exp(np.linspace(lo, hi, n))
