"""Closed-form means and variances of ZF signal and interference power.

Every function broadcasts over numpy arrays. Interfering-cell gains are taken
along the last axis, one aggregate gain ``l(d_{q', qk})`` per interfering
cell ``q'``; the per-beam sum over ``k'`` has already been collapsed.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .config import ConfigError
from .precoder import Normalization


class Kind(enum.Enum):
    SIGNAL = "signal"
    INTERFERENCE = "interference"


class Source(enum.Enum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class PowerStatistics:
    mean: object
    variance: object
    kind: Kind
    case: Normalization
    source: Source = Source.ANALYTIC
    count: object = None  # samples behind an empirical estimate


def _require_zf(m, k):
    if k < 1 or m <= k:
        raise ConfigError(f"closed-form moments need M > K >= 1 (M={m}, K={k})")


def signal_moments_case1(p, m, k, serving_gain):
    """Instantaneous normalization: ``S = (p l / K) X`` with ``X ~ Gamma(M-K+1, 1)``."""
    _require_zf(m, k)
    dof = m - k + 1
    scale = p * np.asarray(serving_gain, dtype=float) / k
    return PowerStatistics(scale * dof, scale**2 * dof, Kind.SIGNAL, Normalization.INSTANTANEOUS)


def signal_power_case2(p, m, k, serving_gain):
    """Average normalization: signal power is the constant ``p (M-K) l / K``."""
    _require_zf(m, k)
    mean = p * (m - k) * np.asarray(serving_gain, dtype=float) / k
    return PowerStatistics(mean, np.zeros_like(mean), Kind.SIGNAL, Normalization.AVERAGE)


def interference_mean_case1(p, m, k, interfering_gains):
    if m == k:
        raise ConfigError("M = K makes the (M-K+1)/(M-K) factor infinite")
    _require_zf(m, k)
    total = np.sum(np.asarray(interfering_gains, dtype=float), axis=-1)
    return p * (m - k + 1) / (m - k) * total


def interference_mean_case2(p, interfering_gains):
    return p * np.sum(np.asarray(interfering_gains, dtype=float), axis=-1)


def interference_variance(p, k, interfering_gains):
    """Approximate ``Var{I} = (1/K) sum (p l)^2``, shared by both cases.

    Treats each ``g^H w`` as complex Gaussian with variance ``1/K``.
    """
    if k < 1:
        raise ConfigError("K must be >= 1")
    pl = p * np.asarray(interfering_gains, dtype=float)
    return np.sum(pl * pl, axis=-1) / k


def interference_moments(case, p, m, k, interfering_gains):
    case = Normalization(case)
    if case is Normalization.INSTANTANEOUS:
        mean = interference_mean_case1(p, m, k, interfering_gains)
    else:
        mean = interference_mean_case2(p, interfering_gains)
    var = interference_variance(p, k, interfering_gains)
    return PowerStatistics(mean, var, Kind.INTERFERENCE, case)


def signal_moments(case, p, m, k, serving_gain):
    if Normalization(case) is Normalization.INSTANTANEOUS:
        return signal_moments_case1(p, m, k, serving_gain)
    return signal_power_case2(p, m, k, serving_gain)


def user_gains(gains):
    """Split a ``(Q, Q, K)`` gain array into serving and interfering parts.

    Returns ``serving[q, k]`` and ``interfering[q, k, :]`` (the ``Q - 1``
    gains from the other cells, in increasing cell order).
    """
    gains = np.asarray(gains, dtype=float)
    nq = gains.shape[0]
    idx = np.arange(nq)
    serving = gains[idx, idx]
    per_user = np.moveaxis(gains, 0, -1)  # (Q_rx, K, Q_tx)
    mask = ~np.eye(nq, dtype=bool)  # [q_rx, q_tx]
    interfering = per_user[mask[:, None, :].repeat(gains.shape[2], axis=1)]
    return serving, interfering.reshape(nq, gains.shape[2], nq - 1)
