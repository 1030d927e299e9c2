"""Zero-forcing precoding with instantaneous or average power normalization.

All functions accept a single M x K channel or a stack ``(..., M, K)``.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .config import ConfigError

MAX_GRAM_CONDITION = 1e12


class SingularChannelError(np.linalg.LinAlgError):
    """Channel matrix is (numerically) rank deficient."""


class Normalization(enum.Enum):
    INSTANTANEOUS = 1
    AVERAGE = 2


@dataclass(frozen=True)
class PrecodingResult:
    raw_precoder: np.ndarray
    normalizers: np.ndarray
    precoder: np.ndarray
    case: Normalization


def zf_raw(h):
    """Pseudo-inverse precoder ``H (H^H H)^-1`` computed from a QR of ``H``.

    With ``H = QR`` the precoder is ``Q R^-H``, which avoids forming the Gram
    matrix and squaring the condition number.
    """
    h = np.asarray(h)
    m, k = h.shape[-2:]
    if m < k:
        raise ConfigError(f"need at least as many antennas as users (M={m}, K={k})")
    q, r = np.linalg.qr(h)
    sv = np.linalg.svd(r, compute_uv=False)
    with np.errstate(divide="ignore"):
        cond = sv[..., 0] / sv[..., -1]
    if np.any(~(cond**2 < MAX_GRAM_CONDITION)):
        raise SingularChannelError("channel Gram matrix is singular or ill conditioned")
    # W^H = R^-1 Q^H
    wh = np.linalg.solve(r, np.conj(np.swapaxes(q, -1, -2)))
    return np.conj(np.swapaxes(wh, -1, -2))


def column_power(w):
    return np.sum(np.abs(w) ** 2, axis=-2)


def normalize_instantaneous(w_raw):
    """Scale every column to norm ``1/sqrt(K)`` so ``tr(W W^H) = 1`` exactly."""
    w_raw = np.asarray(w_raw)
    k = w_raw.shape[-1]
    power = column_power(w_raw)
    if np.any(power == 0):
        raise SingularChannelError("zero precoder column")
    mu = 1.0 / np.sqrt(k * power)
    return PrecodingResult(w_raw, mu, w_raw * mu[..., None, :], Normalization.INSTANTANEOUS)


def average_normalizers(serving_gains, m, k):
    """``sqrt(l (M - K) / K)``: the closed-form average-power normalizer."""
    if m <= k:
        raise ConfigError(f"average normalization needs M > K (M={m}, K={k})")
    gains = np.asarray(serving_gains, dtype=float)
    if np.any(gains <= 0):
        raise ValueError("large-scale gains must be positive")
    return np.sqrt(gains * (m - k) / k)


def normalize_average(w_raw, serving_gains, m, k):
    """Deterministic normalizers that satisfy the power budget on average.

    Uses ``E{[(H^H H)^-1]_kk} = 1 / ((M - K) l_k)`` for a central complex
    Wishart Gram matrix, so the result depends on geometry only.
    """
    w_raw = np.asarray(w_raw)
    if w_raw.shape[-2:] != (m, k):
        raise ValueError(f"precoder shape {w_raw.shape[-2:]} does not match M={m}, K={k}")
    mu = np.broadcast_to(average_normalizers(serving_gains, m, k), w_raw.shape[:-2] + (k,))
    return PrecodingResult(w_raw, mu, w_raw * mu[..., None, :], Normalization.AVERAGE)


def coupling(precoders, realization):
    """``|w_{a j}^H h_{a, b k}|^2`` for every precoder column and channel.

    Returns an array ``c[a, b, j, k]``: BS ``a`` beam ``j`` seen by user ``k``
    of cell ``b``.
    """
    h = realization.channels()  # (Q, Q, M, K)
    nq, _, m, k = h.shape
    flat = h.transpose(0, 2, 1, 3).reshape(nq, m, nq * k)
    g = np.conj(np.swapaxes(precoders, -1, -2)) @ flat  # (Q, K, Q*K)
    g = g.reshape(nq, k, nq, k).transpose(0, 2, 1, 3)
    return g.real**2 + g.imag**2


def powers_from_coupling(c, mu2, p):
    """Signal and inter-cell interference power per user.

    Args:
        c: coupling array from :func:`coupling` computed with raw precoders.
        mu2: squared normalizers, shape (Q, K).
        p: transmit power.

    Returns:
        ``(S, I)`` arrays of shape (Q, K).
    """
    nq = c.shape[0]
    idx = np.arange(nq)
    weighted = np.einsum("abjk,aj->abk", c, mu2)
    signal = p * mu2 * np.diagonal(c[idx, idx], axis1=-2, axis2=-1)
    weighted[idx, idx] = 0.0
    interference = p * weighted.sum(axis=0)
    return signal, interference


def received_powers(precoders, realization, p):
    """``S = p |w_qk^H h_{q,qk}|^2`` and ``I = p sum_{q' != q} sum_k' |w_{q'k'}^H h_{q',qk}|^2``.

    ``precoders`` is the stack of normalized precoders ``W_q``, shape (Q, M, K).
    """
    w = np.asarray(precoders)
    c = coupling(w, realization)
    return powers_from_coupling(c, np.ones((w.shape[0], w.shape[-1])), p)
