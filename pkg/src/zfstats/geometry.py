"""Wraparound square-cell layout, path loss, and Rayleigh fading channels."""

from dataclasses import dataclass

import numpy as np

from .config import ConfigError, NetworkConfig

MAX_PLACEMENT_ATTEMPTS = 10**6


def wrap_distance(a, b, world_side):
    """Shortest distance between points on a torus of side ``world_side``.

    Equivalent to the minimum over the 9 periodic images of ``b`` for points
    inside ``[0, world_side)^2``. Broadcasts over leading dimensions.
    """
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    diff = np.minimum(diff, world_side - diff)
    return np.hypot(diff[..., 0], diff[..., 1])


def path_loss(d, alpha, d0):
    """Linear power gain ``(d / d0) ** -alpha``; only defined for ``d >= d0``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < d0):
        raise ValueError(f"distance below reference distance d0={d0}")
    out = (d / d0) ** (-alpha)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class NetworkLayout:
    bs_positions: np.ndarray  # (Q, 2)
    user_positions: np.ndarray  # (Q, K, 2)
    config: NetworkConfig

    def distances(self):
        """``d[q_tx, q_rx, k]``: wraparound distance from BS ``q_tx`` to user k of cell ``q_rx``."""
        bs = self.bs_positions[:, None, None, :]
        users = self.user_positions[None, :, :, :]
        return wrap_distance(bs, users, self.config.world_side)

    def gains(self):
        """Large-scale gains ``l[q_tx, q_rx, k]`` for every BS/user pair."""
        cfg = self.config
        return path_loss(self.distances(), cfg.path_loss_exponent, cfg.reference_distance)


def cell_centers(config):
    n = config.grid_side
    idx = np.arange(config.num_cells)
    rows, cols = np.divmod(idx, n)
    return np.column_stack([(cols + 0.5) * config.cell_side, (rows + 0.5) * config.cell_side])


def sample_layout(config, rng):
    """Drop ``K`` users uniformly in every cell, outside the exclusion disk.

    ``rng`` is a ``numpy.random.Generator`` or anything ``default_rng`` accepts.
    """
    rng = np.random.default_rng(rng)
    bs = cell_centers(config)
    side, excl = config.cell_side, config.exclusion_radius
    users = np.empty((config.num_cells, config.users_per_cell, 2))
    for q in range(config.num_cells):
        corner = bs[q] - side / 2
        for k in range(config.users_per_cell):
            for _ in range(MAX_PLACEMENT_ATTEMPTS):
                pt = corner + rng.random(2) * side
                if np.hypot(*(pt - bs[q])) >= excl:
                    break
            else:
                raise ConfigError("could not place a user outside the exclusion disk")
            users[q, k] = pt
    return NetworkLayout(bs, users, config)


def sample_fading(rng, m, k, size=()):
    """i.i.d. CN(0, 1) entries: real and imaginary parts each N(0, 1/2)."""
    if np.isscalar(size):
        size = (size,)
    # Consecutive (re, im) pairs of one real draw, viewed as complex.
    z = rng.standard_normal(tuple(size) + (m, 2 * k)).view(np.complex128)
    z *= np.sqrt(0.5)
    return z


@dataclass(frozen=True)
class ChannelRealization:
    """Small-scale fading for every (transmitting cell, receiving cell) pair.

    ``fading[a, b]`` is the M x K matrix from BS ``a`` to the users of cell
    ``b``; ``large_scale[a, b, k]`` is the matching path-loss gain.
    """

    fading: np.ndarray  # (Q, Q, M, K) complex
    large_scale: np.ndarray  # (Q, Q, K)

    def channels(self):
        """All channel matrices ``h = sqrt(l) g``, shape (Q, Q, M, K)."""
        return self.fading * np.sqrt(self.large_scale)[:, :, None, :]

    def serving(self):
        """Serving channel matrices ``H_q``, shape (Q, M, K)."""
        q = np.arange(self.fading.shape[0])
        return self.fading[q, q] * np.sqrt(self.large_scale[q, q])[:, None, :]


def assemble_channels(layout, fading):
    cfg = layout.config
    fading = np.asarray(fading)
    expected = (cfg.num_cells, cfg.num_cells, cfg.antennas_per_bs, cfg.users_per_cell)
    if fading.shape != expected:
        raise ValueError(f"fading has shape {fading.shape}, expected {expected}")
    return ChannelRealization(fading, layout.gains())
