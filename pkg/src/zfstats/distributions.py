"""Moment-matched reference distributions and the one-sample KS test.

Parameters may be numpy arrays; every method broadcasts ``x`` against the
parameter arrays, which lets the simulation fit and test many users at once.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import special


class Family(enum.Enum):
    GAMMA = "gamma"
    LOGNORMAL = "lognormal"
    NORMAL = "normal"


class DegenerateDistributionError(ValueError):
    """Zero (or negative) variance handed to a moment-matching constructor."""


def _check_moments(mean, variance, positive_mean=True):
    mean = np.asarray(mean, dtype=float)
    variance = np.asarray(variance, dtype=float)
    if np.any(~np.isfinite(mean)) or np.any(~np.isfinite(variance)):
        raise ValueError("moments must be finite")
    if np.any(variance <= 0):
        raise DegenerateDistributionError(
            "variance must be positive; a constant power has no fitted distribution"
        )
    if positive_mean and np.any(mean <= 0):
        raise ValueError("mean must be positive for a nonnegative family")
    return mean, variance


@dataclass(frozen=True)
class FittedDistribution:
    """A distribution pinned down by its first two moments.

    ``params`` holds (shape, scale) for gamma, (log-mean, log-std) for
    lognormal and (mean, std) for normal.
    """

    family: Family
    params: tuple
    matched_mean: object
    matched_variance: object

    # -- moments implied by the parameters (used for round-trip checks) --
    def mean(self):
        a, b = self.params
        if self.family is Family.GAMMA:
            return a * b
        if self.family is Family.LOGNORMAL:
            return np.exp(a + 0.5 * b * b)
        return a

    def variance(self):
        a, b = self.params
        if self.family is Family.GAMMA:
            return a * b * b
        if self.family is Family.LOGNORMAL:
            return np.expm1(b * b) * np.exp(2 * a + b * b)
        return b * b

    def reshaped(self, shape):
        """Copy with every parameter array reshaped (for broadcasting)."""
        def r(v):
            return np.reshape(np.asarray(v, dtype=float), shape)
        return FittedDistribution(
            self.family,
            tuple(r(p) for p in self.params),
            r(self.matched_mean),
            r(self.matched_variance),
        )

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.params
        if self.family is Family.NORMAL:
            z = (x - a) / b
            return np.exp(-0.5 * z * z) / (b * np.sqrt(2 * np.pi))
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        if self.family is Family.GAMMA:
            logp = (a - 1) * np.log(xs) - xs / b - special.lgamma(a) - a * np.log(b)
            at_zero = np.where(a < 1, np.inf, np.where(a == 1, 1.0 / b, 0.0))
            return np.where(pos, np.exp(logp), np.where(x == 0, at_zero, 0.0))
        z = (np.log(xs) - a) / b
        dens = np.exp(-0.5 * z * z) / (xs * b * np.sqrt(2 * np.pi))
        return np.where(pos, dens, 0.0)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.params
        if self.family is Family.NORMAL:
            return special.ndtr((x - a) / b)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        if self.family is Family.GAMMA:
            val = special.gammainc(a, xs / b)
        else:
            val = special.ndtr((np.log(xs) - a) / b)
        return np.where(pos, val, 0.0)

    def sf(self, x):
        """Survival function ``1 - cdf``, accurate in the upper tail."""
        x = np.asarray(x, dtype=float)
        a, b = self.params
        if self.family is Family.NORMAL:
            return special.ndtr((a - x) / b)
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        if self.family is Family.GAMMA:
            val = special.gammaincc(a, xs / b)
        else:
            val = special.ndtr((a - np.log(xs)) / b)
        return np.where(pos, val, 1.0)

    def quantile(self, u):
        u = np.asarray(u, dtype=float)
        a, b = self.params
        if self.family is Family.GAMMA:
            return b * special.gammaincinv(a, u)
        z = special.ndtri(u)
        if self.family is Family.LOGNORMAL:
            return np.exp(a + b * z)
        return a + b * z

    def isf(self, u):
        """Inverse survival function: the point with ``sf(x) = u``."""
        u = np.asarray(u, dtype=float)
        a, b = self.params
        if self.family is Family.GAMMA:
            return b * special.gammaincinv(a, u, upper=True)
        z = -special.ndtri(u)
        if self.family is Family.LOGNORMAL:
            return np.exp(a + b * z)
        return a + b * z


def gamma_from_moments(mean, variance):
    """Gamma with shape ``mean**2 / variance`` and scale ``variance / mean``."""
    mean, variance = _check_moments(mean, variance)
    return FittedDistribution(Family.GAMMA, (mean**2 / variance, variance / mean), mean, variance)


def lognormal_from_moments(mean, variance):
    mean, variance = _check_moments(mean, variance)
    s2 = np.log1p(variance / mean**2)
    return FittedDistribution(
        Family.LOGNORMAL, (np.log(mean) - 0.5 * s2, np.sqrt(s2)), mean, variance
    )


def normal_from_moments(mean, variance):
    mean, variance = _check_moments(mean, variance, positive_mean=False)
    return FittedDistribution(Family.NORMAL, (mean, np.sqrt(variance)), mean, variance)


FROM_MOMENTS = {
    Family.GAMMA: gamma_from_moments,
    Family.LOGNORMAL: lognormal_from_moments,
    Family.NORMAL: normal_from_moments,
}


def from_moments(family, mean, variance):
    return FROM_MOMENTS[Family(family)](mean, variance)


@dataclass(frozen=True)
class KsResult:
    statistic: object
    p_value: object
    reject_at_5pct: object
    sample_size: int


def kolmogorov_sf(lam):
    """Asymptotic Kolmogorov survival function ``Q(lambda)``.

    Uses the alternating series for ``lambda >= 1`` and the theta-function
    form of the CDF below that, where the alternating series stalls.
    """
    lam = np.asarray(lam, dtype=float)
    out = np.ones_like(lam)
    big = lam >= 1.0
    if big.any():
        j = np.arange(1, 101)
        lb = lam[big][..., None]
        terms = (-1.0) ** (j - 1) * np.exp(-2.0 * j**2 * lb**2)
        out[big] = 2.0 * terms.sum(axis=-1)
    small = (lam > 0) & ~big
    if small.any():
        j = np.arange(1, 51)
        ls = lam[small][..., None]
        cdf = np.sqrt(2 * np.pi) / ls[..., 0] * np.exp(
            -((2 * j - 1) ** 2) * np.pi**2 / (8.0 * ls**2)
        ).sum(axis=-1)
        out[small] = 1.0 - cdf
    return np.clip(out, 0.0, 1.0)


def ks_test(samples, reference, alpha=0.05):
    """One-sample Kolmogorov-Smirnov test against ``reference``.

    ``samples`` may be 2-D (one sample set per row); ``reference`` then needs
    parameters broadcastable against the rows, e.g. shape ``(rows, 1)``.
    Any object with a ``cdf`` method works as the reference.
    """
    x = np.asarray(samples, dtype=float)
    if np.isnan(x).any():
        raise ValueError("NaN in KS sample")
    n = x.shape[-1]
    if n < 8:
        raise ValueError(f"KS test needs at least 8 samples, got {n}")
    x = np.sort(x, axis=-1)
    f = np.asarray(reference.cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = (i / n - f).max(axis=-1)
    d_minus = (f - (i - 1) / n).max(axis=-1)
    d = np.maximum(d_plus, d_minus)
    sqn = np.sqrt(n)
    p = kolmogorov_sf((sqn + 0.12 + 0.11 / sqn) * d)
    if np.ndim(d) == 0:
        d, p = float(d), float(p)
    return KsResult(d, p, p < alpha, n)


def fit_battery(samples, families=tuple(Family), alpha=0.05):
    """Moment-match each family to the data and KS-test the fit.

    Works row-wise on 2-D input. Returns ``{Family: KsResult}``.
    """
    x = np.asarray(samples, dtype=float)
    if x.shape[-1] < 8:
        raise ValueError("need at least 8 samples")
    mean = x.mean(axis=-1, keepdims=x.ndim > 1)
    var = x.var(axis=-1, ddof=1, keepdims=x.ndim > 1)
    if np.any(var <= 0):
        raise DegenerateDistributionError("samples have zero variance")
    out = {}
    for fam in families:
        fam = Family(fam)
        if fam is not Family.NORMAL and np.any(x <= 0):
            # A nonnegative family cannot describe nonpositive data.
            dist = None
        else:
            dist = from_moments(fam, mean, var)
        if dist is None:
            shape = np.shape(mean)[:-1] if x.ndim > 1 else ()
            out[fam] = KsResult(np.ones(shape), np.zeros(shape), np.ones(shape, bool), x.shape[-1])
        else:
            out[fam] = ks_test(x, dist, alpha)
    return out
