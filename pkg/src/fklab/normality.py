"""Normality diagnostics and the exponential-decay fit.

The test is a one-sample Kolmogorov-Smirnov distance against the normal
law with mean and variance estimated from the same sample.  Estimated
parameters shrink the null distribution of the distance, so the p-value
uses the standard composite-normality approximation (Dallal-Wilkinson
formula below p = 0.1, Stephens' polynomial fit above), not the plain
asymptotic law.  Moment z-scores are reported as secondary evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import InsufficientDataError, InvalidParameterError

MIN_SAMPLES = 100


@dataclass(frozen=True)
class NormalityResult:
    n: int
    ks_stat: float
    p_value: float
    skew_z: float
    kurt_z: float

    def rejects(self, alpha: float = 0.01) -> bool:
        return self.p_value < alpha


def ks_distance(samples: np.ndarray) -> float:
    """Sup distance between the empirical CDF and the fitted normal CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.shape[0]
    mu = x.mean()
    sd = x.std(ddof=1)
    if sd == 0.0:
        raise InvalidParameterError("degenerate sample: zero variance")
    cdf = ndtr((x - mu) / sd)
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))


def _composite_p_value(d: float, n: int) -> float:
    """P-value for the estimated-parameter KS distance (documented approximation).

    Below 0.1 this is the Dallal-Wilkinson (1986) exponential formula with
    the n > 100 rescaling; above it, Stephens' modified-statistic
    polynomial fit.  Both are the classical published fits for this test.
    """
    if n > 100:
        kd = d * (n / 100.0) ** 0.49
        nd = 100.0
    else:
        kd = d
        nd = float(n)
    pv = math.exp(-7.01256 * kd * kd * (nd + 2.78019)
                  + 2.99587 * kd * math.sqrt(nd + 2.78019)
                  - 0.122119 + 0.974598 / math.sqrt(nd) + 1.67997 / nd)
    if pv > 0.1:
        kk = (math.sqrt(n) - 0.01 + 0.85 / math.sqrt(n)) * d
        if kk <= 0.302:
            pv = 1.0
        elif kk <= 0.5:
            pv = 2.76773 - 19.828315 * kk + 80.709644 * kk ** 2 \
                - 138.55152 * kk ** 3 + 81.541484 * kk ** 4
        elif kk <= 0.9:
            pv = -4.901232 + 40.662806 * kk - 97.490286 * kk ** 2 \
                + 94.029866 * kk ** 3 - 32.355711 * kk ** 4
        elif kk <= 1.31:
            pv = 6.198765 - 19.558097 * kk + 23.186922 * kk ** 2 \
                - 12.234627 * kk ** 3 + 2.423045 * kk ** 4
        else:
            pv = 0.0
    return min(max(pv, 0.0), 1.0)


def moment_zscores(samples: np.ndarray) -> tuple[float, float]:
    """Skewness and excess-kurtosis z-scores under the normal null."""
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    c = x - x.mean()
    m2 = np.mean(c ** 2)
    skew = np.mean(c ** 3) / m2 ** 1.5
    exkurt = np.mean(c ** 4) / m2 ** 2 - 3.0
    return (float(skew / math.sqrt(6.0 / n)), float(exkurt / math.sqrt(24.0 / n)))


def normality_test(samples: np.ndarray) -> NormalityResult:
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1:
        raise InvalidParameterError("normality_test expects a flat sample array")
    n = x.shape[0]
    if n < MIN_SAMPLES:
        raise InsufficientDataError(f"need at least {MIN_SAMPLES} samples, got {n}")
    d = ks_distance(x)
    skew_z, kurt_z = moment_zscores(x)
    return NormalityResult(n=n, ks_stat=d, p_value=_composite_p_value(d, n),
                           skew_z=skew_z, kurt_z=kurt_z)


@dataclass(frozen=True)
class DecayFit:
    rate: float            # decay rate per unit distance (minus the log-slope)
    r_squared: float
    intercept: float
    used_n: tuple[int, ...]


def decay_fit(radii, estimates, min_points: int = 5) -> DecayFit:
    """Least-squares line through (n, log estimate); zero estimates truncate the range."""
    n = np.asarray(list(radii), dtype=float)
    y = np.asarray(list(estimates), dtype=float)
    if n.shape != y.shape:
        raise InvalidParameterError("radii and estimates must align")
    keep = y > 0.0
    n, y = n[keep], y[keep]
    if n.shape[0] < min_points:
        raise InsufficientDataError(
            f"only {n.shape[0]} positive estimates; need {min_points} for a fit")
    logy = np.log(y)
    slope, intercept = np.polyfit(n, logy, 1)
    resid = logy - (slope * n + intercept)
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return DecayFit(rate=float(-slope), r_squared=r2, intercept=float(intercept),
                    used_n=tuple(int(v) for v in n))
