"""Self-contained statistical kernel.

Seeded percentile bootstrap, Cohen's d, Spearman rank correlation,
Wilcoxon signed-rank, exact two-sided binomial test, and the Tukey-hinge
IQR low-outlier rule. Everything is pure Python on purpose: results must
replicate bit-for-bit across platforms, so the random generator is the
stdlib Mersenne Twister (`random.Random`) with resample indices drawn via
``randrange``, and no global state is ever touched.

Result objects carry their method names and parameters so reports can
state exactly how a number was computed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

COHENS_D_THRESHOLD = 0.5


@dataclass
class BootstrapResult:
    mean: float
    ci_low: float
    ci_high: float
    resamples: int
    level: float
    seed: int
    method: str = "percentile"


@dataclass
class EffectSize:
    d: float
    significant: bool
    degenerate: bool = False
    threshold: float = COHENS_D_THRESHOLD


@dataclass
class OutlierPartition:
    q1: float
    q3: float
    iqr: float
    low_threshold: float
    flagged: list[int] = field(default_factory=list)
    method: str = "tukey-hinges"


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values)


def _sample_variance(values: Sequence[float]) -> float:
    """Unbiased (n-1) sample variance."""
    n = len(values)
    m = _mean(values)
    return sum((v - m) ** 2 for v in values) / (n - 1)


def _median(sorted_values: Sequence[float]) -> float:
    n = len(sorted_values)
    mid = n // 2
    if n % 2 == 1:
        return float(sorted_values[mid])
    return (sorted_values[mid - 1] + sorted_values[mid]) / 2.0


def _quantile(sorted_values: Sequence[float], q: float) -> float:
    """Linear-interpolation quantile of pre-sorted values."""
    n = len(sorted_values)
    if n == 1:
        return float(sorted_values[0])
    h = q * (n - 1)
    lo = math.floor(h)
    hi = min(lo + 1, n - 1)
    frac = h - lo
    return sorted_values[lo] + frac * (sorted_values[hi] - sorted_values[lo])


def bootstrap_ci(
    values: Sequence[float],
    resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> BootstrapResult:
    """Percentile bootstrap CI of the mean, deterministic for a fixed seed."""
    if not values:
        raise ValueError("bootstrap_ci needs at least one value")
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if not 0 < level < 1:
        raise ValueError("level must be in (0, 1)")

    n = len(values)
    rng = random.Random(seed)
    means = []
    for _ in range(resamples):
        total = 0.0
        for _ in range(n):
            total += values[rng.randrange(n)]
        means.append(total / n)
    means.sort()

    alpha = (1.0 - level) / 2.0
    return BootstrapResult(
        mean=_mean(values),
        ci_low=_quantile(means, alpha),
        ci_high=_quantile(means, 1.0 - alpha),
        resamples=resamples,
        level=level,
        seed=seed,
    )


def cohens_d(a: Sequence[float], b: Sequence[float]) -> EffectSize:
    """Standardized mean difference (mean(a) - mean(b)) / pooled sd.

    Zero pooled sd is degenerate: d = 0 when the means agree, signed
    infinity otherwise.
    """
    if len(a) < 2 or len(b) < 2:
        raise ValueError("cohens_d needs at least two values per sample")

    n_a, n_b = len(a), len(b)
    diff = _mean(a) - _mean(b)
    pooled_var = ((n_a - 1) * _sample_variance(a) + (n_b - 1) * _sample_variance(b)) / (
        n_a + n_b - 2
    )
    pooled_sd = math.sqrt(pooled_var)

    if pooled_sd == 0.0:
        if diff == 0.0:
            return EffectSize(d=0.0, significant=False, degenerate=True)
        d = math.copysign(math.inf, diff)
        return EffectSize(d=d, significant=True, degenerate=True)

    d = diff / pooled_sd
    return EffectSize(d=d, significant=abs(d) >= COHENS_D_THRESHOLD)


def _fractional_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties get the average rank of their run."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson correlation of fractional ranks."""
    if len(x) != len(y):
        raise ValueError("spearman needs sequences of equal length")
    if len(x) < 2:
        raise ValueError("spearman needs at least two pairs")

    rx = _fractional_ranks(x)
    ry = _fractional_ranks(y)
    mx, my = _mean(rx), _mean(ry)
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("spearman is undefined for constant input")
    return cov / math.sqrt(vx * vy)


# Exact enumeration is 2^n sign patterns; above this n the normal
# approximation with tie correction takes over.
_WILCOXON_EXACT_MAX_N = 20


def wilcoxon_signed_rank(diffs: Sequence[float]) -> float:
    """Two-sided p-value of the Wilcoxon signed-rank test on paired diffs.

    Zero differences are dropped (all-zero input gives p = 1.0). Exact
    enumeration of sign assignments up to n = 20, normal approximation
    with tie correction beyond.
    """
    if not diffs:
        raise ValueError("wilcoxon_signed_rank needs at least one difference")

    nonzero = [d for d in diffs if d != 0.0]
    if not nonzero:
        return 1.0

    n = len(nonzero)
    abs_ranks = _fractional_ranks([abs(d) for d in nonzero])
    w_plus = sum(r for d, r in zip(nonzero, abs_ranks) if d > 0)

    if n <= _WILCOXON_EXACT_MAX_N:
        return _wilcoxon_exact(abs_ranks, w_plus)
    return _wilcoxon_normal(abs_ranks, w_plus)


def _wilcoxon_exact(ranks: Sequence[float], w_plus: float) -> float:
    """Enumerate all sign assignments of the observed ranks."""
    n = len(ranks)
    total = 1 << n
    le = 0  # assignments with W+ <= observed
    ge = 0  # assignments with W+ >= observed
    eps = 1e-12
    for mask in range(total):
        w = 0.0
        for i in range(n):
            if mask & (1 << i):
                w += ranks[i]
        if w <= w_plus + eps:
            le += 1
        if w >= w_plus - eps:
            ge += 1
    p = 2.0 * min(le, ge) / total
    return min(p, 1.0)


def _wilcoxon_normal(ranks: Sequence[float], w_plus: float) -> float:
    """Normal approximation with the standard tie correction, no continuity."""
    n = len(ranks)
    mean_w = n * (n + 1) / 4.0

    # Tie correction subtracts sum(t^3 - t) / 48 over tie groups.
    counts: dict[float, int] = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    tie_term = sum(t**3 - t for t in counts.values() if t > 1)
    var_w = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    if var_w <= 0.0:
        return 1.0

    z = (w_plus - mean_w) / math.sqrt(var_w)
    return math.erfc(abs(z) / math.sqrt(2.0))


def binomial_exact_two_sided(successes: int, trials: int, p0: float = 0.5) -> float:
    """Exact two-sided binomial p-value by the minimum-likelihood method.

    Sums the probability of every outcome no more likely than the
    observed one under Binomial(trials, p0).
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must be between 0 and trials")
    if not 0 <= p0 <= 1:
        raise ValueError("p0 must be in [0, 1]")

    def pmf(k: int) -> float:
        return math.comb(trials, k) * p0**k * (1.0 - p0) ** (trials - k)

    observed = pmf(successes)
    cutoff = observed * (1.0 + 1e-12)
    p = sum(pmf(k) for k in range(trials + 1) if pmf(k) <= cutoff)
    return min(p, 1.0)


def iqr_low_outliers(values: Sequence[float]) -> OutlierPartition:
    """Flag indices whose value falls below Q1 - 1.5 * IQR.

    Quartiles are hinge medians: split the sorted data into lower and
    upper halves (the middle element of an odd-length sample belongs to
    neither) and take each half's median.
    """
    if len(values) < 4:
        raise ValueError("iqr_low_outliers needs at least four values")

    ordered = sorted(values)
    n = len(ordered)
    half = n // 2
    lower = ordered[:half]
    upper = ordered[half:] if n % 2 == 0 else ordered[half + 1 :]

    q1 = _median(lower)
    q3 = _median(upper)
    iqr = q3 - q1
    threshold = q1 - 1.5 * iqr
    flagged = [i for i, v in enumerate(values) if v < threshold]
    return OutlierPartition(q1=q1, q3=q3, iqr=iqr, low_threshold=threshold, flagged=flagged)
