"""Two-sample chi-square certification on coarse-grained counts.

The statistic for two count vectors O1, O2 over the same bins is

    chi2 = sum_b (sqrt(N2/N1) O1_b - sqrt(N1/N2) O2_b)^2 / (O1_b + O2_b)

over bins where O1_b + O2_b > 0, with N1, N2 the totals.  Degrees of freedom
are fixed at (number of bins - 1) regardless of empty bins.  p-values come
from the upper tail of the chi-square law, computed from the regularized
incomplete gamma function: series below x < df + 1, continued fraction
above.  p-values that underflow double precision are reported as 0.0 and
flagged.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .coarsegrain import CoarseDistribution

_EPS = 2.22e-16
_ITMAX = 2000


def _gamma_series(a: float, x: float) -> float:
    # lower regularized P(a, x) by power series
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise RuntimeError(f"incomplete gamma series stalled at a={a}, x={x}")


def _gamma_cfrac(a: float, x: float) -> float:
    # upper regularized Q(a, x) by modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, _ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h
    raise RuntimeError(f"incomplete gamma continued fraction stalled at a={a}, x={x}")


def chi2_sf(x: float, df: float) -> float:
    """Upper-tail probability of the chi-square law, Q(df/2, x/2).

    Absolute error well below 1e-12; underflows to exactly 0.0 for p-values
    beyond double range rather than raising.
    """
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"chi-square statistic must be finite and >= 0, got {x}")
    if x == 0.0:
        return 1.0
    a = 0.5 * df
    xx = 0.5 * x
    if xx < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_series(a, xx)))
    return min(1.0, max(0.0, _gamma_cfrac(a, xx)))


def chi2_cdf(x: float, df: float) -> float:
    return 1.0 - chi2_sf(x, df)


def chi2_pdf(x: float, df: float) -> float:
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if x < 0:
        return 0.0
    a = 0.5 * df
    if x == 0.0:
        return math.inf if df < 2 else (0.5 if df == 2 else 0.0)
    return math.exp((a - 1.0) * math.log(x) - 0.5 * x - a * math.log(2.0) - math.lgamma(a))


def chi2_cutoff(alpha: float, df: float) -> float:
    """x with chi2_sf(x, df) = alpha, by bisection on the monotone tail."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    lo, hi = 0.0, max(float(df), 1.0)
    while chi2_sf(hi, df) > alpha:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("cutoff bracket expansion ran away")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if chi2_sf(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def chi2_two_sample(counts1, counts2) -> tuple[float, int]:
    """Statistic and degrees of freedom for two count vectors on shared bins."""
    o1 = np.asarray(counts1, dtype=np.float64)
    o2 = np.asarray(counts2, dtype=np.float64)
    if o1.shape != o2.shape or o1.ndim != 1:
        raise ValueError(f"count vectors must share one axis, got {o1.shape} vs {o2.shape}")
    if np.any(o1 < 0) or np.any(o2 < 0):
        raise ValueError("counts must be nonnegative")
    n1, n2 = float(o1.sum()), float(o2.sum())
    if n1 <= 0 or n2 <= 0:
        raise ValueError("both samples must contain events")
    df = o1.size - 1
    if df < 1:
        raise ValueError("need at least two bins to test")
    k1, k2 = math.sqrt(n2 / n1), math.sqrt(n1 / n2)
    occupied = (o1 + o2) > 0
    num = (k1 * o1[occupied] - k2 * o2[occupied]) ** 2
    chi2 = float((num / (o1 + o2)[occupied]).sum())
    return chi2, df


@dataclass(frozen=True)
class TestReport:
    """Outcome of one certification test, JSON-serialisable."""

    chi2: float
    df: int
    p_value: float
    alpha: float
    passed: bool
    n_b: int
    sample1: str
    sample2: str
    p_underflow: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        d = dict(d)
        d["passed"] = d.pop("pass")
        return cls(**d)


def certify(coarse1: CoarseDistribution, coarse2: CoarseDistribution, alpha: float) -> TestReport:
    """Two-sample test of coarse-grained counts; pass means p > alpha strictly."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly inside (0, 1), got {alpha}")
    p1, p2 = coarse1.partition, coarse2.partition
    if p1 is not p2 and not (
        p1.shape == p2.shape
        and np.array_equal(p1.centers, p2.centers)
        and np.array_equal(p1.radii, p2.radii)
        and p1.merges == p2.merges
    ):
        raise ValueError("samples were coarse-grained on different partitions")
    for c in (coarse1, coarse2):
        if np.any(c.masses != np.round(c.masses)):
            raise ValueError("certification works on counted samples, not exact tables")
    chi2, df = chi2_two_sample(coarse1.masses, coarse2.masses)
    p = chi2_sf(chi2, df)
    return TestReport(
        chi2=chi2,
        df=df,
        p_value=p,
        alpha=float(alpha),
        passed=p > alpha,
        n_b=p1.n_bins,
        sample1=coarse1.provenance,
        sample2=coarse2.provenance,
        p_underflow=(p == 0.0),
    )


def campaign_summary(reports) -> dict:
    """Aggregate pass rate and p-value moments over a list of reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to summarise")
    p = np.array([r.p_value for r in reports], dtype=np.float64)
    chi2 = np.array([r.chi2 for r in reports], dtype=np.float64)
    n_b = np.array([r.n_b for r in reports], dtype=np.float64)
    return {
        "n_runs": len(reports),
        "pass_rate": float(np.mean([r.passed for r in reports])),
        "p_mean": float(p.mean()),
        "p_std": float(p.std(ddof=1)) if p.size > 1 else 0.0,
        "chi2_mean": float(chi2.mean()),
        "n_b_mean": float(n_b.mean()),
        "p_underflow_count": int(sum(r.p_underflow for r in reports)),
    }


def save_report(path, report: TestReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_report(path) -> TestReport:
    with open(path, "r", encoding="utf-8") as fh:
        return TestReport.from_dict(json.load(fh))
