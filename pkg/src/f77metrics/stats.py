"""Regression through the origin, correlation, PCA and defect-clustering tables."""

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import DatasetError

P_FLOOR = 1e-300
R_PRINT_FLOOR = 2.2e-16


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    rss: float
    r2: float
    r2_adj: float
    f_stat: float
    p_value: float
    n: int


def _betacf(a, b, x, eps=1e-16, max_iter=10000):
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = tiny if abs(d) < tiny else d
        c = 1.0 + aa / c
        c = tiny if abs(c) < tiny else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def _stirling_correction(x):
    """lgamma(x) minus its Stirling approximation, for x >= 10."""
    x2 = x * x
    series = (1.0 / 12, -1.0 / 360, 1.0 / 1260, -1.0 / 1680, 1.0 / 1188, -691.0 / 360360)
    total = 0.0
    for c in reversed(series):
        total = total / x2 + c
    return total / x


def log_beta(a, b):
    """log B(a, b) without the cancellation of lgamma differences at large arguments."""
    lo, hi = min(a, b), max(a, b)
    if hi < 10.0:
        return math.lgamma(lo) + math.lgamma(hi) - math.lgamma(lo + hi)
    s = lo + hi
    corr = _stirling_correction(hi) - _stirling_correction(s)
    if lo < 10.0:
        # lgamma(hi) - lgamma(hi + lo) expanded around hi
        return (math.lgamma(lo) + corr - (hi - 0.5) * math.log1p(lo / hi)
                - lo * math.log(s) + lo)
    return (0.5 * math.log(2.0 * math.pi) - 0.5 * math.log(hi) + corr
            + _stirling_correction(lo) + (lo - 0.5) * math.log(lo / s)
            + hi * math.log1p(-lo / s))


def regularized_beta(x, a, b, one_minus_x=None):
    """I_x(a, b).  Pass ``one_minus_x`` when 1 - x is known more accurately."""
    if one_minus_x is None:
        one_minus_x = 1.0 - x
    if x <= 0.0:
        return 0.0
    if one_minus_x <= 0.0:
        return 1.0
    log_x = math.log1p(-one_minus_x) if x > 0.5 else math.log(x)
    log_1mx = math.log1p(-x) if one_minus_x > 0.5 else math.log(one_minus_x)
    log_front = a * log_x + b * log_1mx - log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, one_minus_x) / b


def f_upper_tail(f, d1, d2):
    """P(F > f) for an F distribution with (d1, d2) degrees of freedom."""
    if f <= 0.0:
        return 1.0
    if math.isinf(f):
        return 0.0
    denom = d2 + d1 * f
    return regularized_beta(d2 / denom, d2 / 2.0, d1 / 2.0, one_minus_x=d1 * f / denom)


def ols_origin(x, y):
    """Least squares fit of y = slope * x with the intercept forced to zero.

    R² is taken against the uncentred total sum of squares, and the F test
    has (1, n - 1) degrees of freedom, as for ``lm(y ~ x + 0)`` in R.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n != len(y):
        raise DatasetError(f"length mismatch: {n} predictors, {len(y)} responses")
    if n < 2:
        raise DatasetError("need at least two observations")
    sxx = float(x @ x)
    if sxx == 0.0:
        raise DatasetError("degenerate predictor: all values are zero")
    syy = float(y @ y)
    if syy == 0.0:
        raise DatasetError("response is identically zero")
    slope = float(x @ y) / sxx
    resid = y - slope * x
    rss = float(resid @ resid)
    r2 = 1.0 - rss / syy
    r2_adj = 1.0 - (1.0 - r2) * n / (n - 1)
    if rss == 0.0:
        return RegressionResult(slope, 0.0, 1.0, 1.0, math.inf, 0.0, n)
    f_stat = (syy - rss) / (rss / (n - 1))
    return RegressionResult(slope, rss, r2, r2_adj, f_stat, f_upper_tail(f_stat, 1, n - 1), n)


def pearson(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 2:
        raise DatasetError("pearson needs two equal-length samples of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise DatasetError("correlation undefined for a constant sample")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def jacobi_eigen(matrix, tol=1e-12, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors as columns), unsorted.
    """
    a = np.array(matrix, dtype=float)
    p = a.shape[0]
    v = np.eye(p)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.square(a - np.diag(np.diag(a))))))
        if off < tol:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if aij == 0.0:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * aij)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ci, cj = a[:, i].copy(), a[:, j].copy()
                a[:, i] = c * ci - s * cj
                a[:, j] = s * ci + c * cj
                ri, rj = a[i, :].copy(), a[j, :].copy()
                a[i, :] = c * ri - s * rj
                a[j, :] = s * ri + c * rj
                a[i, j] = a[j, i] = 0.0
                vi, vj = v[:, i].copy(), v[:, j].copy()
                v[:, i] = c * vi - s * vj
                v[:, j] = s * vi + c * vj
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


@dataclass
class PcaResult:
    eigenvalues: np.ndarray
    loadings: np.ndarray  # p x p, one component per column
    scores: np.ndarray  # n x p
    variance_fraction: np.ndarray  # cumulative
    names: tuple = ()

    @property
    def sdev(self):
        return np.sqrt(np.clip(self.eigenvalues, 0.0, None))


def pca(data, scale=True, names=None):
    """Principal components of the columns of ``data`` (like R's prcomp)."""
    x = np.asarray(data, dtype=float)
    n, p = x.shape
    names = tuple(names) if names is not None else tuple(f"V{i + 1}" for i in range(p))
    if n <= p:
        raise DatasetError(f"PCA needs more rows than columns (got {n} x {p})")
    z = x - x.mean(axis=0)
    if scale:
        sd = z.std(axis=0, ddof=1)
        constant = [names[i] for i in np.flatnonzero(sd == 0.0)]
        if constant:
            raise DatasetError(f"cannot scale constant column(s): {', '.join(constant)}")
        z = z / sd
    cov = (z.T @ z) / (n - 1)
    values, vectors = jacobi_eigen(cov)
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    for k in range(p):
        col = vectors[:, k]
        if col[np.argmax(np.abs(col))] < 0:
            vectors[:, k] = -col
    cumulative = np.cumsum(values) / np.sum(values)
    return PcaResult(values, vectors, z @ vectors, cumulative, names)


@dataclass(frozen=True)
class DefectTable:
    counts: list
    component_pct: list
    xloc: list
    xloc_pct: list

    def rows(self):
        return list(zip(range(len(self.counts)), self.counts, self.component_pct,
                        self.xloc, self.xloc_pct))


def _percentages(values):
    total = sum(values)
    if total == 0:
        return [0.0] * len(values)
    return [round(100.0 * v / total, 2) for v in values]


def distribution_table(counts, xloc):
    """Defect table from per-defect-count component counts and XLOC sums."""
    counts, xloc = list(counts), list(xloc)
    if len(counts) != len(xloc):
        raise DatasetError("counts and xloc columns differ in length")
    return DefectTable(counts, _percentages(counts), xloc, _percentages(xloc))


def defect_distribution(dataset):
    """Number of components and XLOC with exactly k defects, for each k."""
    if not dataset.rows:
        raise DatasetError("empty dataset")
    top = max(row.defects for row in dataset.rows)
    counts = [0] * (top + 1)
    xloc = [0] * (top + 1)
    for row in dataset.rows:
        counts[row.defects] += 1
        xloc[row.defects] += row.metrics.STXLN
    return distribution_table(counts, xloc)


def conditional_probabilities(counts):
    """[(N, P(N+1 | N))] from counts of components with exactly k defects.

    With S_k the number of components having at least k defects,
    P(N+1 | N) = S_{N+1} / S_N; N values with S_N = 0 are omitted.
    """
    counts = list(counts)
    if any(c < 0 for c in counts):
        raise DatasetError("negative component count")
    tails = [0] * (len(counts) + 1)
    for k in range(len(counts) - 1, -1, -1):
        tails[k] = tails[k + 1] + counts[k]
    return [(n, tails[n + 1] / tails[n]) for n in range(len(counts)) if tails[n] > 0]


def f_from_adjusted_r2(r2_adj, n):
    """F statistic implied by an adjusted R² of a one-predictor origin fit."""
    r2 = 1.0 - (1.0 - r2_adj) * (n - 1) / n
    return r2 / (1.0 - r2) * (n - 1)


def format_p(p):
    if p < P_FLOOR:
        return "<1e-300"
    if p < R_PRINT_FLOOR:
        return "< 2.2e-16"
    return f"{p:.4g}"
