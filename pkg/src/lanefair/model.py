"""Maximum-likelihood fitting of the paired two-run mixed-effects model.

Each skater i contributes a bivariate response (Y1, Y2) with means
a1 + b*x1 + d*w and a2 + b*x2 - d*w, where x is the 100 m passing time
and w = +-1/2 encodes the lane draw.  A shared random ability effect with
standard deviation kappa induces correlation rho = kappa^2/(sigma^2+kappa^2)
between the two days; sigma is the per-run noise level.

Estimation profiles the likelihood over rho: for fixed rho the coefficient
vector beta = (a1, a2, b, d) has a closed-form generalized-least-squares
solution, leaving a one-dimensional bracketed search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import PairObs

RHO_MAX = 1.0 - 1e-6
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class FitError(RuntimeError):
    """Base class for estimation failures."""


class InsufficientDataError(FitError):
    pass


class DegenerateDesignError(FitError):
    pass


def _arrays(pairs: Sequence[PairObs]):
    x1 = np.array([p.x1 for p in pairs], dtype=float)
    y1 = np.array([p.y1 for p in pairs], dtype=float)
    x2 = np.array([p.x2 for p in pairs], dtype=float)
    y2 = np.array([p.y2 for p in pairs], dtype=float)
    w = np.array([p.w for p in pairs], dtype=float)
    return x1, y1, x2, y2, w


def design_rows(pairs: Sequence[PairObs], with_lane: bool = True):
    """Covariate matrices X1, X2 and responses y1, y2.

    Row i of X1 is (1, 0, x1_i, w_i) and of X2 is (0, 1, x2_i, -w_i);
    the lane column is dropped when ``with_lane`` is false.
    """
    x1, y1, x2, y2, w = _arrays(pairs)
    n = len(pairs)
    cols1 = [np.ones(n), np.zeros(n), x1]
    cols2 = [np.zeros(n), np.ones(n), x2]
    if with_lane:
        cols1.append(w)
        cols2.append(-w)
    return np.column_stack(cols1), np.column_stack(cols2), y1, y2


@dataclass(frozen=True)
class MomentMatrices:
    """Per-pair averages of all cross products needed by the profile search.

    M[u][v] = ave(x_u x_v'), S[u][v] = ave(x_u Y_v); the scalar response
    moments T make the quadratic forms Q1, Q2, Q3 computable in O(1) for
    any beta without revisiting the data.
    """

    M11: np.ndarray
    M12: np.ndarray
    M21: np.ndarray
    M22: np.ndarray
    S11: np.ndarray
    S12: np.ndarray
    S21: np.ndarray
    S22: np.ndarray
    T11: float
    T22: float
    T12: float
    n: int

    @property
    def p(self) -> int:
        return self.M11.shape[0]


def build_moments(pairs: Sequence[PairObs], with_lane: bool = True) -> MomentMatrices:
    """Average cross-product matrices over the usable pairs."""
    if not pairs:
        raise InsufficientDataError("no usable pairs")
    X1, X2, y1, y2 = design_rows(pairs, with_lane)
    n = len(pairs)
    return MomentMatrices(
        M11=X1.T @ X1 / n, M12=X1.T @ X2 / n, M21=X2.T @ X1 / n, M22=X2.T @ X2 / n,
        S11=X1.T @ y1 / n, S12=X1.T @ y2 / n, S21=X2.T @ y1 / n, S22=X2.T @ y2 / n,
        T11=float(y1 @ y1) / n, T22=float(y2 @ y2) / n, T12=float(y1 @ y2) / n,
        n=n)


def _m_rho(m: MomentMatrices, rho: float) -> np.ndarray:
    return m.M11 + m.M22 - rho * (m.M12 + m.M21)


def gls_beta(m: MomentMatrices, rho: float) -> np.ndarray:
    """Closed-form minimizer of Q(beta) at fixed rho."""
    rhs = m.S11 + m.S22 - rho * (m.S12 + m.S21)
    try:
        return np.linalg.solve(_m_rho(m, rho), rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateDesignError(f"singular design at rho={rho:g}: {exc}") from None


def q_components(m: MomentMatrices | Sequence[PairObs], beta: np.ndarray,
                 ) -> tuple[float, float, float]:
    """Residual sums Q1 = sum r1^2, Q2 = sum r2^2, Q3 = sum r1*r2.

    Accepts either raw pairs (residuals formed directly, exact for a
    perfect fit) or precomputed moments (O(1), used inside the profile
    search where Q is bounded away from zero).
    """
    beta = np.asarray(beta, dtype=float)
    if not isinstance(m, MomentMatrices):
        X1, X2, y1, y2 = design_rows(m, with_lane=len(beta) == 4)
        r1 = y1 - X1 @ beta
        r2 = y2 - X2 @ beta
        return float(r1 @ r1), float(r2 @ r2), float(r1 @ r2)
    n = m.n
    q1 = n * (m.T11 - 2.0 * beta @ m.S11 + beta @ m.M11 @ beta)
    q2 = n * (m.T22 - 2.0 * beta @ m.S22 + beta @ m.M22 @ beta)
    q3 = n * (m.T12 - beta @ m.S12 - beta @ m.S21 + beta @ m.M12 @ beta)
    return max(q1, 0.0), max(q2, 0.0), q3


def profile_loglik(m: MomentMatrices | Sequence[PairObs], rho: float) -> float:
    """Log-likelihood profiled over beta and sigma at fixed rho.

    Additive constants not involving the parameters are dropped.
    """
    if not isinstance(m, MomentMatrices):
        m = build_moments(m)
    if not 0.0 <= rho <= RHO_MAX:
        raise ValueError(f"rho={rho:g} outside [0, {RHO_MAX}]")
    beta = gls_beta(m, rho)
    q1, q2, q3 = q_components(m, beta)
    q = q1 + q2 - 2.0 * rho * q3
    n = m.n
    if q <= 0.0:
        return math.inf
    return n * (0.5 * math.log1p(-rho * rho) - math.log(q / (2.0 * n)) - 1.0)


@dataclass
class FitResult:
    """Estimates and precision for one event fit."""

    beta: np.ndarray            # (a1, a2, b, d); d is 0.0 under the d=0 constraint
    rho: float
    sigma_ml: float
    sigma_un: float             # sample-size corrected, used downstream
    kappa_ml: float
    kappa_un: float
    cov_beta: np.ndarray        # 4x4, from sigma_un^2 (1+rho) M_rho^{-1} / n
    loglik: float
    n: int
    p: int
    condition_number: float
    fixed_point_residual: float
    warnings: list[str] = field(default_factory=list)

    @property
    def a1(self) -> float:
        return float(self.beta[0])

    @property
    def a2(self) -> float:
        return float(self.beta[1])

    @property
    def b(self) -> float:
        return float(self.beta[2])

    @property
    def d(self) -> float:
        return float(self.beta[3])

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov_beta))

    @property
    def se_d(self) -> float:
        return float(self.se[3])

    def predicted(self, pair: PairObs) -> tuple[float, float]:
        """Model means for the pair's two runs."""
        mu1 = self.a1 + self.b * pair.x1 + self.d * pair.w
        mu2 = self.a2 + self.b * pair.x2 - self.d * pair.w
        return mu1, mu2

    def to_json_dict(self) -> dict:
        sig = _six_significant
        return {
            "a1": sig(self.a1), "a2": sig(self.a2), "b": sig(self.b), "d": sig(self.d),
            "rho": sig(self.rho),
            "sigma_un": sig(self.sigma_un), "kappa_un": sig(self.kappa_un),
            "se": {"a1": sig(self.se[0]), "a2": sig(self.se[1]),
                   "b": sig(self.se[2]), "d": sig(self.se[3])},
            "loglik": sig(self.loglik),
            "n": self.n,
            "warnings": list(self.warnings),
        }


def _six_significant(x: float) -> float:
    return float(f"{x:.6g}")


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _polish_rho(m: MomentMatrices, rho: float) -> float:
    """Sharpen the maximizer via its stationarity identity.

    Near the maximum the profile is flat at the scale of float noise, so
    bracketing comparisons stall around 1e-6; the interior stationary
    point instead satisfies rho = 2 Q3 / (Q1 + Q2), whose residual is
    linear in rho and contracts rapidly under iteration.  A boundary
    maximum at 0 is a natural fixed point of the clamped map.
    """
    for _ in range(100):
        beta = gls_beta(m, rho)
        q1, q2, q3 = q_components(m, beta)
        if q1 + q2 <= 0.0:
            return rho
        nxt = min(max(2.0 * q3 / (q1 + q2), 0.0), RHO_MAX)
        if abs(nxt - rho) < 1e-13:
            return nxt
        rho = nxt
    return rho


def fit_ml(pairs: Sequence[PairObs], constraint: str = "free_d",
           grid_step: float = 0.005, rho_tol: float = 1e-7,
           warnings: Sequence[str] = ()) -> FitResult:
    """Maximum-likelihood fit via a coarse grid plus golden-section search.

    ``constraint='d_equals_zero'`` drops the lane column (p = 3) and
    reports d as exactly zero with a zeroed row/column in ``cov_beta``.
    rho is restricted to [0, 1) since kappa^2 = sigma^2 rho/(1-rho) must
    be nonnegative; a maximum at the lower boundary reports kappa = 0.
    """
    if constraint not in ("free_d", "d_equals_zero"):
        raise ValueError(f"unknown constraint {constraint!r}")
    n = len(pairs)
    if n < 5:
        raise InsufficientDataError(f"need at least 5 usable pairs, got {n}")
    with_lane = constraint == "free_d"
    if with_lane:
        groups = {p.w > 0 for p in pairs}
        if len(groups) < 2:
            raise DegenerateDesignError(
                "all skaters started in the same lane; d is not identifiable")

    m = build_moments(pairs, with_lane)
    grid = np.arange(0.0, RHO_MAX, grid_step)
    values = [profile_loglik(m, r) for r in grid]
    k = int(np.argmax(values))
    if not math.isfinite(values[k]):
        raise FitError("profile likelihood is unbounded (degenerate responses)")
    lo = grid[k - 1] if k > 0 else 0.0
    hi = grid[k + 1] if k + 1 < len(grid) else RHO_MAX
    rho = _golden_max(lambda r: profile_loglik(m, r), lo, hi, rho_tol)
    polished = _polish_rho(m, rho)
    if profile_loglik(m, polished) >= profile_loglik(m, rho) - 1e-9:
        rho = polished
    if profile_loglik(m, 0.0) >= profile_loglik(m, rho):
        rho = 0.0

    beta = gls_beta(m, rho)
    q1, q2, q3 = q_components(m, beta)
    q = q1 + q2 - 2.0 * rho * q3
    p = m.p
    sigma2_ml = q / (2.0 * n * (1.0 + rho))
    sigma2_un = q / ((2.0 * n - p) * (1.0 + rho))
    shrink = rho / (1.0 - rho)
    mrho = _m_rho(m, rho)
    cov = sigma2_un * (1.0 + rho) * np.linalg.inv(mrho) / n
    fixed_point = abs(rho - 2.0 * q3 / (q1 + q2)) if q1 + q2 > 0 else 0.0

    if not with_lane:
        beta = np.append(beta, 0.0)
        full = np.zeros((4, 4))
        full[:3, :3] = cov
        cov = full

    return FitResult(
        beta=beta, rho=rho,
        sigma_ml=math.sqrt(sigma2_ml), sigma_un=math.sqrt(sigma2_un),
        kappa_ml=math.sqrt(sigma2_ml * shrink), kappa_un=math.sqrt(sigma2_un * shrink),
        cov_beta=cov, loglik=profile_loglik(m, rho), n=n, p=p,
        condition_number=float(np.linalg.cond(mrho)),
        fixed_point_residual=fixed_point,
        warnings=list(warnings))


@dataclass(frozen=True)
class SimpleFit:
    """Ordinary least squares on the day-to-day differences."""

    a0: float                   # a2 - a1
    b: float
    d: float
    sigma: float                # per-run scale: residual variance estimates 2 sigma^2
    se_d: float
    n: int


def fit_simple(pairs: Sequence[PairObs]) -> SimpleFit:
    """Regress Y2 - Y1 on an intercept, x2 - x1 and -2w."""
    n = len(pairs)
    if n < 4:
        raise InsufficientDataError(f"need at least 4 usable pairs, got {n}")
    x1, y1, x2, y2, w = _arrays(pairs)
    X = np.column_stack([np.ones(n), x2 - x1, -2.0 * w])
    if np.linalg.matrix_rank(X) < 3:
        raise DegenerateDesignError("collinear difference design")
    coef, *_ = np.linalg.lstsq(X, y2 - y1, rcond=None)
    resid = y2 - y1 - X @ coef
    s2 = float(resid @ resid) / (n - 3)
    cov = s2 * np.linalg.inv(X.T @ X)
    return SimpleFit(a0=float(coef[0]), b=float(coef[1]), d=float(coef[2]),
                     sigma=math.sqrt(s2 / 2.0), se_d=math.sqrt(float(cov[2, 2])), n=n)


@dataclass(frozen=True)
class VarianceReport:
    """Precision summary for the lane-difference estimate."""

    se_d_exact: float           # from the coefficient covariance
    se_d_balanced: float        # sqrt(2 sigma_un^2 / n), balanced-lane approximation
    var_sigma: float            # kurtosis-corrected variance of sigma-hat
    kurtosis_diff: float        # excess kurtosis of the day-difference residuals
    b_var_ratio: float          # Var(b_simple) / Var(b_mixed) = 2/(1+rho)


def variance_report(fit: FitResult, pairs: Sequence[PairObs]) -> VarianceReport:
    """Exact and approximate standard errors, with a normality check on sigma.

    The variance of sigma-hat under non-normal errors is
    sigma^2 (1/2 + kurt/4) / n with kurt the excess kurtosis of the
    day-to-day residual differences (zero under normality).
    """
    x1, y1, x2, y2, w = _arrays(pairs)
    resid = (y2 - y1) - (fit.a2 - fit.a1 + fit.b * (x2 - x1) - 2.0 * fit.d * w)
    centered = resid - resid.mean()
    m2 = float((centered ** 2).mean())
    kurt = float((centered ** 4).mean()) / m2 ** 2 - 3.0 if m2 > 0 else 0.0
    var_sigma = fit.sigma_un ** 2 * (0.5 + 0.25 * kurt) / fit.n
    return VarianceReport(
        se_d_exact=fit.se_d,
        se_d_balanced=math.sqrt(2.0 * fit.sigma_un ** 2 / fit.n),
        var_sigma=var_sigma,
        kurtosis_diff=kurt,
        b_var_ratio=2.0 / (1.0 + fit.rho))
