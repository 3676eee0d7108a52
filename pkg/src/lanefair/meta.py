"""Combining per-event lane-difference estimates across championships.

Inverse-variance weighting gives the optimal fixed-effects combination;
a moment estimator quantifies how much the true per-event difference
wanders between events, and a split-half contrast compares the top half
of each field with the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import norm

from .dataset import PairObs
from .diagnostics import clean_and_refit
from .model import FitError, fit_ml


class MetaError(ValueError):
    pass


@dataclass(frozen=True)
class EventSummary:
    label: str
    d: float
    se: float
    n: int | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.d):
            raise MetaError(f"{self.label}: non-finite estimate")
        if not self.se > 0.0:
            raise MetaError(f"{self.label}: standard error must be positive")


@dataclass(frozen=True)
class MetaResult:
    grand_d: float
    grand_se: float
    z: float
    p_one_sided: float
    p_two_sided: float
    ci95: tuple[float, float]
    omega0: float
    K: int


def combine(summaries: Sequence[EventSummary]) -> MetaResult:
    """Inverse-variance weighted mean with normal-tail tests.

    With a single summary the combination is that summary itself and the
    between-event spread is reported as zero.
    """
    if not summaries:
        raise MetaError("no event summaries to combine")
    d = np.array([s.d for s in summaries])
    w = np.array([1.0 / s.se ** 2 for s in summaries])
    grand = float((w * d).sum() / w.sum())
    se = float(w.sum() ** -0.5)
    z = grand / se
    omega0 = heterogeneity(summaries, grand) if len(summaries) >= 2 else 0.0
    return MetaResult(
        grand_d=grand, grand_se=se, z=z,
        p_one_sided=float(norm.sf(z)),
        p_two_sided=float(2.0 * norm.sf(abs(z))),
        ci95=(grand - 1.96 * se, grand + 1.96 * se),
        omega0=omega0, K=len(summaries))


def heterogeneity(summaries: Sequence[EventSummary], grand_d: float | MetaResult) -> float:
    """Moment estimate of the between-event standard deviation.

    The weighted dispersion sum_j (d_j - d)^2 / se_j^2 has null mean K-1;
    its excess over that, scaled by A2 - A4/A2 with A_q = sum se_j^{-q},
    estimates omega0^2.  Truncated at zero.
    """
    if len(summaries) < 2:
        raise MetaError("heterogeneity needs at least 2 events")
    if isinstance(grand_d, MetaResult):
        grand_d = grand_d.grand_d
    d = np.array([s.d for s in summaries])
    se = np.array([s.se for s in summaries])
    t = float((((d - grand_d) / se) ** 2).sum())
    a2 = float((se ** -2).sum())
    a4 = float((se ** -4).sum())
    denom = a2 - a4 / a2
    if denom <= 0.0:
        raise MetaError("degenerate weights: all precision on one event")
    return math.sqrt(max(0.0, (t - (len(summaries) - 1)) / denom))


def predict_range(grand_d: float, omega0: float, coverage: float = 0.90,
                  ) -> tuple[float, float]:
    """Central range for the event-specific true difference."""
    if omega0 < 0.0:
        raise MetaError("omega0 must be nonnegative")
    half = float(norm.ppf(0.5 + coverage / 2.0)) * omega0
    return (grand_d - half, grand_d + half)


def cross_group_correlation(a: Sequence[EventSummary], b: Sequence[EventSummary]) -> float:
    """Pearson correlation of two aligned per-event estimate sequences."""
    if len(a) != len(b) or len(a) < 3:
        raise MetaError("need two equally long lists with at least 3 events")
    for sa, sb in zip(a, b):
        if sa.label != sb.label:
            raise MetaError(f"label mismatch: {sa.label!r} vs {sb.label!r}")
    return float(np.corrcoef([s.d for s in a], [s.d for s in b])[0, 1])


@dataclass(frozen=True)
class PowerSpec:
    sigma: float
    target_se: float
    true_d: float
    alpha: float
    N_required: int             # total paired runs for the target precision
    power: float


def power_plan(sigma: float, target_se: float, true_d: float,
               alpha: float = 0.05) -> PowerSpec:
    """Sample-size and one-sided detection probability at the target precision.

    A combined estimate over N paired runs has variance about 2 sigma^2 / N,
    so N = ceil(2 sigma^2 / se^2); power is Phi(d/se - z_{1-alpha}).
    """
    if min(sigma, target_se) <= 0.0 or not 0.0 < alpha < 0.5:
        raise MetaError("need sigma, target_se > 0 and alpha in (0, 0.5)")
    n_req = math.ceil(2.0 * sigma ** 2 / target_se ** 2)
    power = float(norm.cdf(true_d / target_se - norm.ppf(1.0 - alpha)))
    return PowerSpec(sigma, target_se, true_d, alpha, n_req, power)


@dataclass(frozen=True)
class SplitEntry:
    label: str
    d_best: float
    se_best: float
    d_rest: float
    se_rest: float


@dataclass(frozen=True)
class SplitContrast:
    per_event: tuple[SplitEntry, ...]
    combined_delta: float
    combined_se: float
    warnings: tuple[str, ...]


def split_half(events: Iterable[tuple[str, Sequence[PairObs]]],
               min_half: int = 5) -> SplitContrast:
    """Best-half vs rest-half contrast of the lane difference.

    Each cleaned event is ranked by the skater's average finishing time
    (day-1 time, then entry order, break ties); the best floor(n/2)
    skaters form one group and the remainder the other.  Per-event
    contrasts d_best - d_rest are combined by inverse variance.
    """
    entries: list[SplitEntry] = []
    warnings: list[str] = []
    for label, pairs in events:
        ranked = sorted(
            enumerate(pairs),
            key=lambda ip: (0.5 * (ip[1].y1 + ip[1].y2), ip[1].y1, ip[0]))
        ordered = [p for _, p in ranked]
        n_best = len(ordered) // 2
        best, rest = ordered[:n_best], ordered[n_best:]
        if min(len(best), len(rest)) < min_half:
            warnings.append(f"{label}: field too small to halve, skipped")
            continue
        try:
            fb = fit_ml(best)
            fr = fit_ml(rest)
        except FitError as exc:
            warnings.append(f"{label}: {exc}; skipped")
            continue
        entries.append(SplitEntry(label, fb.d, fb.se_d, fr.d, fr.se_d))
    if not entries:
        raise MetaError("no event could be split")
    deltas = [EventSummary(e.label, e.d_best - e.d_rest,
                           math.hypot(e.se_best, e.se_rest)) for e in entries]
    pooled = combine(deltas)
    return SplitContrast(tuple(entries), pooled.grand_d, pooled.grand_se,
                         tuple(warnings))


def summaries_from_events(cleaned: Iterable[tuple[str, Sequence[PairObs]]],
                          ) -> list[EventSummary]:
    """Fit each cleaned event and collect (d, se) summaries."""
    out = []
    for label, pairs in cleaned:
        fit = fit_ml(pairs)
        out.append(EventSummary(label, fit.d, fit.se_d, fit.n))
    return out


def read_summaries(text: str) -> list[EventSummary]:
    """Parse a summary CSV: ``label,d,se`` rows (or bare ``d,se``).

    A header row is detected by a non-numeric trailing field and skipped.
    """
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) == 2:
            fields = [f"event {lineno}", *fields]
        if len(fields) != 3:
            raise MetaError(f"line {lineno}: expected 'label,d,se'")
        try:
            d, se = float(fields[1]), float(fields[2])
        except ValueError:
            if lineno == 1:
                continue        # header
            raise MetaError(f"line {lineno}: non-numeric d/se") from None
        out.append(EventSummary(fields[0], d, se))
    if not out:
        raise MetaError("no summaries found")
    return out


def clean_events(datasets, lane_policy: str = "warn_day1", threshold: float = 2.75):
    """Run the screen-and-refit pipeline over several parsed events.

    Returns (label, cleaned-pairs, CleanedFit, warnings) per event.
    """
    from .dataset import usable_pairs

    out = []
    for ds in datasets:
        pairs, warns = usable_pairs(ds, lane_policy)
        cleaned = clean_and_refit(pairs, threshold, warnings=warns)
        out.append((ds.label, cleaned.pairs_clean, cleaned, warns))
    return out
