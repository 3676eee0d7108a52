"""Text, CSV and JSON renderings of analysis results."""

from __future__ import annotations

import json
from typing import Sequence

from .counterfactual import (OlympicEntry, SpeculativeList,
                             render_side_by_side, render_speculative_csv)
from .diagnostics import AdjustedDiffs, CleanedFit, ValidationReport
from .meta import EventSummary, MetaResult, PowerSpec
from .simulate import McReport, mc_report_dict


def _g(x: float) -> float:
    return float(f"{x:.6g}")


def fit_event_dict(label: str, cleaned: CleanedFit, n_usable: int) -> dict:
    return {
        "label": label,
        "n_usable": n_usable,
        "fit": cleaned.fit.to_json_dict(),
        "outliers": {
            "threshold": cleaned.report.threshold,
            "removed": list(cleaned.removed),
            "statistics": [
                {"name": r.name, "t1": _g(r.t1), "t2": _g(r.t2), "t3": _g(r.t3),
                 "flagged_by": list(r.flagged_by)}
                for r in cleaned.report.records],
        },
    }


def fit_json(events: Sequence[tuple[str, CleanedFit, int]]) -> str:
    payload = {"events": [fit_event_dict(l, c, n) for l, c, n in events]}
    return json.dumps(payload, indent=2) + "\n"


_FIT_COLS = "label,a1,a2,b,d,rho,sigma,kappa,se_d,n,outliers"


def fit_csv(events: Sequence[tuple[str, CleanedFit, int]]) -> str:
    lines = [_FIT_COLS]
    for label, c, _ in events:
        f = c.fit
        lines.append(",".join([
            label, f"{f.a1:.3f}", f"{f.a2:.3f}", f"{f.b:.3f}", f"{f.d:.3f}",
            f"{f.rho:.3f}", f"{f.sigma_un:.3f}", f"{f.kappa_un:.3f}",
            f"{f.se_d:.3f}", str(f.n), ";".join(c.removed)]))
    return "\n".join(lines) + "\n"


def fit_text(events: Sequence[tuple[str, CleanedFit, int]]) -> str:
    head = (f"{'event':<18}{'a1':>8}{'a2':>8}{'b':>7}{'d':>8}"
            f"{'rho':>7}{'sigma':>7}{'kappa':>7}{'se(d)':>7}{'n':>4}")
    lines = [head]
    for label, c, n_usable in events:
        f = c.fit
        lines.append(f"{label:<18}{f.a1:>8.3f}{f.a2:>8.3f}{f.b:>7.3f}{f.d:>8.3f}"
                     f"{f.rho:>7.3f}{f.sigma_un:>7.3f}{f.kappa_un:>7.3f}"
                     f"{f.se_d:>7.3f}{f.n:>4}")
        removed = ", ".join(c.removed) if c.removed else "none"
        lines.append(f"  usable pairs: {n_usable}; outliers removed: {removed}")
        for w in f.warnings:
            lines.append(f"  warning: {w}")
    return "\n".join(lines) + "\n"


def meta_dict(summaries: Sequence[EventSummary], result: MetaResult) -> dict:
    return {
        "events": [{"label": s.label, "d": _g(s.d), "se": _g(s.se)} for s in summaries],
        "grand": {
            "d": _g(result.grand_d), "se": _g(result.grand_se), "z": _g(result.z),
            "p_one_sided": _g(result.p_one_sided), "p_two_sided": _g(result.p_two_sided),
            "ci95": [_g(result.ci95[0]), _g(result.ci95[1])],
            "omega0": _g(result.omega0), "K": result.K,
        },
    }


def meta_json(summaries, result) -> str:
    return json.dumps(meta_dict(summaries, result), indent=2) + "\n"


def meta_csv(summaries, result) -> str:
    lines = ["label,d,se"]
    lines += [f"{s.label},{s.d:.3f},{s.se:.3f}" for s in summaries]
    lines.append(f"grand average,{result.grand_d:.3f},{result.grand_se:.3f}")
    return "\n".join(lines) + "\n"


def meta_text(summaries, result) -> str:
    width = max(len(s.label) for s in summaries) + 2
    lines = [f"{'event':<{width}}{'d':>8}{'se':>8}"]
    lines += [f"{s.label:<{width}}{s.d:>8.3f}{s.se:>8.3f}" for s in summaries]
    lines.append(f"{'grand average':<{width}}{result.grand_d:>8.3f}{result.grand_se:>8.3f}")
    lines.append(f"z = {result.z:.2f}, one-sided p = {result.p_one_sided:.4g}, "
                 f"two-sided p = {result.p_two_sided:.4g}")
    lines.append(f"95% CI [{result.ci95[0]:.3f}, {result.ci95[1]:.3f}], "
                 f"between-event spread omega0 = {result.omega0:.3f}")
    return "\n".join(lines) + "\n"


def validation_dict(label: str, rep: ValidationReport) -> dict:
    return {
        "label": label,
        "n": rep.n,
        "skaters": [{"name": r.name, "ave_star": _g(r.ave_star),
                     "diff_star": _g(r.diff_star)} for r in rep.records],
        "moments": {
            "skew_diff": _g(rep.skew_diff), "skew_ave": _g(rep.skew_ave),
            "kurt_diff": _g(rep.kurt_diff), "kurt_ave": _g(rep.kurt_ave),
            "corr": _g(rep.corr),
        },
        "bands": {"skew": _g(rep.band_skew), "kurt": _g(rep.band_kurt),
                  "corr": _g(rep.band_corr)},
    }


def validation_json(label: str, rep: ValidationReport) -> str:
    return json.dumps(validation_dict(label, rep), indent=2) + "\n"


def validation_csv(rep: ValidationReport) -> str:
    lines = ["name,ave_star,diff_star"]
    lines += [f"{r.name},{r.ave_star:.4f},{r.diff_star:.4f}" for r in rep.records]
    return "\n".join(lines) + "\n"


def validation_text(label: str, rep: ValidationReport) -> str:
    lines = [f"{label}: model validation on {rep.n} pairs",
             f"  skewness      diff* {rep.skew_diff:+.3f}  ave* {rep.skew_ave:+.3f}"
             f"   (90% band +-{rep.band_skew:.2f})",
             f"  excess kurt   diff* {rep.kurt_diff:+.3f}  ave* {rep.kurt_ave:+.3f}"
             f"   (90% band +-{rep.band_kurt:.2f})",
             f"  corr(ave*, diff*) {rep.corr:+.3f}   (90% band +-{rep.band_corr:.2f})"]
    return "\n".join(lines) + "\n"


def kde_csv(curve) -> str:
    lines = ["x,density"]
    lines += [f"{x:.6g},{y:.6g}" for x, y in zip(curve.grid, curve.density)]
    return "\n".join(lines) + "\n"


def adjusted_csv(ad: AdjustedDiffs) -> str:
    lines = ["name,w,D,D_star"]
    lines += [f"{r.name},{r.w:+.1f},{r.D:.4f},{r.D_star:.4f}" for r in ad.records]
    return "\n".join(lines) + "\n"


def adjusted_json(label: str, ad: AdjustedDiffs) -> str:
    payload = {
        "label": label,
        "sigma_un": _g(ad.fit_zero_d.sigma_un),
        "skaters": [{"name": r.name, "w": r.w, "D": _g(r.D), "D_star": _g(r.D_star)}
                    for r in ad.records],
    }
    return json.dumps(payload, indent=2) + "\n"


def speculate_json(label: str, entries: Sequence[OlympicEntry],
                   spec: SpeculativeList) -> str:
    payload = {
        "label": label,
        "d": spec.d_cs / 100.0,
        "entries": [{"rank": e.rank, "name": e.name,
                     "time": None if e.time_cs is None else e.time_cs / 100.0}
                    for e in spec.entries],
    }
    return json.dumps(payload, indent=2) + "\n"


def speculate_render(fmt: str, label: str, entries, spec) -> str:
    if fmt == "json":
        return speculate_json(label, entries, spec)
    if fmt == "csv":
        return render_speculative_csv(spec)
    return render_side_by_side(entries, spec, label)


def power_dict(spec: PowerSpec) -> dict:
    return {"sigma": spec.sigma, "target_se": spec.target_se, "true_d": spec.true_d,
            "alpha": spec.alpha, "N_required": spec.N_required, "power": _g(spec.power)}


def power_text(spec: PowerSpec) -> str:
    return (f"per-run spread sigma = {spec.sigma:g}, target se = {spec.target_se:g}\n"
            f"paired runs required: {spec.N_required}\n"
            f"one-sided power at true d = {spec.true_d:g} "
            f"(alpha = {spec.alpha:g}): {spec.power:.3f}\n")


def mc_text(rep: McReport) -> str:
    d = mc_report_dict(rep)
    return (f"{rep.reps} simulated events of n = {rep.n} (seed {rep.seed})\n"
            f"mean d-hat = {d['d_mean']:g} (true {rep.d_true:g})\n"
            f"var d-hat = {d['d_var']:g} vs 2 sigma^2/n = {d['d_var_theory']:g} "
            f"(ratio {d['var_ratio']:g})\n"
            f"mean sigma_un^2 = {d['sigma2_un_mean']:g} (true {rep.sigma_true ** 2:g}); "
            f"mean rho-hat = {d['rho_mean']:g}\n")
