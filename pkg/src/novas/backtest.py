"""Rolling pseudo-out-of-sample comparison harness.

Rolls a fixed window through a return series; on every window calibrates
each transform variant over the alpha grid, produces aggregated h-step
forecasts for every (variant, alpha, risk, innovation-kind) combination plus
the GARCH bootstrap and direct baselines, and scores each method against the
realized aggregates. All methods see identical windows and identical truth
sequences; every random stream is derived from (seed, window, method), so
reports do not depend on the parallel schedule.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CalibrationError, DataError, FitError
from .garch import fit_garch11_mle, garch_direct_forecast
from .innovations import Seed, SourceKind, substream
from .predictor import innovation_source, simulate_paths
from .returns import ReturnSeries
from .transform import CalibrationGrid, calibrate_many, feasible_alphas
from .weights import NovasVariant

FAMILIES = ("GE", "GE_NO_A0", "GA", "GA_NO_A0", "GARCH_BOOT", "GARCH_DIRECT")
KINDS = ("mc", "boot")
_KIND_TO_SOURCE = {"mc": SourceKind.TRIMMED_NORMAL, "boot": SourceKind.EMPIRICAL}

# substream domains: one per independent consumer of randomness
_DOMAIN_NOVAS = 1
_DOMAIN_GARCH_BOOT = 2


@dataclass(frozen=True)
class MethodKey:
    """One column of the comparison: family plus its free settings."""

    family: str
    alpha: float | None = None
    risk: str | None = None
    kind: str | None = None

    def label(self) -> str:
        parts = [self.family]
        if self.alpha is not None:
            parts.append(f"a={self.alpha:g}")
        if self.risk is not None:
            parts.append(self.risk)
        if self.kind is not None:
            parts.append(self.kind)
        return "|".join(parts)


@dataclass(frozen=True)
class BacktestConfig:
    window: int
    horizons: tuple[int, ...] = (1, 5, 30)
    alpha_grid: tuple[float, ...] = tuple(k / 10 for k in range(1, 9))
    variants: tuple[NovasVariant, ...] = tuple(NovasVariant)
    risks: tuple[str, ...] = ("L1", "L2")
    kinds: tuple[str, ...] = KINDS
    paths: int = 5000
    seed: Seed = field(default_factory=Seed)
    grid: CalibrationGrid = field(default_factory=CalibrationGrid)
    metric: str = "squared"
    include_garch_bootstrap: bool = True
    threads: int | None = None
    freeze_variance: bool = False
    common_window: bool = True

    def __post_init__(self):
        if self.window < 1:
            raise DataError("window must be positive")
        if not self.horizons or any(h < 1 for h in self.horizons):
            raise DataError("horizons must be positive")
        if any(not 0.0 < a < 1.0 for a in self.alpha_grid):
            raise DataError("every alpha must lie in (0, 1)")
        if self.metric not in ("squared", "literal"):
            raise DataError(f"unknown metric {self.metric!r}")
        if any(k not in KINDS for k in self.kinds):
            raise DataError(f"kinds must be among {KINDS}")
        if self.paths < 100:
            raise DataError(
                f"ensemble of {self.paths} paths is below the meaningful minimum 100"
            )
        object.__setattr__(self, "horizons", tuple(sorted(set(self.horizons))))
        object.__setattr__(self, "seed", Seed.of(self.seed))
        object.__setattr__(
            self, "variants", tuple(NovasVariant(v) for v in self.variants)
        )


@dataclass(frozen=True)
class MethodScore:
    method: MethodKey
    horizon: int
    score: float
    n_predictions: int
    ratio: float


@dataclass
class BacktestReport:
    config: BacktestConfig
    horizons: tuple[int, ...]
    counts: dict[int, int]
    truths: dict[int, np.ndarray]
    predictions: dict[MethodKey, dict[int, np.ndarray]]
    scores: list[MethodScore]
    benchmark_scores: dict[int, float]
    best_per_family: dict[tuple[str, int], MethodScore]
    infeasible: dict[str, tuple[float, ...]]
    failed_windows: dict[int, int]

    def score_for(self, method: MethodKey, horizon: int) -> MethodScore:
        for s in self.scores:
            if s.method == method and s.horizon == horizon:
                return s
        raise KeyError((method, horizon))


def score_performance(preds, truths, metric: str = "squared") -> float:
    """Performance value of a prediction sequence against realized values.

    ``squared`` (default) sums squared errors; ``literal`` sums signed
    differences, which rewards cancellation and exists only for comparison
    with the raw definition.
    """
    preds = np.asarray(preds, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if preds.shape != truths.shape or preds.ndim != 1 or preds.size < 1:
        raise DataError("predictions and truths must be equal-length, nonempty")
    diff = preds - truths
    if metric == "squared":
        return float(np.sum(diff * diff))
    if metric == "literal":
        return float(np.sum(diff))
    raise DataError(f"unknown metric {metric!r}")


def _novas_methods(cfg: BacktestConfig, usable: dict[NovasVariant, tuple[float, ...]]):
    out = []
    for variant in cfg.variants:
        for alpha in usable[variant]:
            for risk in cfg.risks:
                for kind in cfg.kinds:
                    out.append(MethodKey(variant.value, alpha, risk, kind))
    return out


def _aggregates(paths: np.ndarray, horizons) -> dict[int, np.ndarray]:
    """Per-path time-aggregated squared values at each horizon prefix."""
    csum = np.cumsum(paths * paths, axis=1)
    return {h: csum[:, h - 1] / h for h in horizons}


def run_rolling_poos(y: ReturnSeries, cfg: BacktestConfig) -> BacktestReport:
    values = y.values
    n = values.size
    horizons = cfg.horizons
    maxh = max(horizons)
    if cfg.window >= n:
        raise DataError(f"window {cfg.window} must be smaller than the series ({n})")
    if n < cfg.window + maxh:
        raise DataError(
            f"need at least window + max horizon = {cfg.window + maxh} returns, got {n}"
        )
    counts = {h: n - cfg.window - h + 1 for h in horizons}
    n_windows = counts[min(horizons)]

    usable = {
        v: tuple(feasible_alphas(v, cfg.alpha_grid, cfg.window, cfg.grid))
        for v in cfg.variants
    }
    infeasible = {
        v.value: tuple(a for a in cfg.alpha_grid if a not in usable[v])
        for v in cfg.variants
        if len(usable[v]) < len(cfg.alpha_grid)
    }

    methods = _novas_methods(cfg, usable)
    if cfg.include_garch_bootstrap:
        methods += [MethodKey("GARCH_BOOT", None, risk, None) for risk in cfg.risks]
    benchmark_key = MethodKey("GARCH_DIRECT")
    methods.append(benchmark_key)

    variant_index = {v: i for i, v in enumerate(NovasVariant)}
    kind_index = {k: i for i, k in enumerate(KINDS)}

    def job(w0: int):
        window_returns = ReturnSeries(values[w0 : w0 + cfg.window])
        h_here = [h for h in horizons if w0 < counts[h]]
        h_top = max(h_here)
        preds: dict[MethodKey, dict[int, float]] = {}
        dead_families: list[str] = []

        for variant in cfg.variants:
            if not usable[variant]:
                continue
            try:
                transforms = calibrate_many(
                    variant, usable[variant], window_returns, cfg.grid
                )
            except (CalibrationError, DataError):
                # degenerate window for this variant: skip it here, count it,
                # and let the common-window mask keep scores comparable
                dead_families.append(variant.value)
                continue
            vi = variant_index[variant]
            for ai, alpha in enumerate(cfg.alpha_grid):
                if alpha not in transforms:
                    continue
                ct = transforms[alpha]
                for kind in cfg.kinds:
                    source = innovation_source(ct, _KIND_TO_SOURCE[kind])
                    gen = substream(
                        cfg.seed, _DOMAIN_NOVAS, w0, vi, ai, kind_index[kind]
                    )
                    draws = source.draw(gen, (cfg.paths, h_top))
                    paths = simulate_paths(
                        ct, draws, freeze_variance=cfg.freeze_variance
                    )
                    aggs = _aggregates(paths, h_here)
                    for risk in cfg.risks:
                        key = MethodKey(variant.value, alpha, risk, kind)
                        reduced = {
                            h: float(np.mean(a) if risk == "L2" else np.median(a))
                            for h, a in aggs.items()
                        }
                        preds[key] = reduced

        try:
            fit = fit_garch11_mle(window_returns)
        except (FitError, DataError):
            dead_families.extend(["GARCH_BOOT", "GARCH_DIRECT"])
        else:
            variances = garch_direct_forecast(
                fit, float(window_returns.values[-1] ** 2), h_top
            )
            vcum = np.cumsum(variances)
            preds[benchmark_key] = {h: float(vcum[h - 1] / h) for h in h_here}
            if cfg.include_garch_bootstrap:
                gen = substream(cfg.seed, _DOMAIN_GARCH_BOOT, w0)
                sig_star = gen.choice(
                    np.sqrt(fit.sigma2_path), size=(cfg.paths, h_top), replace=True
                )
                wmat = gen.standard_normal((cfg.paths, h_top))
                aggs = _aggregates(sig_star * wmat, h_here)
                for risk in cfg.risks:
                    key = MethodKey("GARCH_BOOT", None, risk, None)
                    preds[key] = {
                        h: float(np.mean(a) if risk == "L2" else np.median(a))
                        for h, a in aggs.items()
                    }
        return w0, preds, dead_families

    workers = cfg.threads or (os.cpu_count() or 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(n_windows)))
    else:
        results = [job(w0) for w0 in range(n_windows)]
    results.sort(key=lambda r: r[0])

    predictions = {
        m: {h: np.full(counts[h], np.nan) for h in horizons} for m in methods
    }
    window_ok = {h: np.ones(counts[h], dtype=bool) for h in horizons}
    for w0, preds, dead_families in results:
        if dead_families:
            for h in horizons:
                if w0 < counts[h]:
                    window_ok[h][w0] = False
        for key, by_h in preds.items():
            for h, value in by_h.items():
                predictions[key][h][w0] = value

    truths = {}
    for h in horizons:
        t = np.empty(counts[h])
        sq = values * values
        for w0 in range(counts[h]):
            t[w0] = sq[w0 + cfg.window : w0 + cfg.window + h].mean()
        truths[h] = t

    scores: list[MethodScore] = []
    raw: dict[tuple[MethodKey, int], tuple[float, int]] = {}
    for h in horizons:
        if cfg.common_window:
            mask = window_ok[h].copy()
            for m in methods:
                mask &= np.isfinite(predictions[m][h])
            masks = {m: mask for m in methods}
        else:
            masks = {m: np.isfinite(predictions[m][h]) for m in methods}
        for m in methods:
            mask = masks[m]
            if not mask.any():
                raise CalibrationError(
                    f"method {m.label()} produced no usable window at h={h}"
                )
            score = score_performance(
                predictions[m][h][mask], truths[h][mask], cfg.metric
            )
            raw[(m, h)] = (score, int(mask.sum()))

    benchmark_scores = {h: raw[(benchmark_key, h)][0] for h in horizons}
    for h, s in benchmark_scores.items():
        if s == 0.0:
            raise DataError(f"benchmark score is zero at h={h}; ratios undefined")
    for m in methods:
        for h in horizons:
            score, count = raw[(m, h)]
            scores.append(
                MethodScore(m, h, score, count, score / benchmark_scores[h])
            )

    best: dict[tuple[str, int], MethodScore] = {}
    for s in scores:
        key = (s.method.family, s.horizon)
        if key not in best or s.ratio < best[key].ratio:
            best[key] = s

    failed = {h: int((~window_ok[h]).sum()) for h in horizons}
    return BacktestReport(
        config=cfg,
        horizons=horizons,
        counts=counts,
        truths=truths,
        predictions=predictions,
        scores=scores,
        benchmark_scores=benchmark_scores,
        best_per_family=best,
        infeasible=infeasible,
        failed_windows=failed,
    )


def relative_report(report: BacktestReport) -> list[dict]:
    """Family-best benchmark-relative table, one row per horizon.

    Every score is divided by the GARCH-direct score at the same horizon and
    each family contributes its best (minimum-ratio) variant, matching the
    published comparison format.
    """
    for h, s in report.benchmark_scores.items():
        if s == 0.0:
            raise DataError(f"benchmark score is zero at h={h}")
    families = [f for f in FAMILIES if any(k[0] == f for k in report.best_per_family)]
    rows = []
    for h in report.horizons:
        row: dict = {"horizon": h}
        for fam in families:
            entry = report.best_per_family.get((fam, h))
            row[fam] = entry.ratio if entry is not None else None
        rows.append(row)
    return rows


def format_table(rows: list[dict], label: str = "") -> str:
    """Fixed-width text rendering of :func:`relative_report` rows."""
    families = [k for k in rows[0] if k != "horizon"]
    width = max(13, max(len(f) for f in families) + 2)
    head = "horizon".ljust(9) + "".join(f.rjust(width) for f in families)
    lines = [label, head] if label else [head]
    for row in rows:
        cells = "".join(
            (f"{row[f]:.5f}" if row[f] is not None else "-").rjust(width)
            for f in families
        )
        lines.append(f"{row['horizon']:<9d}" + cells)
    return "\n".join(lines)
