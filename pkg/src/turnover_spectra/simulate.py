"""Synthetic one-factor panels, a Monte-Carlo trade-netting simulator, and
the reduction-coefficient sweep harness with through-origin regression."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Callable

import numpy as np

from .conditioning import default_floor, eigendecompose, rj_repair
from .errors import DegenerateTopWarning, UndefinedRegressorError
from .panel import COMPLETE_CASES, ESTIMATION_MODES, TimeSeriesPanel, sample_moments
from .turnover import fix_sign_basis, rho_star

PanelGenerator = Callable[[int, int], TimeSeriesPanel]


@dataclass(frozen=True)
class SimConfig:
    """Seeded configuration for synthetic panels and crossing simulations.

    ``target_correlation`` is either a scalar pairwise correlation in [0, 1]
    or a vector of per-series factor loadings in [0, 1] (population pairwise
    correlation is then the product of the two loadings).
    """

    n_alphas: int
    n_periods: int
    n_instruments: int = 1
    target_correlation: float | tuple[float, ...] = 0.0
    master_seed: int = 0
    n_paths: int = 1

    def __post_init__(self) -> None:
        if self.n_alphas < 2:
            raise ValueError("n_alphas must be at least 2")
        if self.n_periods < 2:
            raise ValueError("n_periods must be at least 2")
        if self.n_instruments < 1:
            raise ValueError("n_instruments must be at least 1")
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        target = self.target_correlation
        if np.isscalar(target):
            if not 0.0 <= float(target) <= 1.0:
                raise ValueError("target_correlation must lie in [0, 1]")
        else:
            loadings = np.asarray(target, dtype=float)
            if loadings.shape != (self.n_alphas,):
                raise ValueError("loading vector must have one entry per alpha")
            if ((loadings < 0) | (loadings > 1)).any():
                raise ValueError("loadings must lie in [0, 1]")
            object.__setattr__(self, "target_correlation", tuple(loadings))

    def loadings(self) -> np.ndarray:
        """Per-series factor loadings b_i (scalar rho maps to sqrt(rho))."""
        target = self.target_correlation
        if np.isscalar(target):
            return np.full(self.n_alphas, math.sqrt(float(target)))
        return np.asarray(target, dtype=float)


def _rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent stream derived by hashing (master_seed, key...)."""
    return np.random.default_rng(np.random.SeedSequence([master_seed, *key]))


def gen_one_factor_panel(config: SimConfig) -> TimeSeriesPanel:
    """Fully observed panel: series i = b_i * common + sqrt(1 - b_i^2) * own noise.

    Innovations are standard normal and the draw is fully determined by
    ``master_seed``; population pairwise correlation is b_i * b_j.
    """
    b = config.loadings()
    rng = _rng(config.master_seed)
    common = rng.standard_normal(config.n_periods)
    idiosyncratic = rng.standard_normal((config.n_alphas, config.n_periods))
    values = (
        b[:, None] * common[None, :]
        + np.sqrt(1.0 - b**2)[:, None] * idiosyncratic
    )
    ids = tuple(f"a{i + 1:04d}" for i in range(config.n_alphas))
    return TimeSeriesPanel(ids, values, np.ones_like(values, dtype=bool))


def one_factor_correlation(loadings) -> np.ndarray:
    """Population correlation matrix b b^T with unit diagonal."""
    b = np.asarray(loadings, dtype=float)
    if b.ndim != 1 or b.size < 2:
        raise ValueError("loadings must be a vector of length >= 2")
    if ((b < 0) | (b > 1)).any():
        raise ValueError("loadings must lie in [0, 1]")
    corr = np.outer(b, b)
    np.fill_diagonal(corr, 1.0)
    return corr


def gen_trade_matrix(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """Desired dollar trades (alphas x instruments) for one rebalance.

    Each alpha's book follows its signal, so its trade is the one-period
    signal change, spread across instruments with positive random exposures;
    trades of different alphas inherit the one-factor correlation structure.
    """
    b = config.loadings()
    common = rng.standard_normal(2)
    idiosyncratic = rng.standard_normal((config.n_alphas, 2))
    signal = b[:, None] * common[None, :] + np.sqrt(1.0 - b**2)[:, None] * idiosyncratic
    change = signal[:, 0] - signal[:, 1]
    exposure = rng.uniform(0.5, 1.5, size=(config.n_alphas, config.n_instruments))
    return exposure / config.n_instruments * change[:, None]


@dataclass(frozen=True)
class SimResult:
    """Gross versus internally netted dollars traded."""

    gross_traded: float
    netted_traded: float
    crossing_ratio: float
    per_path_ratios: tuple[float, ...]
    mean: float
    std_error: float
    zero_gross_paths: int = 0


def simulate_crossing(trades) -> SimResult:
    """Net the desired trades instrument by instrument.

    ``gross = sum |d_ik|`` and ``netted = sum_k |sum_i d_ik|``, so the
    crossing ratio (netted / gross) is the fraction of trading the netted
    book still has to take to market. An all-zero matrix yields ratio 1 by
    convention and is counted in ``zero_gross_paths``.
    """
    d = np.asarray(trades, dtype=float)
    if d.ndim != 2:
        raise ValueError("trades must be a 2-D matrix (alphas x instruments)")
    if not np.isfinite(d).all():
        raise ValueError("trades must be finite")
    gross = float(np.abs(d).sum())
    netted = float(np.abs(d.sum(axis=0)).sum())
    degenerate = gross == 0.0
    ratio = 1.0 if degenerate else netted / gross
    return SimResult(gross, netted, ratio, (ratio,), ratio, 0.0, int(degenerate))


def simulate_crossing_paths(config: SimConfig) -> SimResult:
    """Average the crossing ratio over independently seeded trade paths.

    Per-path streams are derived by hashing (master_seed, path index), so
    results are bit-reproducible and independent of evaluation order.
    """
    grosses = np.empty(config.n_paths)
    netteds = np.empty(config.n_paths)
    ratios = np.empty(config.n_paths)
    zero = 0
    for p in range(config.n_paths):
        result = simulate_crossing(gen_trade_matrix(config, _rng(config.master_seed, p)))
        grosses[p] = result.gross_traded
        netteds[p] = result.netted_traded
        ratios[p] = result.crossing_ratio
        zero += result.zero_gross_paths
    gross = float(np.sum(grosses))
    netted = float(np.sum(netteds))
    ratio = netted / gross if gross > 0 else 1.0
    mean = float(ratios.mean())
    std_error = (
        float(ratios.std(ddof=1) / math.sqrt(config.n_paths))
        if config.n_paths > 1
        else 0.0
    )
    return SimResult(gross, netted, ratio, tuple(ratios), mean, std_error, zero)


def no_intercept_regression(x, y) -> tuple[float, float]:
    """Through-origin fit of y on x: (slope, F-statistic).

    ``slope = sum(xy) / sum(x^2)``; F compares the explained sum of squares
    (1 degree of freedom) with RSS / (n - 1). An exact fit reports F as
    ``+inf``.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.ndim != 1 or xv.shape != yv.shape:
        raise ValueError("x and y must be 1-D vectors of equal length")
    if xv.size < 2:
        raise ValueError("regression needs at least two points")
    if not (np.isfinite(xv).all() and np.isfinite(yv).all()):
        raise ValueError("regression inputs must be finite")
    sxx = float(xv @ xv)
    if sxx == 0.0:
        raise UndefinedRegressorError("all regressor values are zero")
    slope = float(xv @ yv) / sxx
    fitted = slope * xv
    explained = float(fitted @ fitted)
    rss = float(((yv - fitted) ** 2).sum())
    if rss == 0.0:
        return slope, math.inf
    return slope, explained / (rss / (xv.size - 1))


@dataclass(frozen=True)
class SweepOptions:
    """Conditioning choices applied at every sweep grid point."""

    estimation_mode: str = COMPLETE_CASES
    repair: bool = True
    repair_floor: float | None = None  # None -> default_floor(n)

    def __post_init__(self) -> None:
        if self.estimation_mode not in ESTIMATION_MODES:
            raise ValueError(f"estimation_mode must be one of {ESTIMATION_MODES}")
        if self.repair_floor is not None and self.repair_floor <= 0:
            raise ValueError("repair_floor must be positive")


@dataclass(frozen=True)
class SweepResult:
    """rho_star * N against N, plus the through-origin fit.

    Failed grid points carry NaN in the per-point tuples and a message in
    ``errors``; the regression uses the surviving points only.
    ``f_statistic`` is None when fewer than two points survive.
    """

    grid: tuple[int, ...]
    rho_stars: tuple[float, ...]
    rho_star_times_n: tuple[float, ...]
    slope_no_intercept: float
    f_statistic: float | None
    residuals: tuple[float, ...]
    errors: tuple[str, ...] = ()


def sweep_rho_star(
    grid,
    generator: PanelGenerator,
    options: SweepOptions | None = None,
    seed: int = 0,
) -> SweepResult:
    """Estimate rho_star across panel sizes and fit rho_star*N ~ N through the origin.

    For every N in the strictly increasing ``grid``: generate a panel with
    ``generator(n_alphas, point_seed)``, estimate the correlation matrix,
    repair it when requested, fix the sign basis and record rho_star * N.
    The fitted slope estimates the large-N limit of rho_star. Point seeds
    are derived by hashing (seed, N) so results do not depend on grid order.
    """
    grid = tuple(int(n) for n in grid)
    if not grid:
        raise ValueError("grid must not be empty")
    if any(n < 2 for n in grid):
        raise ValueError("grid values must be at least 2")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    options = options or SweepOptions()

    rho_stars = np.full(len(grid), np.nan)
    errors: list[str] = []
    for idx, n in enumerate(grid):
        point_seed = int(
            np.random.SeedSequence([seed, n]).generate_state(1, np.uint64)[0]
        )
        try:
            panel = generator(n, point_seed)
            _, corr = sample_moments(panel, options.estimation_mode)
            if options.repair:
                floor = (
                    options.repair_floor
                    if options.repair_floor is not None
                    else default_floor(corr.n)
                )
                corr = rj_repair(corr, floor)
            basis = fix_sign_basis(eigendecompose(corr))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateTopWarning)
                rho_stars[idx] = rho_star(basis)
        except Exception as exc:  # record and continue; partial sweeps stay usable
            errors.append(f"N={n}: {exc}")

    xs = np.asarray(grid, dtype=float)
    ys = rho_stars * xs
    ok = np.isfinite(rho_stars)
    if ok.sum() >= 2:
        slope, f_stat = no_intercept_regression(xs[ok], ys[ok])
    elif ok.sum() == 1:
        slope, f_stat = float(ys[ok][0] / xs[ok][0]), None
    else:
        slope, f_stat = math.nan, None
    residuals = np.where(ok, ys - slope * xs, np.nan)
    return SweepResult(
        grid,
        tuple(float(v) for v in rho_stars),
        tuple(float(v) for v in ys),
        slope,
        f_stat,
        tuple(float(v) for v in residuals),
        tuple(errors),
    )


def one_factor_generator(rho: float, n_periods: int) -> PanelGenerator:
    """Panel generator for ``sweep_rho_star`` with uniform pairwise correlation."""

    def generate(n_alphas: int, seed: int) -> TimeSeriesPanel:
        return gen_one_factor_panel(
            SimConfig(n_alphas, n_periods, 1, rho, seed, 1)
        )

    return generate


def _format_f(f_stat: float | None) -> str:
    if f_stat is None:
        return "not-available"
    if math.isinf(f_stat):
        return "inf"
    return repr(float(f_stat))


def sweep_to_csv(result: SweepResult, dest: str | Path | IO[str]) -> None:
    """Plot-ready CSV with columns N, rho_star, rho_star_times_n, slope, F."""

    def emit(handle: IO[str]) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["N", "rho_star", "rho_star_times_n", "slope", "F"])
        for n, rho, y in zip(result.grid, result.rho_stars, result.rho_star_times_n):
            writer.writerow(
                [
                    n,
                    repr(float(rho)),
                    repr(float(y)),
                    repr(float(result.slope_no_intercept)),
                    _format_f(result.f_statistic),
                ]
            )

    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as handle:
            emit(handle)
    else:
        emit(dest)
