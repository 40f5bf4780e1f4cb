"""Fit a bell-curve liquidity profile to an observed fee total.

The whole pool is modelled as one bell-curve allocation deployed once over
the full series (no resets), with deployable capital equal to the pool's
locked value.  Fixing the profile centre mu, the modelled fee total is
evaluated on an ascending variance grid and the smallest variance whose
fee crosses the target is refined by bisection.  Gas never enters the
objective.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import isfinite
from typing import Optional

import numpy as np

from .allocation import ProfileParams
from .engine import BacktestConfig, StrategyConfig, run_backtest
from .errors import CalibrationUnreachableError

_REL_TOL = 1e-3
_MAX_BISECTIONS = 60


@dataclass(frozen=True)
class FeeCurve:
    """Modelled fee total as a function of profile variance, mu fixed."""

    mu: float
    bound: float
    variance_grid: np.ndarray
    fees: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.variance_grid, dtype=np.float64)
        f = np.asarray(self.fees, dtype=np.float64)
        if g.ndim != 1 or len(g) == 0 or g.shape != f.shape:
            raise ValueError("variance grid and fees must be matching 1-d vectors")
        if np.any(g <= 0.0) or np.any(np.diff(g) <= 0.0):
            raise ValueError("variance grid must be positive and strictly ascending")
        if not np.all(np.isfinite(f)) or np.any(f < 0.0):
            raise ValueError("fee curve values must be finite and non-negative")


@dataclass(frozen=True)
class CalibrationResult:
    """Variance fit for a fixed profile centre."""

    mu: float
    variance: float
    bound: float
    model_fee: float
    target_fee: float
    relative_error: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "variance": self.variance,
            "bound": self.bound,
            "model_fee": self.model_fee,
            "target_fee": self.target_fee,
            "relative_error": self.relative_error,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _whole_pool_config(pool_config: BacktestConfig, mu: float, variance: float,
                       bound: float) -> BacktestConfig:
    strategy = StrategyConfig("normal", profile=ProfileParams(mu, variance, bound))
    # tau >= buckets - 1 means no price can ever leave the reset band,
    # so the whole series runs as a single deployment
    return replace(pool_config, strategy=strategy, tau=pool_config.partition.n)


def whole_pool_fee(pool_config: BacktestConfig, prices, mu: float, variance: float,
                   bound: float = 3.0) -> float:
    """Converted fee total of one single-deployment bell-curve backtest."""
    report = run_backtest(_whole_pool_config(pool_config, mu, variance, bound), prices)
    return report.ledger.total_fee_b


def fee_curve(pool_config: BacktestConfig, prices, mu: float, bound: float,
              variance_grid) -> FeeCurve:
    """Evaluate the modelled fee total over an ascending variance grid.

    Args:
        pool_config: pool-level settings; its capital is treated as the
            pool's locked value and its strategy/tau fields are ignored.
        prices: price series (or PriceSeries) to replay.
        mu: fixed profile centre in standardised coordinates.
        bound: half-width of the standardised coordinate axis.
        variance_grid: positive, strictly ascending variances to evaluate.

    Returns:
        FeeCurve over the grid; evaluation is deterministic, so equal
        inputs always reproduce the identical curve.
    """
    grid = np.asarray(variance_grid, dtype=np.float64)
    fees = np.array([whole_pool_fee(pool_config, prices, mu, float(v), bound)
                     for v in grid])
    return FeeCurve(mu, bound, grid, fees)


def calibrate_variance(pool_config: BacktestConfig, prices, mu: float, bound: float,
                       target_fee: float, variance_grid,
                       curve: Optional[FeeCurve] = None) -> CalibrationResult:
    """Find the smallest variance whose modelled fee matches the target.

    Scans the fee curve in ascending variance order: the first grid point
    already within 1e-3 relative of the target wins outright; otherwise
    the first sign change brackets a crossing that bisection refines until
    the relative error drops below 1e-3 or 60 iterations are spent.

    Args:
        pool_config: pool-level settings (see fee_curve).
        prices: price series to replay.
        mu: fixed profile centre.
        bound: standardised axis half-width.
        target_fee: observed fee total to match, positive.
        variance_grid: search grid, at least two ascending positive points.
        curve: optionally a precomputed FeeCurve for this exact grid.

    Returns:
        CalibrationResult for the best variance found.

    Raises:
        CalibrationUnreachableError: the target lies outside everything
            the curve reaches on the grid.
    """
    if not (isfinite(target_fee) and target_fee > 0.0):
        raise ValueError(f"target fee must be positive, got {target_fee}")
    if curve is None:
        curve = fee_curve(pool_config, prices, mu, bound, variance_grid)
    grid = curve.variance_grid
    fees = curve.fees
    if len(grid) < 2:
        raise ValueError("variance grid needs at least two points")

    def result(variance, fee, iterations):
        rel = abs(fee - target_fee) / target_fee
        return CalibrationResult(mu, float(variance), bound, float(fee), target_fee,
                                 rel, iterations, rel < _REL_TOL)

    def rel(fee):
        return abs(fee - target_fee) / target_fee

    if rel(fees[0]) < _REL_TOL:
        return result(grid[0], fees[0], 0)
    for k in range(1, len(grid)):
        if (fees[k - 1] - target_fee) * (fees[k] - target_fee) < 0.0:
            return _bisect(pool_config, prices, mu, bound, target_fee,
                           grid[k - 1], fees[k - 1], grid[k], fees[k], result)
        if rel(fees[k]) < _REL_TOL:
            return result(grid[k], fees[k], 0)

    raise CalibrationUnreachableError(
        f"target fee {target_fee} unreachable on variance grid "
        f"[{grid[0]}, {grid[-1]}]: curve spans [{fees.min()}, {fees.max()}]",
        fee_min=float(fees.min()), fee_max=float(fees.max()))


def _bisect(pool_config, prices, mu, bound, target_fee, lo, fee_lo, hi, fee_hi,
            result):
    sign_lo = fee_lo - target_fee
    best_v, best_fee = (lo, fee_lo) if abs(fee_lo - target_fee) <= abs(fee_hi - target_fee) \
        else (hi, fee_hi)
    iterations = 0
    for iterations in range(1, _MAX_BISECTIONS + 1):
        mid = 0.5 * (lo + hi)
        fee_mid = whole_pool_fee(pool_config, prices, mu, mid, bound)
        if abs(fee_mid - target_fee) < abs(best_fee - target_fee):
            best_v, best_fee = mid, fee_mid
        if abs(fee_mid - target_fee) / target_fee < _REL_TOL:
            break
        if (fee_mid - target_fee) * sign_lo > 0.0:
            lo = mid
        else:
            hi = mid
    return result(best_v, best_fee, iterations)


def calibrate_over_mu(pool_config: BacktestConfig, prices, mu_values, bound: float,
                      target_fee: float, variance_grid) -> CalibrationResult:
    """Coarse outer search: calibrate the variance at each mu, keep the best.

    mu values where the target is unreachable are skipped; if every mu is
    unreachable the last such error is re-raised.
    """
    best = None
    last_err = None
    for mu in mu_values:
        try:
            res = calibrate_variance(pool_config, prices, float(mu), bound,
                                     target_fee, variance_grid)
        except CalibrationUnreachableError as err:
            last_err = err
            continue
        if best is None or res.relative_error < best.relative_error:
            best = res
    if best is None:
        raise last_err if last_err is not None else \
            CalibrationUnreachableError("no mu values supplied")
    return best
