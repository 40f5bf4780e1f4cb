"""Backtest engine: replay a price series against bucketed liquidity.

Design notes
------------
Bucket states are evaluated through one vectorised kernel.  For liquidity
l on a bucket with sqrt bounds [sa, sb] and price sqrt s, the clipped root
c = clip(s, sa, sb) gives the reserves in all three regimes at once:

    x = l * (1/c - 1/sb)        y = l * (c - sa)

(c saturates at the bounds, which reproduces the below-range and
above-range branches exactly.)  Trader inflows per timestep are the
positive reserve differences between consecutive states; only price moves
trade, deployments and withdrawals do not.

``run_backtest`` never materialises the full (timestep x bucket) state
tensor: each epoch is streamed in fixed-size time chunks, accumulating
fee inflows and the capital trajectory as it goes, so memory stays flat
in the series length.  ``build_state_tensor``/``compute_fees`` form the
transparent reference path over the same kernel and are cross-checked
against the streamed path in the tests.  Per-bucket work at one timestep
is independent of every other bucket (data parallel); sums run in fixed
array order (numpy pairwise) with chunk partials added in time order, so
results are reproducible run to run.

Trading is assumed frictionless inside the replay: the series is taken as
the contract price, and repositioning swaps settle at that price with no
slippage.  Gas is the only repositioning cost and is reported separately,
never subtracted from the capital trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isfinite
from typing import Optional

import numpy as np

from .allocation import (AllocationWeights, EpochAllocation, ProfileParams,
                         allocate_epoch, custom_weights, normal_profile_weights,
                         random_band_weights, uniform_band_weights)
from .bucketing import BucketPartition, EpochPlan, segment_epochs
from .core_math import ReservePair
from .errors import ConfigError, DataError

# cap on chunk cells (timesteps x active buckets) processed at once
_CHUNK_CELLS = 1 << 21

# relative tolerance under which a bucket's liquidity counts as unchanged
# across an epoch transition (no burn + re-mint for a no-op)
_LIQ_EQUAL_RTOL = 1e-12

REINVEST_MODES = ("reinvest", "exclude", "fix-at-level")
STRATEGY_MODES = ("uniform", "random", "custom", "normal")
PRICE_MODES = ("strict", "clamp")


@dataclass(frozen=True)
class GasParams:
    """Gas cost model for deployment transactions.

    Each minted bucket position costs ``mint_gas`` gas units, each burned
    one ``burn_gas``.  Costs are settled in the gas token and converted to
    token B: when token A is the gas token the contract price at the event
    timestep applies, otherwise ``gas_token_price`` must give a constant
    token-B price for the gas token.
    """

    mint_gas: int = 430_000
    burn_gas: int = 215_000
    gas_price_gwei: float = 100.0
    token_a_is_gas_token: bool = True
    gas_token_price: Optional[float] = None

    def __post_init__(self):
        if self.mint_gas <= 0 or self.burn_gas <= 0:
            raise ConfigError("gas unit costs must be positive", key="mint_gas")
        if not (isfinite(self.gas_price_gwei) and self.gas_price_gwei > 0.0):
            raise ConfigError(f"gas price must be positive, got {self.gas_price_gwei}",
                              key="gas_price_gwei")
        if not self.token_a_is_gas_token:
            gp = self.gas_token_price
            if gp is None or not (isfinite(gp) and gp > 0.0):
                raise ConfigError("gas_token_price required when token A is not "
                                  "the gas token", key="gas_token_price")


@dataclass(frozen=True)
class StrategyConfig:
    """Which weight rule rebuilds the allocation at each epoch start."""

    mode: str
    weights: Optional[np.ndarray] = None   # custom mode
    seed: Optional[int] = None             # random mode
    profile: Optional[ProfileParams] = None  # normal mode

    def validate(self, partition: BucketPartition) -> None:
        if self.mode not in STRATEGY_MODES:
            raise ConfigError(f"unknown strategy {self.mode!r}, expected one of "
                              f"{STRATEGY_MODES}", key="strategy")
        if self.mode == "custom":
            if self.weights is None:
                raise ConfigError("custom strategy needs a weights vector", key="weights")
            if len(np.asarray(self.weights)) != partition.n:
                raise ConfigError(f"weights length {len(np.asarray(self.weights))} "
                                  f"does not match {partition.n} buckets", key="weights")
        if self.mode == "random" and self.seed is None:
            raise ConfigError("random strategy needs a seed", key="seed")
        if self.mode == "normal" and self.profile is None:
            raise ConfigError("normal strategy needs profile parameters", key="mu")


@dataclass(frozen=True)
class BacktestConfig:
    """Everything run_backtest needs besides the price series."""

    partition: BucketPartition
    tau: int
    strategy: StrategyConfig
    capital: float
    fee_rate: float
    gas: GasParams = field(default_factory=GasParams)
    reinvest_mode: str = "exclude"
    volume_cap: Optional[float] = None
    price_mode: str = "strict"

    def validate(self) -> None:
        if not isinstance(self.tau, (int, np.integer)) or self.tau < 0:
            raise ConfigError(f"tau must be a non-negative integer, got {self.tau}",
                              key="tau")
        if not (isfinite(self.capital) and self.capital > 0.0):
            raise ConfigError(f"capital must be positive, got {self.capital}",
                              key="capital")
        if not (isfinite(self.fee_rate) and 0.0 < self.fee_rate < 1.0):
            raise ConfigError(f"fee rate must lie in (0, 1), got {self.fee_rate}",
                              key="fee_rate")
        if self.reinvest_mode not in REINVEST_MODES:
            raise ConfigError(f"unknown reinvest mode {self.reinvest_mode!r}, expected "
                              f"one of {REINVEST_MODES}", key="reinvest")
        if self.volume_cap is not None and not (isfinite(self.volume_cap)
                                                and self.volume_cap > 0.0):
            raise ConfigError(f"volume cap must be positive, got {self.volume_cap}",
                              key="volume_cap")
        if self.price_mode not in PRICE_MODES:
            raise ConfigError(f"unknown price mode {self.price_mode!r}, expected one "
                              f"of {PRICE_MODES}", key="price_mode")
        self.strategy.validate(self.partition)


@dataclass(frozen=True)
class FeeLedger:
    """Per-epoch trader inflows and the LP fees they generate.

    Fees are the fee rate times the inflows by construction.  The
    converted figures restate token-A amounts in token B at each epoch's
    final price.
    """

    fee_rate: float
    inflow_a: np.ndarray   # token-A inflow volume per epoch
    inflow_b: np.ndarray   # token-B inflow volume per epoch
    end_price: np.ndarray  # final contract price per epoch

    @property
    def fee_a(self) -> np.ndarray:
        return self.fee_rate * self.inflow_a

    @property
    def fee_b(self) -> np.ndarray:
        return self.fee_rate * self.inflow_b

    @property
    def fee_converted(self) -> np.ndarray:
        return self.fee_b + self.fee_a * self.end_price

    @property
    def volume_converted(self) -> np.ndarray:
        return self.inflow_b + self.inflow_a * self.end_price

    @property
    def total_fee_b(self) -> float:
        return float(self.fee_converted.sum())

    @property
    def total_volume_b(self) -> float:
        return float(self.volume_converted.sum())

    def scaled(self, factor: float) -> "FeeLedger":
        """Ledger with all inflows (hence fees) scaled by a factor."""
        return FeeLedger(self.fee_rate, self.inflow_a * factor,
                         self.inflow_b * factor, self.end_price)


@dataclass(frozen=True)
class GasBreakdown:
    """Gas spend in token B, split by event class."""

    initial_mint_b: float
    transition_b: float
    final_burn_b: float
    mint_events: int
    burn_events: int

    @property
    def total_b(self) -> float:
        return self.initial_mint_b + self.transition_b + self.final_burn_b


@dataclass(frozen=True)
class PoolStateTensor:
    """Materialised per-epoch reserve states.

    ``states[e]`` has shape (epoch length, buckets, 2) with token-A
    reserves in channel 0 and token-B in channel 1.  Row t of epoch e is
    the state at series index ``plan.epochs[e].start + t``.
    """

    plan: EpochPlan
    states: tuple

    def epoch_states(self, e: int) -> np.ndarray:
        return self.states[e]

    def state_at(self, e: int, t: int, bucket: int) -> ReservePair:
        """Reserves of one bucket (1-based) at row t of epoch e."""
        x, y = self.states[e][t, bucket - 1]
        return ReservePair(float(x), float(y))


def _sqrt_edges(partition: BucketPartition):
    se = np.sqrt(partition.edges())
    return se[:-1], se[1:]


def _states_rows(liquidity, sqrt_a, sqrt_b, sqrt_prices):
    """Kernel: reserves of every bucket at every sqrt price row."""
    c = np.clip(sqrt_prices[:, None], sqrt_a[None, :], sqrt_b[None, :])
    x = liquidity * (1.0 / c - 1.0 / sqrt_b)
    y = liquidity * (c - sqrt_a)
    return x, y


def build_state_tensor(partition: BucketPartition, plan: EpochPlan,
                       allocations: list, prices: np.ndarray) -> PoolStateTensor:
    """Materialise the reserve states of every epoch, timestep and bucket.

    This is the transparent reference path; it allocates O(series length x
    buckets) memory, so prefer run_backtest's streaming for long series.

    Args:
        partition: bucket layout.
        plan: epoch segmentation of the series.
        allocations: one EpochAllocation per epoch in the plan.
        prices: full price series the plan was built for.

    Returns:
        PoolStateTensor with one (length, buckets, 2) array per epoch.
    """
    if len(allocations) != len(plan):
        raise ValueError(f"{len(allocations)} allocations for {len(plan)} epochs")
    p = np.asarray(prices, dtype=np.float64)
    sa, sb = _sqrt_edges(partition)
    out = []
    for ep, alloc in zip(plan, allocations):
        sp = np.sqrt(p[ep.start:ep.end + 1])
        x, y = _states_rows(alloc.liquidity, sa, sb, sp)
        out.append(np.stack([x, y], axis=-1))
    return PoolStateTensor(plan, tuple(out))


def compute_fees(tensor: PoolStateTensor, fee_rate: float,
                 prices: np.ndarray) -> FeeLedger:
    """Fee ledger from a materialised state tensor.

    Per epoch, trader inflows are the positive reserve differences between
    consecutive rows, summed over timesteps and buckets.  The boundary
    index shared by two epochs closes the old epoch's accrual; the next
    epoch's first difference starts from that index under the new
    liquidity, so no price step is ever charged twice.
    """
    if not 0.0 < fee_rate < 1.0:
        raise ValueError(f"fee rate must lie in (0, 1), got {fee_rate}")
    p = np.asarray(prices, dtype=np.float64)
    inflow_a, inflow_b, end_price = [], [], []
    for e, ep in enumerate(tensor.plan):
        st = tensor.states[e]
        if st.shape[0] >= 2:
            d = np.diff(st, axis=0)
            np.clip(d, 0.0, None, out=d)
            inflow_a.append(float(d[..., 0].sum()))
            inflow_b.append(float(d[..., 1].sum()))
        else:
            inflow_a.append(0.0)
            inflow_b.append(0.0)
        end_price.append(float(p[ep.end]))
    return FeeLedger(fee_rate, np.array(inflow_a), np.array(inflow_b),
                     np.array(end_price))


def gas_cost(plan: EpochPlan, allocations: list, params: GasParams,
             prices: np.ndarray) -> GasBreakdown:
    """Gas spend of a deployment schedule, in token B.

    Events: one mint per active bucket at the first deployment, and at
    each epoch transition one burn per bucket leaving (and one mint per
    bucket entering) the active set, valued at the boundary timestep's
    gas-token price.  A bucket whose liquidity is unchanged across the
    transition (to relative tolerance 1e-12) is left untouched.  The final
    epoch's positions are burned at the last timestep.
    """
    if len(allocations) != len(plan):
        raise ValueError(f"{len(allocations)} allocations for {len(plan)} epochs")
    p = np.asarray(prices, dtype=np.float64)

    def token_price(t: int) -> float:
        if params.token_a_is_gas_token:
            return float(p[t])
        return float(params.gas_token_price)

    eth_per_gas = params.gas_price_gwei * 1e-9
    mints = burns = 0
    initial_b = transition_b = final_b = 0.0

    first = allocations[0].liquidity > 0.0
    n0 = int(first.sum())
    mints += n0
    initial_b = n0 * params.mint_gas * eth_per_gas * token_price(plan.epochs[0].start)

    for e in range(1, len(plan)):
        old = allocations[e - 1].liquidity
        new = allocations[e].liquidity
        unchanged = (old > 0.0) & (new > 0.0) \
            & (np.abs(old - new) <= _LIQ_EQUAL_RTOL * np.maximum(old, new))
        burn_here = int(((old > 0.0) & ~unchanged).sum())
        mint_here = int(((new > 0.0) & ~unchanged).sum())
        burns += burn_here
        mints += mint_here
        price = token_price(plan.epochs[e].start)
        transition_b += (burn_here * params.burn_gas
                         + mint_here * params.mint_gas) * eth_per_gas * price

    last = allocations[-1].liquidity > 0.0
    nl = int(last.sum())
    burns += nl
    final_b = nl * params.burn_gas * eth_per_gas * token_price(plan.epochs[-1].end)

    return GasBreakdown(initial_b, transition_b, final_b, mints, burns)


def buy_and_hold(prices: np.ndarray, initial_split: ReservePair) -> np.ndarray:
    """Token-B value of holding a fixed (x, y) bag along the price series."""
    p = np.asarray(prices, dtype=np.float64)
    return initial_split.y + initial_split.x * p


def _epoch_weights(config: BacktestConfig, s: int, epoch_index: int) -> AllocationWeights:
    strat = config.strategy
    if strat.mode == "uniform":
        return uniform_band_weights(config.partition, s, config.tau)
    if strat.mode == "random":
        # distinct, reproducible stream per epoch
        return random_band_weights(config.partition, s, config.tau,
                                   seed=[strat.seed, epoch_index])
    if strat.mode == "custom":
        return custom_weights(config.partition, strat.weights)
    return normal_profile_weights(config.partition, strat.profile)


def _stream_epoch(liquidity, sqrt_a, sqrt_b, prices, sqrt_prices, ep,
                  trajectory, step_a, step_b):
    """Accumulate one epoch's inflows and trajectory in time chunks.

    Writes the position value into trajectory[start..end] and the
    per-step bucket-summed inflows into step_a/step_b (step t -> t+1 is
    stored at index t).  Returns (inflow_a, inflow_b, end value).
    """
    start, end = ep.start, ep.end
    active = np.flatnonzero(liquidity > 0.0)
    if active.size == 0:
        trajectory[start:end + 1] = 0.0
        return 0.0, 0.0, 0.0

    la = liquidity[active]
    a = sqrt_a[active]
    b = sqrt_b[active]
    inv_b = 1.0 / b
    chunk = max(2, _CHUNK_CELLS // active.size)

    inflow_a = inflow_b = 0.0
    v_end = 0.0
    prev_c = prev_ic = None
    t = start
    while t <= end:
        t1 = min(end, t + chunk - 1)
        sp = sqrt_prices[t:t1 + 1]
        c = np.clip(sp[:, None], a[None, :], b[None, :])
        ic = 1.0 / c

        x_tot = ((ic - inv_b) * la).sum(axis=1)
        y_tot = ((c - a) * la).sum(axis=1)
        vals = y_tot + prices[t:t1 + 1] * x_tot
        trajectory[t:t1 + 1] = vals
        v_end = float(vals[-1])

        if prev_c is None:
            dy = c[1:] - c[:-1]
            di = ic[1:] - ic[:-1]
            step0 = t
        else:
            dy = np.diff(c, axis=0, prepend=prev_c[None, :])
            di = np.diff(ic, axis=0, prepend=prev_ic[None, :])
            step0 = t - 1
        if dy.shape[0]:
            np.clip(dy, 0.0, None, out=dy)
            np.clip(di, 0.0, None, out=di)
            sb_steps = (dy * la).sum(axis=1)
            sa_steps = (di * la).sum(axis=1)
            step_b[step0:step0 + len(sb_steps)] = sb_steps
            step_a[step0:step0 + len(sa_steps)] = sa_steps
            inflow_b += float(sb_steps.sum())
            inflow_a += float(sa_steps.sum())

        prev_c = c[-1].copy()
        prev_ic = ic[-1].copy()
        t = t1 + 1
    return inflow_a, inflow_b, v_end


def _monthly_attribution(timestamps, prices, step_a, step_b, fee_rate):
    """Calendar-month fee rows; token-A fees convert at each month's last price.

    Months with no accrual still appear when the series covers them.  The
    sum over months can differ slightly from the ledger total because the
    ledger converts at epoch-final prices instead.
    """
    months = np.asarray(timestamps, dtype=np.int64).astype("datetime64[s]") \
        .astype("datetime64[M]")
    step_month = months[1:]
    labels, starts = np.unique(step_month, return_index=True)
    rows = []
    for j, label in enumerate(labels):
        i0 = int(starts[j])
        i1 = int(starts[j + 1]) if j + 1 < len(labels) else len(step_month)
        fa = fee_rate * float(step_a[i0:i1].sum())
        fb = fee_rate * float(step_b[i0:i1].sum())
        p_end = float(prices[i1])
        rows.append({"month": str(label), "fee_a": fa, "fee_b": fb,
                     "fee_converted_b": fb + fa * p_end})
    return rows


@dataclass(frozen=True)
class BacktestReport:
    """Everything a backtest run produces."""

    config: BacktestConfig
    plan: EpochPlan
    ledger: FeeLedger
    gas: GasBreakdown
    lp_trajectory: np.ndarray
    bh_trajectory: np.ndarray
    initial_split: ReservePair
    profit_rate: float
    bh_profit_rate: float
    volume_cap_scale: float
    epoch_capital: np.ndarray = None   # deployable capital per epoch
    epoch_active: np.ndarray = None    # active bucket count per epoch
    monthly_fees: Optional[list] = None

    def to_dict(self) -> dict:
        """JSON-ready summary; trajectories are exported separately as CSV."""
        epoch_rows = []
        for e, ep in enumerate(self.plan):
            epoch_rows.append({
                "epoch": e + 1,
                "start": ep.start,
                "end": ep.end,
                "benchmark_bucket": ep.benchmark,
                "inflow_a": float(self.ledger.inflow_a[e]),
                "inflow_b": float(self.ledger.inflow_b[e]),
                "fee_a": float(self.ledger.fee_a[e]),
                "fee_b": float(self.ledger.fee_b[e]),
                "end_price": float(self.ledger.end_price[e]),
                "fee_converted_b": float(self.ledger.fee_converted[e]),
                "volume_converted_b": float(self.ledger.volume_converted[e]),
            })
        out = {
            "initial_capital": float(self.config.capital),
            "final_value": float(self.lp_trajectory[-1]),
            "fees_total_b": self.ledger.total_fee_b,
            "volume_total_b": self.ledger.total_volume_b,
            "fee_rate": self.ledger.fee_rate,
            "gas_cost_b": self.gas.total_b,
            "gas_breakdown": {
                "initial_mint_b": self.gas.initial_mint_b,
                "transition_b": self.gas.transition_b,
                "final_burn_b": self.gas.final_burn_b,
                "mint_events": self.gas.mint_events,
                "burn_events": self.gas.burn_events,
            },
            "epochs": len(self.plan),
            "profit_rate": self.profit_rate,
            "bh_profit_rate": self.bh_profit_rate,
            "volume_cap_scale": self.volume_cap_scale,
            "reinvest_mode": self.config.reinvest_mode,
            "epoch_fees": epoch_rows,
        }
        if self.monthly_fees is not None:
            out["monthly_fees"] = self.monthly_fees
        return out


def run_backtest(config: BacktestConfig, prices, timestamps=None) -> BacktestReport:
    """Replay a price series against the configured liquidity strategy.

    The series is segmented into reset epochs; each epoch's capital is
    deployed at its first price, accrues fee inflows from positive reserve
    differences, and is liquidated into the next epoch's budget at the
    shared boundary index.  The capital trajectory marks the currently
    deployed positions to market at every timestep, so under fee
    reinvestment each boundary shows the converted-fee top-up; gas never
    enters the trajectory.

    Args:
        config: validated run configuration.
        prices: 1-d positive price series, or any object with ``prices``
            and ``timestamps`` attributes.
        timestamps: optional unix-second timestamps (enables monthly fee
            attribution); ignored when ``prices`` carries its own.

    Returns:
        BacktestReport with ledger, gas, trajectories and summary rates.
    """
    config.validate()
    if hasattr(prices, "prices"):
        timestamps = getattr(prices, "timestamps", None)
        prices = prices.prices
    p = np.ascontiguousarray(prices, dtype=np.float64)
    if p.ndim != 1 or len(p) < 2:
        raise DataError("price series must be one-dimensional with at least 2 points")
    bad = ~np.isfinite(p) | (p <= 0.0)
    if bad.any():
        i = int(np.argmax(bad))
        raise DataError(f"price {p[i]} at index {i} is not a positive finite number")

    part = config.partition
    if config.price_mode == "strict":
        out = (p < part.lower) | (p > part.upper)
        if out.any():
            i = int(np.argmax(out))
            raise DataError(f"price {p[i]} at index {i} outside partition "
                            f"[{part.lower}, {part.upper}] (clamp mode would proceed)")
        bucket_prices = p
    else:
        bucket_prices = np.clip(p, part.lower, part.upper)

    plan = segment_epochs(part, bucket_prices, config.tau)
    m = len(p)
    sa, sb = _sqrt_edges(part)
    sqrt_p = np.sqrt(p)

    trajectory = np.empty(m)
    step_a = np.zeros(m - 1)
    step_b = np.zeros(m - 1)
    allocations = []
    inflow_a, inflow_b, end_prices = [], [], []
    epoch_capital = np.empty(len(plan))
    epoch_active = np.empty(len(plan), dtype=np.int64)

    capital = config.capital
    for e, ep in enumerate(plan):
        weights = _epoch_weights(config, ep.benchmark, e)
        alloc = allocate_epoch(weights, capital, float(p[ep.start]), part)
        allocations.append(alloc)
        epoch_capital[e] = capital
        epoch_active[e] = int((alloc.liquidity > 0.0).sum())
        # later epochs overwrite the shared boundary index, so the
        # trajectory shows the post-rebalance value there
        ia, ib, v_end = _stream_epoch(alloc.liquidity, sa, sb, p, sqrt_p, ep,
                                      trajectory, step_a, step_b)
        end_price = float(p[ep.end])
        inflow_a.append(ia)
        inflow_b.append(ib)
        end_prices.append(end_price)

        if config.reinvest_mode == "reinvest":
            capital = v_end + config.fee_rate * (ib + ia * end_price)
        elif config.reinvest_mode == "exclude":
            capital = v_end
        else:
            capital = config.capital

    ledger = FeeLedger(config.fee_rate, np.array(inflow_a), np.array(inflow_b),
                       np.array(end_prices))

    scale = 1.0
    if config.volume_cap is not None:
        total = ledger.total_volume_b
        if total > config.volume_cap:
            scale = config.volume_cap / total
            ledger = ledger.scaled(scale)

    gas = gas_cost(plan, allocations, config.gas, p)

    # benchmark bag: aggregate reserves of the first deployment
    c0 = np.clip(sqrt_p[0], sa, sb)
    liq0 = allocations[0].liquidity
    split0 = ReservePair(float((liq0 * (1.0 / c0 - 1.0 / sb)).sum()),
                         float((liq0 * (c0 - sa)).sum()))
    bh = buy_and_hold(p, split0)

    monthly = None
    if timestamps is not None and len(timestamps) == m:
        monthly = _monthly_attribution(timestamps, p, step_a * scale,
                                       step_b * scale, config.fee_rate)

    return BacktestReport(
        config=config,
        plan=plan,
        ledger=ledger,
        gas=gas,
        lp_trajectory=trajectory,
        bh_trajectory=bh,
        initial_split=split0,
        profit_rate=float((trajectory[-1] - trajectory[0]) / trajectory[0]),
        bh_profit_rate=float((bh[-1] - bh[0]) / bh[0]),
        volume_cap_scale=scale,
        epoch_capital=epoch_capital,
        epoch_active=epoch_active,
        monthly_fees=monthly,
    )
