"""Opportunity cost of admitting a slice request.

The opportunity cost of reserving a bundle is the own-slice revenue the
operator gives up plus the expected payments of future requests the
reservation blocks.  The blocking part depends on the idle-pool trajectory
when the request is declined and the market keeps running under the supplied
decision strategy, so beyond the closed-form two-step model it has to be
computed by expanding or sampling future request sequences.

Three evaluation routes are provided:

* :func:`oc_two_step` / :func:`payoff_two_step` - closed form for the
  two-period model.
* :func:`oc_exact_enumeration` - exact expectation over all future request
  sequences, affordable only at desk scale.
* :func:`oc_monte_carlo` - unbiased sample-mean estimate with a standard
  error, deterministic under a fixed seed.

Both trajectory-based routes share one evaluation core: trajectories are
collapsed into per-period layers of distinct market states (states that agree
on idle pool and reservation windows behave identically), the factual and
counterfactual branches of each trajectory share the same request sequence,
and per-candidate values are sums of cached per-state blocking terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .economics import own_revenue, price, pv_own_revenue, pv_payments
from .errors import BudgetExceededError, InfeasibleRequestError
from .model import (
    EXPIRING,
    NON_EXPIRING,
    Catalog,
    EconomicParams,
    MarketState,
    Request,
    ResourceVector,
    feasible_set,
)
from .stochastic import STREAM_OC, RequestDistribution, conditional_measure, derive_generator

CLOSED_FORM_2STEP = "closed-form-2step"
ENUMERATION = "enumeration"
MONTE_CARLO = "monte-carlo"

#: Literal formula: every blocked option is priced at the candidate's full
#: remaining horizon.  The alternative prices it at the horizon remaining when
#: the blocking occurs.
PAYMENT_LITERAL = "literal"
PAYMENT_REMAINING_HORIZON = "remaining-horizon"

DEFAULT_LEAF_BUDGET = 10_000_000
DEFAULT_MAX_GRAPH_STATES = 50_000


@dataclass(frozen=True)
class OcEstimate:
    """An opportunity-cost value with its provenance."""

    value: float
    std_error: float
    sample_count: int
    method: str

    def __post_init__(self) -> None:
        if not (self.std_error >= 0.0):
            raise ValueError("std_error must be >= 0")
        if self.method == MONTE_CARLO and self.sample_count < 1:
            raise ValueError("monte-carlo estimates need at least one sample")


def oc_two_step(
    pool: ResourceVector,
    bundle: ResourceVector,
    dist: RequestDistribution,
    params: EconomicParams,
    catalog: Catalog,
) -> float:
    """Closed-form opportunity cost in the two-period model.

    The t=0 request occupies the bundle for both periods; the cost is two
    periods of forgone own revenue plus the expected payment of the single
    t=1 arrival the reservation makes infeasible.
    """
    if bundle.is_zero:
        return 0.0
    if not bundle <= pool:
        raise InfeasibleRequestError(f"bundle {bundle} does not fit pool {pool}")
    beta = params.beta
    base = (1.0 + beta) * own_revenue(bundle, params)
    everything = frozenset(catalog.all_bundles)
    after_accept = feasible_set(pool - bundle, catalog)
    blocked = 0.0
    for b in catalog.all_bundles:
        delta = conditional_measure(b, everything, dist) - conditional_measure(
            b, after_accept, dist
        )
        blocked += delta * price(b, 1, catalog)
    return base + beta * blocked


def payoff_two_step(
    pool: ResourceVector,
    bundle: ResourceVector,
    dist: RequestDistribution,
    params: EconomicParams,
    catalog: Catalog,
) -> float:
    """Expected payoff of accepting the t=0 request in the two-period model."""
    if bundle.is_zero:
        return 0.0
    pay = (1.0 + params.beta) * price(bundle, 2, catalog)
    return pay - oc_two_step(pool, bundle, dist, params, catalog)


def payoff(
    state: MarketState,
    request: Request,
    oc_value: float,
    params: EconomicParams,
    catalog: Catalog,
    *,
    mode: str,
    horizon: int,
) -> float:
    """Present value of the contract's payments minus its opportunity cost."""
    if request.is_null:
        return 0.0
    period = horizon - state.time if mode == NON_EXPIRING else request.period
    return pv_payments(request.bundle, period, params, catalog) - oc_value


class OcWorkspace:
    """Caches shared by repeated opportunity-cost evaluations on one instance.

    Blocking terms only ever involve (pool, candidate) pairs from a small
    lattice, so memoizing which bundles each pair blocks, and the periodic
    payments per period, removes almost all per-sample work.
    """

    def __init__(
        self, dist: RequestDistribution, params: EconomicParams, catalog: Catalog
    ):
        self.dist = dist
        self.params = params
        self.catalog = catalog
        self.bundles = catalog.bundles
        self.mass = tuple(dist.bundle_probability(b) for b in self.bundles)
        self._blocked: dict[tuple, tuple[int, ...]] = {}
        self._payments: dict[tuple[int, int], float] = {}

    def blocked_indices(
        self, pool_units: tuple[int, ...], cand_units: tuple[int, ...]
    ) -> tuple[int, ...]:
        """Bundles feasible in the pool but not once the candidate is reserved.

        The counterfactual pool may have negative components (the decline
        branch accepted bundles the accept branch could not have); such
        components simply make every bundle infeasible there.
        """
        key = (pool_units, cand_units)
        cached = self._blocked.get(key)
        if cached is None:
            remaining = tuple(p - c for p, c in zip(pool_units, cand_units))
            cached = tuple(
                i
                for i, b in enumerate(self.bundles)
                if all(u <= p for u, p in zip(b.units, pool_units))
                and not all(u <= r for u, r in zip(b.units, remaining))
            )
            self._blocked[key] = cached
        return cached

    def payment_of(self, bundle_index: int, period: int) -> float:
        key = (bundle_index, period)
        value = self._payments.get(key)
        if value is None:
            value = self.catalog.payment(self.bundles[bundle_index], period)
            self._payments[key] = value
        return value

    def blocked_value(
        self,
        pool_units: tuple[int, ...],
        cand_units: tuple[int, ...],
        period: int,
    ) -> float:
        """Expected periodic payment mass the reservation blocks at one step."""
        return sum(
            self.mass[i] * self.payment_of(i, period)
            for i in self.blocked_indices(pool_units, cand_units)
        )


@dataclass
class _LayerGraph:
    """Distinct decline-branch market states per future period, with the
    outcome-indexed transition tables between consecutive layers."""

    pools: list[list[tuple[int, ...]]]
    trans: list[np.ndarray]
    weights: np.ndarray
    cum_weights: np.ndarray
    truncated: bool


def _dedupe_key(state: MarketState, mode: str):
    if mode == NON_EXPIRING:
        return state.idle_pool.units
    return (
        state.idle_pool.units,
        tuple(sorted((c.end, c.bundle.units) for c in state.active_contracts())),
    )


def _advance_released(state: MarketState) -> MarketState:
    nxt = state.advanced()
    return nxt.release_expired()[0]


def _apply_outcome(
    state: MarketState,
    outcome: int,
    strategy,
    dist: RequestDistribution,
    catalog: Catalog,
    mode: str,
    horizon: int,
) -> MarketState:
    """Decide the arrival behind ``outcome`` at ``state`` and step one period."""
    entries = catalog.entries
    if outcome < len(entries):
        e = entries[outcome]
        period = horizon - state.time if mode == NON_EXPIRING else e.period
        request = Request(state.time, e.bundle, period)
        decision = strategy.decide_request(state, request)
        if decision.accepted:
            state = state.with_contract(e.bundle, period, catalog.payment(e.bundle, period))
    return _advance_released(state)


def _build_layer_graph(
    state: MarketState,
    strategy,
    dist: RequestDistribution,
    catalog: Catalog,
    mode: str,
    horizon: int,
    max_states: int,
) -> _LayerGraph:
    """Forward-expand the decline-branch state graph for periods after now.

    States merging here agree on idle pool and reservation windows, which is
    all any contract-abiding strategy may condition on, so the merged graph
    reproduces per-trajectory evolution exactly.  Stops with ``truncated``
    set once the state count exceeds ``max_states``.
    """
    weights = np.array(list(dist.entry_weights) + [dist.null_weight])
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    steps = horizon - state.time - 1
    if steps <= 0:
        return _LayerGraph([], [], weights, cum, truncated=False)
    first = _advance_released(state)
    layers = [[first]]
    pools = [[first.idle_pool.units]]
    trans: list[np.ndarray] = []
    n_outcomes = len(catalog.entries) + 1
    total = 1
    for _ in range(steps - 1):
        cur = layers[-1]
        table = np.empty((len(cur), n_outcomes), dtype=np.int64)
        nxt: list[MarketState] = []
        index: dict = {}
        for si, s in enumerate(cur):
            for oi in range(n_outcomes):
                s2 = _apply_outcome(s, oi, strategy, dist, catalog, mode, horizon)
                k2 = _dedupe_key(s2, mode)
                j = index.get(k2)
                if j is None:
                    j = len(nxt)
                    index[k2] = j
                    nxt.append(s2)
                    total += 1
                    if total > max_states:
                        return _LayerGraph(pools, trans, weights, cum, truncated=True)
                table[si, oi] = j
        trans.append(table)
        layers.append(nxt)
        pools.append([s.idle_pool.units for s in nxt])
    return _LayerGraph(pools, trans, weights, cum, truncated=False)


def _candidate_terms(
    graph: _LayerGraph,
    state: MarketState,
    cand_bundle: ResourceVector,
    cand_period: int,
    workspace: OcWorkspace,
    mode: str,
    horizon: int,
    payment_variant: str,
):
    """Per-layer discounted blocking terms for one candidate.

    Returns (base, layer_vectors): ``base`` collects the forgone own revenue
    plus the deterministic current-period blocking term; ``layer_vectors[l]``
    holds the discounted blocking value per state of layer l.
    """
    t = state.time
    beta = workspace.params.beta
    cand = cand_bundle.units
    if mode == NON_EXPIRING:
        q_periods = horizon - t
        active_until = horizon
    else:
        q_periods = cand_period
        active_until = t + cand_period

    def pay_period(tau: int) -> int:
        if mode == EXPIRING:
            return cand_period
        if payment_variant == PAYMENT_REMAINING_HORIZON:
            return horizon - tau
        return horizon - t

    base = pv_own_revenue(cand_bundle, q_periods, workspace.params)
    base += beta * workspace.blocked_value(state.idle_pool.units, cand, pay_period(t))
    vectors: list[np.ndarray] = []
    for l, layer_pools in enumerate(graph.pools):
        tau = t + 1 + l
        disc = beta ** (tau - t + 1)
        if tau >= active_until:
            vectors.append(np.zeros(len(layer_pools)))
            continue
        vectors.append(
            np.array(
                [
                    disc * workspace.blocked_value(p, cand, pay_period(tau))
                    for p in layer_pools
                ]
            )
        )
    return base, vectors


def _check_request(state: MarketState, request: Request, catalog: Catalog) -> None:
    if request.arrival_time != state.time:
        raise ValueError(
            f"request arrived at {request.arrival_time} but the state is at {state.time}"
        )
    if not request.is_null and not request.bundle <= state.idle_pool:
        raise InfeasibleRequestError(
            f"bundle {request.bundle} does not fit idle pool {state.idle_pool}"
        )


def enumeration_leaf_count(n_entries: int, horizon: int, t: int) -> int:
    """Size of the future request tree: one outcome per remaining period."""
    return (n_entries + 1) ** max(0, horizon - t - 1)


def oc_exact_enumeration(
    state: MarketState,
    request: Request,
    strategy,
    dist: RequestDistribution,
    params: EconomicParams,
    catalog: Catalog,
    horizon: int,
    *,
    mode: str = NON_EXPIRING,
    payment_variant: str = PAYMENT_LITERAL,
    leaf_budget: int = DEFAULT_LEAF_BUDGET,
    workspace: OcWorkspace | None = None,
) -> float:
    """Exact opportunity cost by expanding every future request sequence.

    The expectation is evaluated on the collapsed layer graph (identical sum,
    reassociated), but the budget is checked against the full tree size.
    """
    _check_request(state, request, catalog)
    if request.is_null:
        return 0.0
    leaves = enumeration_leaf_count(len(catalog.entries), horizon, state.time)
    if leaves > leaf_budget:
        raise BudgetExceededError(
            f"{leaves} request sequences exceed the enumeration budget of {leaf_budget}"
        )
    if workspace is None:
        workspace = OcWorkspace(dist, params, catalog)
    graph = _build_layer_graph(
        state, strategy, dist, catalog, mode, horizon, max_states=leaf_budget
    )
    if graph.truncated:
        raise BudgetExceededError("state graph exceeded the enumeration budget")
    base, vectors = _candidate_terms(
        graph, state, request.bundle, request.period, workspace, mode, horizon, payment_variant
    )
    total = base
    probs = np.array([1.0]) if graph.pools else None
    for l, vec in enumerate(vectors):
        total += float(probs @ vec)
        if l < len(graph.trans):
            table = graph.trans[l]
            nxt = np.zeros(len(graph.pools[l + 1]))
            for oi, w in enumerate(graph.weights):
                np.add.at(nxt, table[:, oi], probs * w)
            probs = nxt
    return float(total)


def monte_carlo_candidates(
    state: MarketState,
    candidates: list[tuple[ResourceVector, int]],
    strategy,
    dist: RequestDistribution,
    params: EconomicParams,
    catalog: Catalog,
    horizon: int,
    *,
    mode: str = NON_EXPIRING,
    n_samples: int,
    seed: int,
    stream: int = 0,
    payment_variant: str = PAYMENT_LITERAL,
    workspace: OcWorkspace | None = None,
    max_graph_states: int = DEFAULT_MAX_GRAPH_STATES,
) -> list[OcEstimate]:
    """Monte Carlo opportunity cost for several candidates over shared
    trajectories (common random numbers).

    Sample j consumes row j of the pre-drawn uniform matrix, so every
    sample's trajectory is a fixed function of (seed, stream, j) no matter
    how many samples are requested.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if workspace is None:
        workspace = OcWorkspace(dist, params, catalog)
    t = state.time
    draw_cols = max(0, horizon - t - 2)
    rng = derive_generator(seed, STREAM_OC, stream)
    uniforms = rng.random((n_samples, draw_cols)) if draw_cols else np.zeros((n_samples, 0))

    graph = _build_layer_graph(
        state, strategy, dist, catalog, mode, horizon, max_states=max_graph_states
    )
    estimates: list[OcEstimate] = []
    outcome_cols = [
        np.searchsorted(graph.cum_weights, uniforms[:, l], side="right")
        for l in range(draw_cols)
    ]
    for cand_bundle, cand_period in candidates:
        if cand_bundle.is_zero:
            estimates.append(OcEstimate(0.0, 0.0, n_samples, MONTE_CARLO))
            continue
        if not graph.truncated:
            base, vectors = _candidate_terms(
                graph, state, cand_bundle, cand_period, workspace, mode, horizon, payment_variant
            )
            values = np.full(n_samples, base)
            idx = np.zeros(n_samples, dtype=np.int64)
            for l, vec in enumerate(vectors):
                values += vec[idx]
                if l < len(graph.trans):
                    idx = graph.trans[l][idx, outcome_cols[l]]
        else:
            values = _sampled_values(
                state, cand_bundle, cand_period, strategy, dist, catalog, workspace,
                mode, horizon, payment_variant, uniforms,
            )
        mean = float(np.mean(values))
        if n_samples > 1:
            se = float(np.std(values, ddof=1) / math.sqrt(n_samples))
        else:
            se = math.inf
        estimates.append(OcEstimate(mean, se, n_samples, MONTE_CARLO))
    return estimates


def _sampled_values(
    state, cand_bundle, cand_period, strategy, dist, catalog, workspace,
    mode, horizon, payment_variant, uniforms,
) -> np.ndarray:
    """Per-sample trajectory walk; used when the layer graph is too large."""
    t = state.time
    beta = workspace.params.beta
    cand = cand_bundle.units
    active_until = horizon if mode == NON_EXPIRING else t + cand_period

    def pay_period(tau: int) -> int:
        if mode == EXPIRING:
            return cand_period
        if payment_variant == PAYMENT_REMAINING_HORIZON:
            return horizon - tau
        return horizon - t

    q_periods = horizon - t if mode == NON_EXPIRING else cand_period
    base = pv_own_revenue(cand_bundle, q_periods, workspace.params)
    base += beta * workspace.blocked_value(state.idle_pool.units, cand, pay_period(t))
    n = uniforms.shape[0]
    values = np.empty(n)
    steps = horizon - t - 1
    for j in range(n):
        acc = base
        s = _advance_released(state)
        for l in range(steps):
            tau = t + 1 + l
            if tau < active_until:
                acc += (beta ** (tau - t + 1)) * workspace.blocked_value(
                    s.idle_pool.units, cand, pay_period(tau)
                )
            if l < steps - 1:
                outcome = dist.outcome_index(uniforms[j, l])
                s = _apply_outcome(s, outcome, strategy, dist, catalog, mode, horizon)
        values[j] = acc
    return values


def oc_monte_carlo(
    state: MarketState,
    request: Request,
    strategy,
    dist: RequestDistribution,
    params: EconomicParams,
    catalog: Catalog,
    horizon: int,
    *,
    mode: str = NON_EXPIRING,
    n_samples: int,
    seed: int,
    stream: int = 0,
    payment_variant: str = PAYMENT_LITERAL,
    workspace: OcWorkspace | None = None,
    max_graph_states: int = DEFAULT_MAX_GRAPH_STATES,
) -> OcEstimate:
    """Unbiased Monte Carlo estimate of the enumeration value for one request."""
    _check_request(state, request, catalog)
    return monte_carlo_candidates(
        state,
        [(request.bundle, request.period)],
        strategy,
        dist,
        params,
        catalog,
        horizon,
        mode=mode,
        n_samples=n_samples,
        seed=seed,
        stream=stream,
        payment_variant=payment_variant,
        workspace=workspace,
        max_graph_states=max_graph_states,
    )[0]
