"""Pricing, own-slice revenue, and discounted present values.

Payments and own revenue accrue at the start of each active period, so a
stream lasting T periods from "now" is worth ``value * sum(beta^k, k<T)``
with the first term undiscounted.
"""

from __future__ import annotations

from .model import Catalog, EconomicParams, ResourceVector


def price(bundle: ResourceVector, period: int, catalog: Catalog) -> float:
    """Periodic payment of the (bundle, period) contract option; 0 for null."""
    return catalog.payment(bundle, period)


def own_revenue(bundle: ResourceVector, params: EconomicParams) -> float:
    """Money per period the operator earns running ``bundle`` in its own slices."""
    if len(params.own_revenue_rates) != bundle.dimension:
        raise ValueError(
            f"{len(params.own_revenue_rates)} revenue rates for a "
            f"{bundle.dimension}-dimensional bundle"
        )
    return sum(r * x for r, x in zip(params.own_revenue_rates, bundle.fractions))


def annuity(beta: float, periods: int) -> float:
    """Present value of 1 money per period for ``periods`` periods, first one now."""
    if periods <= 0:
        return 0.0
    return (1.0 - beta**periods) / (1.0 - beta)


def pv_payments(
    bundle: ResourceVector, period: int, params: EconomicParams, catalog: Catalog
) -> float:
    """Present value of all payments of a contract for ``bundle`` over ``period``."""
    return price(bundle, period, catalog) * annuity(params.beta, period)


def pv_own_revenue(bundle: ResourceVector, period: int, params: EconomicParams) -> float:
    """Present value of exploiting ``bundle`` in own slices for ``period`` periods."""
    return own_revenue(bundle, params) * annuity(params.beta, period)
