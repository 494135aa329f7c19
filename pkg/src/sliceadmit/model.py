"""Domain types for the slice-admission market.

Resource amounts are dimensionless fractions of the operator's maximal pool,
stored as exact integer multiples of a global resolution ``1/D``.  Keeping the
lattice exact makes pool arithmetic, feasibility checks and state keying
reproducible: two states are equal iff their integer components are equal,
with no float tolerance anywhere in the market mechanics.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InfeasibleSubtractionError, UnknownEntryError

#: Default lattice resolution: resource fractions are multiples of 1/100.
DEFAULT_RESOLUTION = 100

NON_EXPIRING = "non-expiring"
EXPIRING = "expiring"
MODES = (NON_EXPIRING, EXPIRING)


@dataclass(frozen=True)
class ResourceVector:
    """A point of the normalized resource space, one component per resource type.

    ``units[i]`` counts multiples of ``1/resolution``; every component must lie
    in ``[0, resolution]`` so the vector stays inside the unit box.
    """

    units: tuple[int, ...]
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self) -> None:
        if self.resolution < 1:
            raise ValueError(f"resolution must be >= 1, got {self.resolution}")
        if not self.units:
            raise ValueError("resource vector needs at least one component")
        for u in self.units:
            if not isinstance(u, int):
                raise TypeError(f"lattice components must be ints, got {u!r}")
            if u < 0 or u > self.resolution:
                raise ValueError(
                    f"component {u}/{self.resolution} lies outside the unit interval"
                )

    @classmethod
    def zero(cls, dimension: int, resolution: int = DEFAULT_RESOLUTION) -> "ResourceVector":
        return cls((0,) * dimension, resolution)

    @classmethod
    def full(cls, dimension: int, resolution: int = DEFAULT_RESOLUTION) -> "ResourceVector":
        return cls((resolution,) * dimension, resolution)

    @classmethod
    def from_fractions(
        cls, fractions, resolution: int = DEFAULT_RESOLUTION
    ) -> "ResourceVector":
        """Quantize fractional components; reject values not on the lattice."""
        units = []
        for x in fractions:
            scaled = x * resolution
            nearest = round(scaled)
            if abs(scaled - nearest) > 1e-9 * resolution:
                raise ValueError(
                    f"fraction {x} is not representable at resolution 1/{resolution}"
                )
            units.append(int(nearest))
        return cls(tuple(units), resolution)

    @property
    def dimension(self) -> int:
        return len(self.units)

    @property
    def fractions(self) -> tuple[float, ...]:
        return tuple(u / self.resolution for u in self.units)

    @property
    def is_zero(self) -> bool:
        return all(u == 0 for u in self.units)

    def _check_compatible(self, other: "ResourceVector") -> None:
        if self.resolution != other.resolution or self.dimension != other.dimension:
            raise ValueError(
                "resource vectors belong to different lattices: "
                f"{self.dimension}D/1-{self.resolution} vs "
                f"{other.dimension}D/1-{other.resolution}"
            )

    def __le__(self, other: "ResourceVector") -> bool:
        """Componentwise partial order; incomparable pairs compare False both ways."""
        self._check_compatible(other)
        return all(a <= b for a, b in zip(self.units, other.units))

    def __ge__(self, other: "ResourceVector") -> bool:
        return other.__le__(self)

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        self._check_compatible(other)
        return ResourceVector(
            tuple(a + b for a, b in zip(self.units, other.units)), self.resolution
        )

    def __sub__(self, other: "ResourceVector") -> "ResourceVector":
        self._check_compatible(other)
        diff = tuple(a - b for a, b in zip(self.units, other.units))
        if any(d < 0 for d in diff):
            raise InfeasibleSubtractionError(
                f"cannot reserve {other.units} out of {self.units}: "
                "some component would go negative"
            )
        return ResourceVector(diff, self.resolution)

    def __str__(self) -> str:
        return "/".join(str(u) for u in self.units)


def pool_subtract(pool: ResourceVector, bundle: ResourceVector) -> ResourceVector:
    """Exact componentwise pool shrink; raises if the bundle does not fit."""
    return pool - bundle


@dataclass(frozen=True)
class CatalogEntry:
    """One contract option: a bundle rented for ``period`` unit periods at
    ``payment`` money per period."""

    bundle: ResourceVector
    period: int
    payment: float

    def __post_init__(self) -> None:
        if self.period < 1:
            raise ValueError(f"contract period must be >= 1, got {self.period}")
        if self.payment < 0:
            raise ValueError(f"periodic payment must be >= 0, got {self.payment}")
        # A zero bundle is free and only free bundles may be zero.
        if self.bundle.is_zero != (self.payment == 0):
            raise ValueError(
                "payment must be 0 exactly for the zero bundle "
                f"(bundle={self.bundle}, payment={self.payment})"
            )


@dataclass(frozen=True)
class Catalog:
    """The operator's fixed menu of contract options.

    The null option (zero bundle, zero payment, any period) is implicit and
    always available.  With ``flat_pricing`` a bundle has one payment valid for
    any period; otherwise payments are looked up by exact (bundle, period).
    """

    entries: tuple[CatalogEntry, ...]
    dimension: int
    resolution: int = DEFAULT_RESOLUTION
    flat_pricing: bool = False

    def __post_init__(self) -> None:
        seen: set[tuple[tuple[int, ...], int]] = set()
        flat_payment: dict[tuple[int, ...], float] = {}
        for e in self.entries:
            if e.bundle.dimension != self.dimension or e.bundle.resolution != self.resolution:
                raise ValueError(
                    f"catalog entry {e.bundle} does not live on the catalog lattice "
                    f"({self.dimension}D, 1/{self.resolution})"
                )
            if e.bundle.is_zero:
                raise ValueError("the null option is implicit; do not list zero bundles")
            key = (e.bundle.units, e.period)
            if key in seen:
                raise ValueError(f"duplicate catalog entry for bundle {e.bundle}, period {e.period}")
            seen.add(key)
            if self.flat_pricing:
                prev = flat_payment.setdefault(e.bundle.units, e.payment)
                if prev != e.payment:
                    raise ValueError(
                        f"flat pricing requires one payment per bundle; {e.bundle} has "
                        f"{prev} and {e.payment}"
                    )

    @property
    def null_bundle(self) -> ResourceVector:
        return ResourceVector.zero(self.dimension, self.resolution)

    @property
    def bundles(self) -> tuple[ResourceVector, ...]:
        """Distinct non-null bundles, in first-appearance order."""
        out: list[ResourceVector] = []
        seen: set[tuple[int, ...]] = set()
        for e in self.entries:
            if e.bundle.units not in seen:
                seen.add(e.bundle.units)
                out.append(e.bundle)
        return tuple(out)

    @property
    def all_bundles(self) -> tuple[ResourceVector, ...]:
        """The full bundle set, null first."""
        return (self.null_bundle,) + self.bundles

    def has_bundle(self, bundle: ResourceVector) -> bool:
        return bundle.is_zero or any(bundle.units == b.units for b in self.bundles)

    def payment(self, bundle: ResourceVector, period: int) -> float:
        """Periodic payment for (bundle, period); 0 for the null bundle."""
        if bundle.is_zero:
            return 0.0
        if self.flat_pricing:
            for e in self.entries:
                if e.bundle.units == bundle.units:
                    return e.payment
        else:
            for e in self.entries:
                if e.bundle.units == bundle.units and e.period == period:
                    return e.payment
        raise UnknownEntryError(
            f"no catalog entry prices bundle {bundle} for period {period}"
        )

    def entry_for(self, bundle: ResourceVector, period: int) -> CatalogEntry:
        for e in self.entries:
            if e.bundle.units == bundle.units and e.period == period:
                return e
        raise UnknownEntryError(
            f"no catalog entry for bundle {bundle} with period {period}"
        )


def feasible_set(pool: ResourceVector, catalog: Catalog) -> frozenset[ResourceVector]:
    """Bundles the pool can support right now; always includes the null bundle."""
    out = {catalog.null_bundle}
    for b in catalog.bundles:
        if b <= pool:
            out.add(b)
    return frozenset(out)


@dataclass(frozen=True)
class Request:
    """A tenant's ask at ``arrival_time``: rent ``bundle`` for ``period`` periods.

    A zero bundle encodes "no request arrived this period".
    """

    arrival_time: int
    bundle: ResourceVector
    period: int

    def __post_init__(self) -> None:
        if self.arrival_time < 0:
            raise ValueError("arrival time must be >= 0")
        if self.period < 1 and not self.bundle.is_zero:
            raise ValueError("non-null requests need a period >= 1")

    @property
    def is_null(self) -> bool:
        return self.bundle.is_zero

    @classmethod
    def null(cls, arrival_time: int, dimension: int, resolution: int) -> "Request":
        return cls(arrival_time, ResourceVector.zero(dimension, resolution), 1)


@dataclass(frozen=True)
class ActiveContract:
    """A confirmed contract occupying ``bundle`` for periods start..start+period-1."""

    start: int
    period: int
    bundle: ResourceVector
    payment: float

    def active_at(self, t: int) -> bool:
        return self.start <= t < self.start + self.period

    @property
    def end(self) -> int:
        """First period in which the bundle is back in the pool."""
        return self.start + self.period


@dataclass(frozen=True)
class MarketState:
    """Idle pool plus the ledger of confirmed contracts at a point in time.

    ``reserved`` and ``idle_pool`` are derived in ``__post_init__`` from the
    contracts active at ``time``, so conservation (idle + reserved = initial)
    holds by construction; an over-committed ledger fails to construct.
    """

    time: int
    initial_pool: ResourceVector
    ledger: tuple[ActiveContract, ...] = ()
    reserved: ResourceVector = field(init=False)
    idle_pool: ResourceVector = field(init=False)

    def __post_init__(self) -> None:
        reserved = ResourceVector.zero(self.initial_pool.dimension, self.initial_pool.resolution)
        for c in self.ledger:
            if c.active_at(self.time):
                reserved = reserved + c.bundle
        idle = self.initial_pool - reserved  # raises if the ledger over-commits
        object.__setattr__(self, "reserved", reserved)
        object.__setattr__(self, "idle_pool", idle)

    @classmethod
    def initial(cls, pool: ResourceVector) -> "MarketState":
        return cls(time=0, initial_pool=pool)

    def release_expired(self) -> tuple["MarketState", tuple[ActiveContract, ...]]:
        """Drop ledger entries whose active window has ended."""
        released = tuple(c for c in self.ledger if c.end <= self.time)
        if not released:
            return self, ()
        kept = tuple(c for c in self.ledger if c.end > self.time)
        return MarketState(self.time, self.initial_pool, kept), released

    def with_contract(self, bundle: ResourceVector, period: int, payment: float) -> "MarketState":
        """Append an accepted contract starting now; fails if it does not fit."""
        contract = ActiveContract(self.time, period, bundle, payment)
        return MarketState(self.time, self.initial_pool, self.ledger + (contract,))

    def advanced(self) -> "MarketState":
        return MarketState(self.time + 1, self.initial_pool, self.ledger)

    def active_contracts(self) -> tuple[ActiveContract, ...]:
        return tuple(c for c in self.ledger if c.active_at(self.time))


@dataclass(frozen=True)
class EconomicParams:
    """Discounting and own-slice revenue coefficients.

    Idle resources earn ``rates · fractions`` money per period when exploited
    in the operator's own slices; ``beta`` discounts one period ahead.
    """

    beta: float
    own_revenue_rates: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (0.0 < self.beta < 1.0):
            raise ValueError(f"beta must lie strictly inside (0, 1), got {self.beta}")
        if any(r < 0 for r in self.own_revenue_rates):
            raise ValueError("own-revenue rates must be >= 0")


def state_key(state: MarketState, mode: str, bucket_width: int = 1):
    """Hashable decision-state key.

    Non-expiring contracts never return resources, so (time, idle pool)
    determines everything the future depends on.  With expiry the ledger
    matters too: the key carries the multiset of (remaining periods, bundle),
    with remaining periods coarsened into buckets of ``bucket_width``.
    """
    if mode == NON_EXPIRING:
        return (state.time, state.idle_pool.units)
    if bucket_width < 1:
        raise ValueError("bucket width must be >= 1")
    items = sorted(
        ((c.end - state.time - 1) // bucket_width, c.bundle.units)
        for c in state.active_contracts()
    )
    return (state.time, state.idle_pool.units, tuple(items))
