"""Request-arrival statistics and reproducible request streams.

At most one request arrives per unit period (short-period Bernoulli
approximation of the Poisson arrival process).  Arrivals are categorical over
the catalog entries plus an explicit null outcome.  All randomness in the
package flows through :func:`derive_generator`, which maps a master seed plus
integer stream coordinates to an independent generator, so any draw is a pure
function of (seed, stream ids, index) rather than of call order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownBundleError
from .model import Catalog, Request, ResourceVector

# Stream tags namespace the derived generators per purpose.
STREAM_REQUESTS = 1
STREAM_OC = 2
STREAM_LEARN = 3
STREAM_ON_DEMAND = 4

_WEIGHT_TOL = 1e-12


def stable_key_hash(*parts: object) -> int:
    """Deterministic 63-bit hash of structured parts, stable across processes."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little") >> 1


def derive_generator(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for the given (seed, stream coordinates)."""
    entropy = [seed & 0xFFFFFFFFFFFFFFFF] + [s & 0xFFFFFFFFFFFFFFFF for s in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class RequestDistribution:
    """Per-period arrival probabilities over catalog entries plus the null request.

    Weights are normalized at construction; the null probability absorbs
    whatever mass the entries do not claim when built via :meth:`from_weights`.
    """

    catalog: Catalog
    entry_weights: tuple[float, ...]
    null_weight: float
    _cumulative: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.entry_weights) != len(self.catalog.entries):
            raise ValueError(
                f"{len(self.entry_weights)} weights for {len(self.catalog.entries)} entries"
            )
        weights = list(self.entry_weights) + [self.null_weight]
        if any(w < 0 for w in weights):
            raise ValueError("arrival weights must be >= 0")
        total = sum(weights)
        if total <= 0:
            raise ValueError("arrival weights sum to zero")
        if abs(total - 1.0) > _WEIGHT_TOL:
            weights = [w / total for w in weights]
        object.__setattr__(self, "entry_weights", tuple(weights[:-1]))
        object.__setattr__(self, "null_weight", weights[-1])
        cum = np.cumsum(weights)
        cum[-1] = 1.0
        object.__setattr__(self, "_cumulative", tuple(cum))

    @classmethod
    def from_weights(cls, catalog: Catalog, entry_weights) -> "RequestDistribution":
        """Build with the null probability as the remaining mass."""
        ws = tuple(float(w) for w in entry_weights)
        null = 1.0 - sum(ws)
        if null < -_WEIGHT_TOL:
            raise ValueError(f"entry weights sum to {sum(ws)} > 1")
        return cls(catalog, ws, max(null, 0.0))

    def bundle_probability(self, bundle: ResourceVector) -> float:
        """Marginal per-period probability of a request for ``bundle``."""
        if bundle.is_zero:
            return self.null_weight
        if not self.catalog.has_bundle(bundle):
            raise UnknownBundleError(f"bundle {bundle} is not in the catalog")
        return sum(
            w
            for w, e in zip(self.entry_weights, self.catalog.entries)
            if e.bundle.units == bundle.units
        )

    def outcome_index(self, u: float) -> int:
        """Map a uniform draw to an outcome: entry index, or len(entries) for null."""
        return int(np.searchsorted(self._cumulative, u, side="right"))

    def request_for_outcome(self, outcome: int, t: int) -> Request:
        if outcome >= len(self.catalog.entries):
            return Request.null(t, self.catalog.dimension, self.catalog.resolution)
        e = self.catalog.entries[outcome]
        return Request(t, e.bundle, e.period)


def conditional_measure(
    bundle: ResourceVector,
    feasible: frozenset[ResourceVector] | set[ResourceVector],
    dist: RequestDistribution,
) -> float:
    """Probability of an effective request for ``bundle`` given the feasible set.

    Requests outside the feasible set cannot be served and are therefore
    indistinguishable from no request: their mass folds onto the null bundle.
    """
    catalog = dist.catalog
    if not catalog.has_bundle(bundle):
        raise UnknownBundleError(f"bundle {bundle} is not in the catalog")
    feasible_units = {v.units for v in feasible}
    if bundle.is_zero:
        folded = sum(
            dist.bundle_probability(b)
            for b in catalog.bundles
            if b.units not in feasible_units
        )
        return dist.null_weight + folded
    if bundle.units not in feasible_units:
        return 0.0
    return dist.bundle_probability(bundle)


@dataclass
class RequestStream:
    """Seeded stream handle: the request at time t is a pure function of
    (seed, stream_id, t), regardless of access order or chunking."""

    dist: RequestDistribution
    seed: int
    stream_id: int
    _uniforms: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self._rng = derive_generator(self.seed, STREAM_REQUESTS, self.stream_id)

    def _uniform_at(self, t: int) -> float:
        while len(self._uniforms) <= t:
            # Extend in order so cached values never depend on query pattern.
            self._uniforms.extend(self._rng.random(max(16, t + 1 - len(self._uniforms))))
        return self._uniforms[t]

    def request_at(self, t: int) -> Request:
        return self.dist.request_for_outcome(
            self.dist.outcome_index(self._uniform_at(t)), t
        )


def sample_request(dist: RequestDistribution, t: int, stream: RequestStream) -> Request:
    """One categorical draw for period t from the given stream handle."""
    if stream.dist is not dist:
        raise ValueError("stream was built for a different distribution")
    return stream.request_at(t)
