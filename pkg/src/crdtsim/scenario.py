"""Advertisement-counter application over the dataflow store.

Each node hosts the same graph: a source set of advertisement ids, a
source set of (contract id, ad id) records, one grow-only counter per
ad plus a spillover counter, and a derived pipeline

    ads x contracts -> filter(contract matches ad) -> map(to ad id)

whose output is the set of ads a client may display. Threshold triggers
remove an ad from the source set once its counter reaches the ad's
minimum impression count; the removal drains it from every replica's
displayable set without coordination.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable

from .dataflow import Store, Trigger
from .lattice import (
    ActorId,
    AWSet,
    Delta,
    GCounter,
    awset_add,
    awset_remove,
    gcounter_increment,
    gcounter_value,
)

ADS_VAR = "ads"
CONTRACTS_VAR = "contracts"
PAIRS_VAR = "ad_contract_pairs"
VALID_VAR = "valid_pairs"
DISPLAYABLE_VAR = "displayable"
SPILLOVER_VAR = "counter:spillover"


class ScenarioError(ValueError):
    pass


@dataclass(slots=True, frozen=True)
class Ad:
    ad_id: str
    counter_variable: str
    threshold: int


@dataclass(slots=True, frozen=True)
class Contract:
    contract_id: str
    ad_id: str


def counter_var(ad_id: str) -> str:
    return f"counter:{ad_id}"


def make_ads(count: int, threshold: int) -> list[Ad]:
    if count < 1:
        raise ScenarioError("need at least one advertisement")
    ids = [f"ad{i:03d}" for i in range(count)]
    return [Ad(ad_id, counter_var(ad_id), threshold) for ad_id in ids]


def make_contracts(ads: list[Ad], per_ad: int) -> list[Contract]:
    return [
        Contract(f"ct{k}-{ad.ad_id}", ad.ad_id)
        for ad in ads
        for k in range(per_ad)
    ]


# Mutations go through a caller-supplied applier so the simulator can
# buffer the returned deltas for dissemination.
Apply = Callable[[str, Callable], Delta]


def initialize(store: Store, ads: list[Ad], contracts: list[Contract]) -> None:
    """Declare the full variable graph; contents arrive via ``populate``."""
    seen = set()
    for ad in ads:
        if ad.ad_id in seen:
            raise ScenarioError(f"duplicate ad id {ad.ad_id!r}")
        if ad.threshold < 1:
            raise ScenarioError(f"threshold for {ad.ad_id!r} must be >= 1")
        seen.add(ad.ad_id)
    for contract in contracts:
        if contract.ad_id not in seen:
            raise ScenarioError(f"contract for unknown ad {contract.ad_id!r}")
    store.declare(ADS_VAR, AWSet)
    store.declare(CONTRACTS_VAR, AWSet)
    store.declare(PAIRS_VAR, AWSet)
    store.declare(VALID_VAR, AWSet)
    store.declare(DISPLAYABLE_VAR, AWSet)
    for ad in ads:
        store.declare(ad.counter_variable, GCounter)
    store.declare(SPILLOVER_VAR, GCounter)
    store.product(ADS_VAR, CONTRACTS_VAR, PAIRS_VAR)
    store.filter(PAIRS_VAR, lambda pair: pair[0] == pair[1][1], VALID_VAR)
    store.map(VALID_VAR, lambda pair: pair[0], DISPLAYABLE_VAR)


def populate(apply: Apply, actor: ActorId, ads: list[Ad], contracts: list[Contract]) -> None:
    """Insert the ad and contract records (server side)."""
    for ad in ads:
        apply(ADS_VAR, lambda s, e=ad.ad_id: awset_add(s, actor, e))
    for contract in contracts:
        element = (contract.contract_id, contract.ad_id)
        apply(CONTRACTS_VAR, lambda s, e=element: awset_add(s, actor, e))


def client_impression(store: Store, apply: Apply, actor: ActorId, rng: random.Random) -> str:
    """Record one impression against a uniformly chosen displayable ad.

    With nothing displayable the spillover counter takes the event, so
    the experiment-wide event total stays exactly predictable.
    """
    choices = store.elements(DISPLAYABLE_VAR)
    target = counter_var(rng.choice(choices)) if choices else SPILLOVER_VAR
    apply(target, lambda s: gcounter_increment(s, actor, 1))
    return target


def register_retirement_triggers(
    store: Store,
    apply: Apply,
    ads: list[Ad],
    on_retire: Callable[[str, int], None] | None = None,
) -> list[Trigger]:
    """One threshold trigger per ad: at or past the ad's minimum
    impression count, remove it from the source set. Firing is one-shot
    and the removal is idempotent under joins, so concurrent firings on
    different nodes agree."""
    triggers = []
    for ad in ads:
        def fire(ad=ad):
            if on_retire is not None:
                on_retire(ad.ad_id, gcounter_value(store.state(ad.counter_variable)))
            apply(ADS_VAR, lambda s: awset_remove(s, ad.ad_id))

        triggers.append(
            store.read_threshold(
                ad.counter_variable,
                lambda s, t=ad.threshold: gcounter_value(s) >= t,
                fire,
            )
        )
    return triggers


def grand_total(store: Store, ads: list[Ad]) -> int:
    """Local sum over all impression counters including spillover."""
    total = gcounter_value(store.state(SPILLOVER_VAR))
    for ad in ads:
        total += gcounter_value(store.state(ad.counter_variable))
    return total
