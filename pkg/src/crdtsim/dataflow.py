"""Replicated-variable store with set combinators and monotone triggers.

Every node hosts the same dataflow graph. Source variables are mutated
through lattice mutators or remote joins; derived variables are
recomputed from full source states whenever an upstream variable
changes, which keeps them a pure function of the sources. Derived set
state is built with deterministic dots hashed from the elements, so
independent recomputations on different nodes are structurally equal.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable

from .lattice import (
    AWSet,
    Delta,
    Dot,
    Element,
    GCounter,
    GMap,
    LatticeState,
    Pair,
    Workflow,
    awset_elements,
    bottom_like,
    context_from_dots,
    element_bytes,
    join,
)

VARIANTS = (GCounter, AWSet, GMap, Pair, Workflow)


class DataflowError(ValueError):
    pass


def _derived_dot(var_id: str, element: Element) -> Dot:
    digest = hashlib.blake2b(element_bytes(element), digest_size=8).digest()
    seq = (int.from_bytes(digest, "big") & (2**63 - 1)) + 1
    return Dot("~" + var_id, seq)


def canonical_awset(var_id: str, members) -> AWSet:
    """AWSet holding exactly ``members``, identical on every recomputation."""
    dots = {e: frozenset([_derived_dot(var_id, e)]) for e in members}
    ctx = context_from_dots(d for ds in dots.values() for d in ds)
    return AWSet(dots, ctx)


@dataclass(slots=True)
class Variable:
    id: str
    state: LatticeState
    kind: str = "source"  # source | derived
    version: int = 0


@dataclass(slots=True)
class Edge:
    combinator: str  # map | filter | product
    sources: tuple[str, ...]
    dst: str
    fn: Callable


@dataclass(slots=True)
class Trigger:
    var_id: str
    condition: Callable[[LatticeState], bool]
    callback: Callable[[], None] | None
    fired: bool = False
    fired_version: int | None = None


@dataclass(slots=True)
class Store:
    variables: dict[str, Variable] = field(default_factory=dict)
    edges: list[Edge] = field(default_factory=list)
    triggers: list[Trigger] = field(default_factory=list)

    # ------------------------------------------------------------ basics

    def declare(self, var_id: str, variant: type, initial: LatticeState | None = None) -> Variable:
        if var_id in self.variables:
            raise DataflowError(f"variable {var_id!r} already declared")
        if variant not in VARIANTS:
            raise DataflowError(f"unsupported variant {variant!r}")
        if initial is None:
            if variant in (Pair, Workflow):  # shape is part of the type
                raise DataflowError(f"{variant.__name__} needs an explicit initial state")
            initial = variant()
        if type(initial) is not variant:
            raise DataflowError("initial state does not match the declared variant")
        state = initial
        var = Variable(var_id, state)
        self.variables[var_id] = var
        return var

    def ensure(self, var_id: str, template: LatticeState) -> Variable:
        """Declare ``var_id`` at bottom if unknown (late-joiner support)."""
        var = self.variables.get(var_id)
        if var is None:
            var = Variable(var_id, bottom_like(template))
            self.variables[var_id] = var
        return var

    def state(self, var_id: str) -> LatticeState:
        return self.variables[var_id].state

    def elements(self, var_id: str) -> list[Element]:
        return awset_elements(self.variables[var_id].state)

    # ----------------------------------------------------------- updates

    def update(self, var_id: str, mutator: Callable[[LatticeState], tuple[LatticeState, Delta]]) -> Delta:
        var = self.variables[var_id]
        if var.kind != "source":
            raise DataflowError(f"cannot update derived variable {var_id!r}")
        new_state, delta = mutator(var.state)
        if new_state is not var.state:
            var.state = new_state
            var.version += 1
            self._recompute_downstream({var_id})
        return delta

    def join_into(self, var_id: str, incoming: LatticeState) -> bool:
        """Merge remote state into a source variable; True if it changed."""
        var = self.ensure(var_id, incoming)
        if var.kind != "source":
            raise DataflowError(f"cannot join into derived variable {var_id!r}")
        merged = join(var.state, incoming)
        if merged is var.state:
            return False
        var.state = merged
        var.version += 1
        self._recompute_downstream({var_id})
        return True

    # ------------------------------------------------------- combinators

    def map(self, src: str, fn: Callable[[Element], Element], dst: str) -> None:
        self._add_edge(Edge("map", (src,), dst, fn))

    def filter(self, src: str, predicate: Callable[[Element], bool], dst: str) -> None:
        self._add_edge(Edge("filter", (src,), dst, predicate))

    def product(self, a: str, b: str, dst: str) -> None:
        self._add_edge(Edge("product", (a, b), dst, None))

    def _add_edge(self, edge: Edge) -> None:
        for var_id in edge.sources + (edge.dst,):
            var = self.variables.get(var_id)
            if var is None:
                raise DataflowError(f"unknown variable {var_id!r}")
            if type(var.state) is not AWSet:
                raise DataflowError(f"combinators require set variables, {var_id!r} is not")
        dst = self.variables[edge.dst]
        if any(e.dst == edge.dst for e in self.edges):
            raise DataflowError(f"variable {edge.dst!r} already has a defining edge")
        if dst.kind == "derived":
            raise DataflowError(f"variable {edge.dst!r} is already derived")
        if dst.state.dots:
            raise DataflowError(f"destination {edge.dst!r} must start empty")
        if self._reaches(edge.dst, set(edge.sources)):
            raise DataflowError(f"edge into {edge.dst!r} would create a cycle")
        dst.kind = "derived"
        self.edges.append(edge)
        self._sort_edges()
        self._recompute_downstream(set(edge.sources))

    def _sort_edges(self) -> None:
        # Keep edges topologically ordered so a single forward pass in
        # _recompute_downstream settles the whole graph.
        pending = list(self.edges)
        ordered: list[Edge] = []
        while pending:
            defined = {e.dst for e in pending}
            ready = [e for e in pending if not defined.intersection(e.sources)]
            ordered.extend(ready)
            pending = [e for e in pending if e not in ready]
        self.edges = ordered

    def _reaches(self, start: str, targets: set[str]) -> bool:
        frontier = [start]
        seen = set()
        while frontier:
            v = frontier.pop()
            if v in targets:
                return True
            if v in seen:
                continue
            seen.add(v)
            frontier.extend(e.dst for e in self.edges if v in e.sources)
        return False

    def _recompute_downstream(self, changed: set[str]) -> None:
        for edge in self.edges:
            if not changed.intersection(edge.sources):
                continue
            members = self._evaluate(edge)
            dst = self.variables[edge.dst]
            if set(dst.state.dots) != members:
                dst.state = canonical_awset(edge.dst, members)
                dst.version += 1
                changed.add(edge.dst)

    def _evaluate(self, edge: Edge) -> set:
        if edge.combinator == "product":
            a = awset_elements(self.variables[edge.sources[0]].state)
            b = awset_elements(self.variables[edge.sources[1]].state)
            return {(x, y) for x in a for y in b}
        src = awset_elements(self.variables[edge.sources[0]].state)
        if edge.combinator == "filter":
            return {e for e in src if edge.fn(e)}
        return {edge.fn(e) for e in src}

    # ---------------------------------------------------------- triggers

    def read_threshold(
        self,
        var_id: str,
        condition: Callable[[LatticeState], bool],
        callback: Callable[[], None] | None = None,
    ) -> Trigger:
        """Register a one-shot trigger on a monotone condition.

        Monotonicity (once true, stays true) is the caller's contract and
        is not verified. The trigger fires at registration if the
        condition already holds, otherwise at the next ``fire_ready``
        sweep after it first holds.
        """
        if var_id not in self.variables:
            raise DataflowError(f"unknown variable {var_id!r}")
        trigger = Trigger(var_id, condition, callback)
        self.triggers.append(trigger)
        self._maybe_fire(trigger)
        return trigger

    def fire_ready(self) -> list[Trigger]:
        """Fire all unfired triggers whose conditions hold; returns them.

        Callbacks may mutate sources, so the sweep repeats until no new
        trigger fires.
        """
        fired: list[Trigger] = []
        progress = True
        while progress:
            progress = False
            for trigger in self.triggers:
                if not trigger.fired and self._maybe_fire(trigger):
                    fired.append(trigger)
                    progress = True
        return fired

    def _maybe_fire(self, trigger: Trigger) -> bool:
        var = self.variables[trigger.var_id]
        if not trigger.condition(var.state):
            return False
        trigger.fired = True
        trigger.fired_version = var.version
        if trigger.callback is not None:
            trigger.callback()
        return True
