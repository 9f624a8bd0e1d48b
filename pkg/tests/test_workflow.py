import random

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from crdtsim.lattice import GMap, Pair, join
from crdtsim.workflow import (
    as_nested_pairs,
    current_task,
    is_task_complete,
    mark_complete,
    wcrdt_new,
)

from conftest import rand_workflow


def test_new_workflow_has_empty_maps():
    w = wcrdt_new(4)
    assert len(w.tasks) == 4
    assert all(t == GMap() for t in w.tasks)
    assert join(wcrdt_new(4), wcrdt_new(4)) == wcrdt_new(4)


def test_single_barrier_allowed_zero_rejected():
    assert len(wcrdt_new(1).tasks) == 1
    with pytest.raises(ValueError):
        wcrdt_new(0)


def test_mark_complete_touches_one_entry():
    w, delta = mark_complete(wcrdt_new(4), 0, "n1")
    assert w.tasks[0].entries == {"n1": True}
    assert all(t == GMap() for t in w.tasks[1:])
    assert delta.tasks[0].entries == {"n1": True}
    assert all(t == GMap() for t in delta.tasks[1:])


def test_mark_complete_idempotent_and_delta_equivalent():
    w0 = wcrdt_new(3)
    w1, delta = mark_complete(w0, 1, "n2")
    assert join(w0, delta) == w1
    w2, _ = mark_complete(w1, 1, "n2")
    assert w2 == w1


def test_mark_out_of_range_rejected():
    with pytest.raises(ValueError):
        mark_complete(wcrdt_new(2), 2, "n1")


def test_task_completeness():
    expected = {"n1", "n2", "n3"}
    w = wcrdt_new(2)
    for node in ("n1", "n2"):
        w, _ = mark_complete(w, 0, node)
    assert not is_task_complete(w, 0, expected)
    w, _ = mark_complete(w, 0, "n3")
    assert is_task_complete(w, 0, expected)
    # an unexpected extra node does not unblock missing expected ones
    w2, _ = mark_complete(wcrdt_new(1), 0, "intruder")
    assert not is_task_complete(w2, 0, expected)


def test_current_task_progression():
    expected = {"n1", "n2"}
    w = wcrdt_new(2)
    assert current_task(w, "n1", expected) == 0
    for node in expected:
        w, _ = mark_complete(w, 0, node)
    assert current_task(w, "n1", expected) == 1
    for node in expected:
        w, _ = mark_complete(w, 1, node)
    assert current_task(w, "n1", expected) is None


def test_own_mark_does_not_skip_incomplete_barrier():
    expected = {"n1", "n2"}
    w, _ = mark_complete(wcrdt_new(2), 0, "n1")
    assert current_task(w, "n1", expected) == 0


@given(seed=st.integers(0, 10_000))
@settings(max_examples=80, deadline=None)
def test_join_agrees_with_nested_pair_construction(seed):
    # The flat task sequence and the right-nested pair encoding are the
    # same lattice: joining then nesting equals nesting then joining.
    rng = random.Random(seed)
    a = rand_workflow(rng)
    b = rand_workflow(rng)
    nested = join(as_nested_pairs(a), as_nested_pairs(b))
    assert nested == as_nested_pairs(join(a, b))
    assert isinstance(nested, Pair)
