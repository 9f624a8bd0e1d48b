"""Coordination-free barriers: a fixed sequence of grow-only task maps.

Each task holds one flag per node; a node sets its flag when its share
of the task is done. A task is complete once every expected node's flag
is true, which acts as a barrier: a node may work on task k only after
its local replica shows tasks 0..k-1 complete. The structure is
disseminated like any other state and its traffic is excluded from
transmission metrics.
"""

from __future__ import annotations

from .lattice import ActorId, GMap, Pair, Workflow, gmap_set_true


def wcrdt_new(task_count: int) -> Workflow:
    if task_count < 1:
        raise ValueError(f"task_count must be >= 1, got {task_count}")
    return Workflow(tuple(GMap() for _ in range(task_count)))


def mark_complete(w: Workflow, task: int, node: ActorId) -> tuple[Workflow, Workflow]:
    """Set the node's flag in one task; the delta touches only that entry."""
    if not 0 <= task < len(w.tasks):
        raise ValueError(f"task index {task} out of range for {len(w.tasks)} tasks")
    new_map, map_delta = gmap_set_true(w.tasks[task], node)
    tasks = w.tasks[:task] + (new_map,) + w.tasks[task + 1 :]
    delta_tasks = tuple(
        map_delta if i == task else GMap() for i in range(len(w.tasks))
    )
    return Workflow(tasks), Workflow(delta_tasks)


def is_task_complete(w: Workflow, task: int, expected: set[ActorId]) -> bool:
    if not expected:
        raise ValueError("expected node set must be non-empty")
    entries = w.tasks[task].entries
    return all(entries.get(node, False) for node in expected)


def current_task(w: Workflow, node: ActorId, expected: set[ActorId]) -> int | None:
    """Smallest task index the node may work on, or None when all complete.

    A node may work on task k once tasks 0..k-1 are complete for the
    expected set; having already set its own flag for k does not advance
    it past an incomplete barrier.
    """
    for i in range(len(w.tasks)):
        if not is_task_complete(w, i, expected):
            return i
    return None


def as_nested_pairs(w: Workflow):
    """Right-nested pair view of the task sequence (same lattice)."""
    if len(w.tasks) == 1:
        return w.tasks[0]
    state = w.tasks[-1]
    for task in reversed(w.tasks[:-1]):
        state = Pair(task, state)
    return state
