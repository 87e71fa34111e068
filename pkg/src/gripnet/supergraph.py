"""Supergraph assembly: supervertices plus user-declared directed superedges,
validated as a DAG whose task supervertex is a leaf, and the deterministic
propagation schedule over it.
"""

from __future__ import annotations

import heapq
import warnings
from dataclasses import dataclass, field

from .graph import (
    CategoricalPartition,
    HeteroGraph,
    SuperedgeGraph,
    SupervertexGraph,
    induce_superedge,
    induce_supervertex,
)


class SupergraphError(ValueError):
    """Base class for supergraph validation failures."""


class CycleDetected(SupergraphError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        loop = " -> ".join(cycle + cycle[:1])
        super().__init__(f"superedge directions contain a cycle: {loop}")


class TaskNotLeaf(SupergraphError):
    def __init__(self, task: str, child: str):
        self.superedge = (task, child)
        super().__init__(
            f"task supervertex {task!r} must be a leaf but has outgoing "
            f"superedge {task!r} -> {child!r}"
        )


class EmptySuperedge(SupergraphError):
    def __init__(self, parent: str, child: str):
        self.pair = (parent, child)
        super().__init__(
            f"declared superedge {parent!r} -> {child!r} has no edges in the graph"
        )


@dataclass(frozen=True)
class TopoSchedule:
    """Category order in which supervertices are encoded; parents first."""

    order: list[str]

    def __iter__(self):
        return iter(self.order)

    def index(self, category: str) -> int:
        return self.order.index(category)


@dataclass(frozen=True)
class Supergraph:
    """Validated DAG of supervertices connected by directed superedges."""

    supervertices: dict[str, SupervertexGraph]
    superedges: dict[tuple[str, str], SuperedgeGraph]
    task_supervertex: str
    dropped_cross_edges: int = 0
    parents_of: dict[str, list[str]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.parents_of:
            parents: dict[str, list[str]] = {c: [] for c in self.supervertices}
            for parent, child in self.superedges:
                parents[child].append(parent)
            object.__setattr__(
                self, "parents_of", {c: sorted(ps) for c, ps in parents.items()}
            )

    @property
    def categories(self) -> list[str]:
        return sorted(self.supervertices)

    def parents(self, category: str) -> list[str]:
        return self.parents_of[category]

    def task_graph(self) -> SupervertexGraph:
        return self.supervertices[self.task_supervertex]


def _find_cycle(children: dict[str, list[str]]) -> list[str]:
    """Return one directed cycle from an adjacency map known to contain one."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {c: WHITE for c in children}
    stack: list[str] = []

    def visit(u: str) -> list[str] | None:
        color[u] = GREY
        stack.append(u)
        for v in children[u]:
            if color[v] == GREY:
                return stack[stack.index(v):]
            if color[v] == WHITE:
                found = visit(v)
                if found is not None:
                    return found
        stack.pop()
        color[u] = BLACK
        return None

    for c in sorted(children):
        if color[c] == WHITE:
            cycle = visit(c)
            if cycle is not None:
                return cycle
    raise AssertionError("no cycle found")


def build_supergraph(
    g: HeteroGraph,
    p: CategoricalPartition,
    directions: list[tuple[str, str]],
    task: str,
    symmetrize: bool = True,
) -> Supergraph:
    """Induce all supervertices and the declared superedges, then validate.

    Validation enforces the two construction criteria: the directed graph over
    categories must be acyclic (:class:`CycleDetected`) and the task category
    must have no outgoing superedges (:class:`TaskNotLeaf`). A declared
    direction with no cross edges raises :class:`EmptySuperedge`. Cross edges
    between category pairs not covered by any declared direction are dropped
    with a warning; the dropped count is recorded on the result.
    """
    p.check_covers(g)
    cats = p.categories
    if task not in cats:
        raise KeyError(f"unknown task category {task!r}")
    seen_pairs = set()
    for parent, child in directions:
        for cat in (parent, child):
            if cat not in cats:
                raise KeyError(f"direction references unknown category {cat!r}")
        if parent == child:
            raise SupergraphError(f"self-directed superedge {parent!r} -> {child!r}")
        if (parent, child) in seen_pairs:
            raise SupergraphError(f"duplicate direction {parent!r} -> {child!r}")
        seen_pairs.add((parent, child))

    children: dict[str, list[str]] = {c: [] for c in cats}
    for parent, child in directions:
        children[parent].append(child)
    for parent in children:
        if parent == task and children[parent]:
            raise TaskNotLeaf(task, sorted(children[parent])[0])

    # Kahn's algorithm; a leftover node set means a cycle exists.
    indeg = {c: 0 for c in cats}
    for parent, child in directions:
        indeg[child] += 1
    ready = [c for c in cats if indeg[c] == 0]
    heapq.heapify(ready)
    visited = 0
    while ready:
        u = heapq.heappop(ready)
        visited += 1
        for v in sorted(children[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if visited != len(cats):
        raise CycleDetected(_find_cycle(children))

    supervertices = {}
    for c in cats:
        sv = induce_supervertex(g, p, c, symmetrize=symmetrize)
        if sv.num_nodes == 0:
            raise SupergraphError(f"category {c!r} has no nodes")
        supervertices[c] = sv

    superedges: dict[tuple[str, str], SuperedgeGraph] = {}
    for parent, child in directions:
        se = induce_superedge(g, p, parent, child)
        if se is None:
            raise EmptySuperedge(parent, child)
        superedges[(parent, child)] = se

    covered = {frozenset(pair) for pair in seen_pairs}
    dropped = 0
    for s, d, _ in g.edges:
        cs, cd = p.category(g.type_of(s)), p.category(g.type_of(d))
        if cs != cd and frozenset((cs, cd)) not in covered:
            dropped += 1
    if dropped:
        warnings.warn(
            f"{dropped} cross-category edge(s) are not covered by any declared "
            "superedge direction and were dropped",
            stacklevel=2,
        )

    return Supergraph(
        supervertices=supervertices,
        superedges=superedges,
        task_supervertex=task,
        dropped_cross_edges=dropped,
    )


def topological_order(sg: Supergraph) -> TopoSchedule:
    """Deterministic schedule: every parent precedes its children, ties broken
    by ascending category id."""
    children: dict[str, list[str]] = {c: [] for c in sg.supervertices}
    indeg = {c: 0 for c in sg.supervertices}
    for parent, child in sg.superedges:
        children[parent].append(child)
        indeg[child] += 1
    ready = [c for c in sg.supervertices if indeg[c] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        u = heapq.heappop(ready)
        order.append(u)
        for v in sorted(children[u]):
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    assert len(order) == len(sg.supervertices)
    return TopoSchedule(order=order)
