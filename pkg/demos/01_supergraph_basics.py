#!/usr/bin/env python3
"""Build a heterogeneous graph by hand, segregate it into supervertices, and
inspect the propagation schedule.

The toy graph has four node types in three categories. Location and
organization nodes share a category because they are densely linked; the
downstream task lives on the book category, so both superedges point at it.
"""

import numpy as np

from gripnet import (
    CategoricalPartition,
    CycleDetected,
    HeteroGraph,
    TaskNotLeaf,
    build_supergraph,
    induce_superedge,
    induce_supervertex,
    topological_order,
)

node_ids = ["loc1", "org1", "org2", "bus1", "bus2", "book1", "book2"]
node_types = ["location", "organization", "organization",
              "business", "business", "book", "book"]
edges = [
    (0, 1, "near"), (1, 2, "affiliated"),
    (3, 4, "partner"),
    (5, 6, "similar"),
    (1, 5, "published"), (0, 6, "set_in"),
    (3, 5, "sells"),
]
graph = HeteroGraph(node_ids=node_ids, node_types=node_types, edges=edges)
print("graph:", graph.counts())

partition = CategoricalPartition({
    "location": "green", "organization": "green",
    "business": "orange", "book": "blue",
})
print("categories:", partition.categories)

# A supervertex is the induced subgraph of one category. Internal edges are
# symmetrized by default because within-category relations are undirected.
green = induce_supervertex(graph, partition, "green")
print(f"\nsupervertex green: nodes {green.node_ids}, edges {green.edges}")

# A superedge collects every edge between two categories, reoriented
# parent -> child no matter how the raw data stored them.
se = induce_superedge(graph, partition, "green", "blue")
print(f"superedge green->blue: {se.edges}")

# The full supergraph validates both construction rules: the category DAG
# must be acyclic and the task category must be a leaf.
sg = build_supergraph(
    graph, partition,
    directions=[("green", "blue"), ("orange", "blue")],
    task="blue",
)
schedule = topological_order(sg)
print(f"\nvalid supergraph; schedule: {schedule.order}")
print("parents of blue:", sg.parents("blue"))

# Violations are rejected with a named cause.
try:
    build_supergraph(graph, partition,
                     [("green", "blue"), ("blue", "green")], task="orange")
except CycleDetected as exc:
    print("\nrejected cyclic declaration:", exc)

try:
    build_supergraph(graph, partition, [("green", "blue")], task="green")
except TaskNotLeaf as exc:
    print("rejected non-leaf task:", exc)
