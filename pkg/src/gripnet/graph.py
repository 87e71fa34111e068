"""In-memory heterogeneous graph: typed nodes, labelled edges, and the
category-induced subgraphs used to assemble a supergraph.

Node ids in data files are arbitrary strings; they are interned to dense
integer indices 0..|V|-1 at load time. Edges are triples (src, dst, label).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


class GraphFormatError(ValueError):
    """Raised when a nodes/edges file is malformed or inconsistent."""


@dataclass(frozen=True)
class HeteroGraph:
    """A graph with typed nodes and labelled edges.

    Attributes
    ----------
    node_ids : list of str
        Original node identifier for each dense index.
    node_types : list of str
        Type of each node, aligned with ``node_ids``.
    edges : list of (int, int, str)
        Deduplicated directed triples (src, dst, label) in dense indices.
    duplicate_edges_dropped : int
        Number of repeated triples removed at load time.
    """

    node_ids: list[str]
    node_types: list[str]
    edges: list[tuple[int, int, str]]
    duplicate_edges_dropped: int = 0
    index_of: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.index_of:
            object.__setattr__(
                self, "index_of", {nid: i for i, nid in enumerate(self.node_ids)}
            )
        n = len(self.node_ids)
        if len(self.node_types) != n:
            raise GraphFormatError(
                f"{len(self.node_types)} types for {n} nodes"
            )
        for s, d, lab in self.edges:
            if not (0 <= s < n and 0 <= d < n):
                raise GraphFormatError(f"edge ({s}, {d}, {lab!r}) endpoint out of range")

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def type_set(self) -> list[str]:
        return sorted(set(self.node_types))

    @property
    def label_set(self) -> list[str]:
        return sorted({lab for _, _, lab in self.edges})

    def type_of(self, node: int) -> str:
        return self.node_types[node]

    def counts(self) -> dict[str, int]:
        """Sizes reported after a load: nodes, edges, types, labels, duplicates."""
        return {
            "nodes": self.num_nodes,
            "edges": self.num_edges,
            "node_types": len(self.type_set),
            "edge_labels": len(self.label_set),
            "duplicate_edges_dropped": self.duplicate_edges_dropped,
        }


@dataclass(frozen=True)
class CategoricalPartition:
    """Grouping of node types into semantically coherent categories."""

    category_of: dict[str, str]

    @property
    def categories(self) -> list[str]:
        return sorted(set(self.category_of.values()))

    def category(self, node_type: str) -> str:
        try:
            return self.category_of[node_type]
        except KeyError:
            raise KeyError(f"node type {node_type!r} has no category") from None

    def check_covers(self, g: HeteroGraph) -> None:
        missing = sorted(set(g.node_types) - set(self.category_of))
        if missing:
            raise KeyError(f"partition does not cover node types: {missing}")


@dataclass(frozen=True)
class SupervertexGraph:
    """Induced subgraph of all nodes of one category and the edges among them.

    ``node_ids`` lists the member nodes' global dense indices in ascending
    order; a node's local index is its position in that list.
    """

    category: str
    node_ids: list[int]
    edges: list[tuple[int, int, str]]  # local indices
    symmetrized: bool
    local_of: dict[int, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.local_of:
            object.__setattr__(
                self, "local_of", {g: i for i, g in enumerate(self.node_ids)}
            )

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def labels(self) -> list[str]:
        return sorted({lab for _, _, lab in self.edges})

    def to_global(self, local: int) -> int:
        return self.node_ids[local]


@dataclass(frozen=True)
class SuperedgeGraph:
    """Bipartite subgraph of all edges between two categories.

    Edges are stored parent -> child in the local indices of each side,
    regardless of the orientation in the raw data.
    """

    source_category: str
    target_category: str
    edges: list[tuple[int, int, str]]  # (parent local, child local, label)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def labels(self) -> list[str]:
        return sorted({lab for _, _, lab in self.edges})


def _read_tsv(path: str | Path, n_fields: int, what: str) -> list[tuple[int, tuple[str, ...]]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != n_fields or any(p == "" for p in parts):
                raise GraphFormatError(
                    f"{path}:{lineno}: malformed {what} record "
                    f"(expected {n_fields} tab-separated fields): {line!r}"
                )
            rows.append((lineno, tuple(parts)))
    if not rows:
        raise GraphFormatError(f"{path}: empty {what} file")
    return rows


def load_edge_list(nodes_path: str | Path, edges_path: str | Path) -> HeteroGraph:
    """Load a heterogeneous graph from ``nodes.tsv`` and ``edges.tsv``.

    nodes.tsv: ``node_id<TAB>node_type`` per line, no header.
    edges.tsv: ``src_id<TAB>dst_id<TAB>edge_label`` per line, no header.

    Duplicate edge triples are dropped (the count is kept on the returned
    graph). Raises :class:`GraphFormatError` for malformed lines, unknown
    node references, or empty files.
    """
    node_rows = _read_tsv(nodes_path, 2, "node")
    node_ids: list[str] = []
    node_types: list[str] = []
    index_of: dict[str, int] = {}
    for lineno, (nid, ntype) in node_rows:
        if nid in index_of:
            raise GraphFormatError(f"{nodes_path}:{lineno}: duplicate node id {nid!r}")
        index_of[nid] = len(node_ids)
        node_ids.append(nid)
        node_types.append(ntype)

    edge_rows = _read_tsv(edges_path, 3, "edge")
    seen: set[tuple[int, int, str]] = set()
    edges: list[tuple[int, int, str]] = []
    dropped = 0
    for lineno, (src, dst, lab) in edge_rows:
        for endpoint in (src, dst):
            if endpoint not in index_of:
                raise GraphFormatError(
                    f"{edges_path}:{lineno}: unknown node id {endpoint!r}"
                )
        triple = (index_of[src], index_of[dst], lab)
        if triple in seen:
            dropped += 1
            continue
        seen.add(triple)
        edges.append(triple)

    return HeteroGraph(
        node_ids=node_ids,
        node_types=node_types,
        edges=edges,
        duplicate_edges_dropped=dropped,
        index_of=index_of,
    )


def load_node_labels(path: str | Path) -> dict[str, str]:
    """Load ``labels.tsv`` (``node_id<TAB>class`` per line) for classification."""
    rows = _read_tsv(path, 2, "label")
    labels: dict[str, str] = {}
    for lineno, (nid, cls) in rows:
        if nid in labels:
            raise GraphFormatError(f"{path}:{lineno}: duplicate label for node {nid!r}")
        labels[nid] = cls
    return labels


def induce_supervertex(
    g: HeteroGraph,
    p: CategoricalPartition,
    category: str,
    symmetrize: bool = True,
) -> SupervertexGraph:
    """Extract the subgraph of all nodes whose type belongs to ``category``.

    The node set is every node v with category(type(v)) == category; the edge
    set is every edge of ``g`` with both endpoints in that node set, rewritten
    in local indices. With ``symmetrize`` (default) each internal edge (i, j, l)
    also yields (j, i, l); duplicates are collapsed.
    """
    if category not in p.categories:
        raise KeyError(f"unknown category {category!r}")
    p.check_covers(g)
    members = [
        v for v in range(g.num_nodes) if p.category(g.type_of(v)) == category
    ]
    local_of = {v: i for i, v in enumerate(members)}
    internal: set[tuple[int, int, str]] = set()
    for s, d, lab in g.edges:
        if s in local_of and d in local_of:
            internal.add((local_of[s], local_of[d], lab))
            if symmetrize:
                internal.add((local_of[d], local_of[s], lab))
    return SupervertexGraph(
        category=category,
        node_ids=members,
        edges=sorted(internal),
        symmetrized=symmetrize,
        local_of=local_of,
    )


def induce_superedge(
    g: HeteroGraph,
    p: CategoricalPartition,
    parent: str,
    child: str,
) -> SuperedgeGraph | None:
    """Extract the bipartite subgraph of all edges between two categories.

    Edges are reoriented parent -> child whatever their direction in the raw
    data. Returns None when no cross edges exist (no superedge).
    """
    if parent == child:
        raise ValueError(f"superedge endpoints must differ, got {parent!r} twice")
    for cat in (parent, child):
        if cat not in p.categories:
            raise KeyError(f"unknown category {cat!r}")
    p.check_covers(g)

    parent_local: dict[int, int] = {}
    child_local: dict[int, int] = {}
    for v in range(g.num_nodes):
        cat = p.category(g.type_of(v))
        if cat == parent:
            parent_local[v] = len(parent_local)
        elif cat == child:
            child_local[v] = len(child_local)

    cross: set[tuple[int, int, str]] = set()
    for s, d, lab in g.edges:
        if s in parent_local and d in child_local:
            cross.add((parent_local[s], child_local[d], lab))
        elif s in child_local and d in parent_local:
            cross.add((parent_local[d], child_local[s], lab))
    if not cross:
        return None
    return SuperedgeGraph(
        source_category=parent,
        target_category=child,
        edges=sorted(cross),
    )
