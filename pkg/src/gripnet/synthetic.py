"""Deterministic synthetic datasets with planted, auditable structure.

Link-prediction mode builds a two-supervertex instance: a root of "gene"-like
nodes and a leaf of "drug"-like nodes, each assigned a latent community. Leaf
nodes inherit their community through their cross edges, and each predictable
edge label is planted between leaf pairs of one community, plus rewiring
noise. Node-classification mode plants classes shared along edges so a node's
class matches its neighbourhood majority. Ground truth (community/class per
node and the noise edges) is written to a sidecar file so tests can audit the
construction; a ready-to-train config is emitted next to the data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ConfigError, dump_json

MODES = ("lp", "nc")


class InfeasibleSpec(ValueError):
    """Raised when a spec requests more edges than possible pairs."""


@dataclass(frozen=True)
class SyntheticSpec:
    """Sizes, edge counts, noise rate, and seed of a planted dataset.

    Defaults are mode-dependent; build specs with :meth:`defaults` or
    :func:`parse_synthetic_spec` rather than relying on raw field defaults.
    """

    mode: str = "lp"
    root_nodes: int = 40
    leaf_nodes: int = 60
    labels: int = 3  # predictable leaf edge labels (lp); ignored for nc
    classes: int = 4  # planted node classes (nc); ignored for lp
    intra_edges_per_label: int = 190
    intra_edges_per_node: int = 4
    cross_edges_per_leaf: int = 2
    root_edges: int = 40
    noise: float = 0.05
    seed: int = 1

    @classmethod
    def defaults(cls, mode: str = "lp", **overrides) -> "SyntheticSpec":
        """Mode defaults: lp is a 60+40-node instance with 3 planted labels;
        nc is a 50+200-node instance with 4 planted classes."""
        base = {"mode": mode}
        if mode == "nc":
            base.update(root_nodes=50, leaf_nodes=200, root_edges=30)
        base.update(overrides)
        return cls(**base)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"synthetic mode must be one of {MODES}")
        if min(self.root_nodes, self.leaf_nodes) < 1:
            raise ConfigError("supervertex sizes must be positive")
        if not 0.0 <= self.noise < 1.0:
            raise ConfigError("noise rate must be in [0, 1)")
        groups = self.labels if self.mode == "lp" else self.classes
        if groups < 1:
            raise ConfigError("need at least one label/class")
        if self.root_nodes < groups or self.leaf_nodes < groups:
            raise ConfigError("every community needs at least one node per side")

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "root_nodes": self.root_nodes,
            "leaf_nodes": self.leaf_nodes,
            "labels": self.labels,
            "classes": self.classes,
            "intra_edges_per_label": self.intra_edges_per_label,
            "intra_edges_per_node": self.intra_edges_per_node,
            "cross_edges_per_leaf": self.cross_edges_per_leaf,
            "root_edges": self.root_edges,
            "noise": self.noise,
            "seed": self.seed,
        }


def parse_synthetic_spec(path: str | Path) -> SyntheticSpec:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("synthetic spec must be a JSON object")
    allowed = set(SyntheticSpec().to_json_dict())
    for key in doc:
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in synthetic spec; allowed: {sorted(allowed)}"
            )
    mode = doc.get("mode", "lp")
    if mode not in MODES:
        raise ConfigError(f"synthetic mode must be one of {MODES}")
    return SyntheticSpec.defaults(**doc)


def _assign_groups(n: int, k: int, rng) -> np.ndarray:
    """Balanced group sizes (within one), membership randomly permuted."""
    base = np.array([i % k for i in range(n)], dtype=np.int64)
    return base[rng.permutation(n)]


def _sample_group_pairs(members, count, rng, what):
    """Distinct unordered pairs within one node group."""
    members = list(members)
    possible = len(members) * (len(members) - 1) // 2
    if count > possible:
        raise InfeasibleSpec(
            f"{what}: requested {count} edges but only {possible} distinct "
            f"pairs exist among {len(members)} nodes"
        )
    all_pairs = [
        (members[a], members[b])
        for a in range(len(members))
        for b in range(a + 1, len(members))
    ]
    chosen = rng.choice(len(all_pairs), size=count, replace=False)
    return [all_pairs[int(i)] for i in np.sort(chosen)]


def _write_tsv(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")


def _generate_lp(spec: SyntheticSpec, rng):
    k = spec.labels
    gene_comm = _assign_groups(spec.root_nodes, k, rng)
    drug_comm = _assign_groups(spec.leaf_nodes, k, rng)
    genes_by_comm = {c: np.flatnonzero(gene_comm == c) for c in range(k)}
    drugs_by_comm = {c: np.flatnonzero(drug_comm == c) for c in range(k)}

    gene = [f"gene{i}" for i in range(spec.root_nodes)]
    drug = [f"drug{i}" for i in range(spec.leaf_nodes)]
    nodes = [(g, "gene") for g in gene] + [(d, "drug") for d in drug]

    edges: list[tuple[str, str, str]] = []
    noise_edges: list[list[str]] = []

    # root internal edges respect the planted communities; counts clamp to
    # what each community can host
    for comm in range(k):
        members = [int(x) for x in genes_by_comm[comm]]
        want = spec.root_edges // k + (1 if comm < spec.root_edges % k else 0)
        possible = len(members) * (len(members) - 1) // 2
        for i, j in _sample_group_pairs(members, min(want, possible), rng,
                                        "root internal edges"):
            edges.append((gene[min(i, j)], gene[max(i, j)], "interacts"))

    for d in range(spec.leaf_nodes):
        comm = int(drug_comm[d])
        candidates = genes_by_comm[comm]
        take = min(spec.cross_edges_per_leaf, len(candidates))
        chosen = rng.choice(candidates, size=take, replace=False)
        for gidx in np.sort(chosen):
            edges.append((gene[int(gidx)], drug[d], "binds"))

    for lab_idx in range(k):
        label = f"effect{lab_idx}"
        members = drugs_by_comm[lab_idx]
        planted = _sample_group_pairs(
            members, spec.intra_edges_per_label, rng, f"label {label!r}"
        )
        used = {(min(a, b), max(a, b)) for a, b in planted}
        for a, b in planted:
            if rng.random() < spec.noise:
                for _ in range(10_000):
                    x, y = rng.choice(spec.leaf_nodes, size=2, replace=False)
                    cand = (min(int(x), int(y)), max(int(x), int(y)))
                    if cand not in used:
                        used.add(cand)
                        noise_edges.append([drug[cand[0]], drug[cand[1]], label])
                        edges.append((drug[cand[0]], drug[cand[1]], label))
                        break
            else:
                edges.append((drug[min(a, b)], drug[max(a, b)], label))

    truth = {
        "mode": "lp",
        "communities": {
            **{gene[i]: int(gene_comm[i]) for i in range(spec.root_nodes)},
            **{drug[i]: int(drug_comm[i]) for i in range(spec.leaf_nodes)},
        },
        "noise_edges": sorted(noise_edges),
    }
    partition = {"gene": "gene", "drug": "drug"}
    config = {
        "dataset": {"nodes": "nodes.tsv", "edges": "edges.tsv"},
        "partition": partition,
        "supergraph": {"directions": [["gene", "drug"]], "task": "drug"},
        "encoder": {
            "gene": {"internal_feature_dim": 32, "sublayer_dims": [16, 16]},
            "drug": {
                "internal_feature_dim": 32,
                "external_dim": 16,
                "sublayer_dims": [16],
            },
        },
        "task": {
            "type": "lp",
            "predictable_labels": [f"effect{i}" for i in range(k)],
        },
        "training": {"epochs": 100, "lr": 0.01, "seed": spec.seed},
        "split": {"fraction": 0.9, "seed": spec.seed},
    }
    return nodes, sorted(set(edges)), None, partition, truth, config


def _generate_nc(spec: SyntheticSpec, rng):
    k = spec.classes
    ctx_class = _assign_groups(spec.root_nodes, k, rng)
    ent_class = _assign_groups(spec.leaf_nodes, k, rng)
    ctx_by_class = {c: np.flatnonzero(ctx_class == c) for c in range(k)}
    ent_by_class = {c: np.flatnonzero(ent_class == c) for c in range(k)}

    ctx = [f"context{i}" for i in range(spec.root_nodes)]
    ent = [f"entity{i}" for i in range(spec.leaf_nodes)]
    nodes = [(c, "context") for c in ctx] + [(e, "entity") for e in ent]

    edges: list[tuple[str, str, str]] = []
    noise_edges: list[list[str]] = []

    for cls in range(k):
        members = [int(x) for x in ctx_by_class[cls]]
        want = spec.root_edges // k + (1 if cls < spec.root_edges % k else 0)
        possible = len(members) * (len(members) - 1) // 2
        for i, j in _sample_group_pairs(members, min(want, possible), rng,
                                        "root internal edges"):
            edges.append((ctx[min(i, j)], ctx[max(i, j)], "near"))

    for e in range(spec.leaf_nodes):
        cls = int(ent_class[e])
        same = [int(x) for x in ent_by_class[cls] if int(x) != e]
        take = min(spec.intra_edges_per_node, len(same))
        chosen = rng.choice(same, size=take, replace=False) if take else []
        for other in np.sort(np.asarray(chosen, dtype=np.int64)):
            other = int(other)
            if rng.random() < spec.noise:
                for _ in range(10_000):
                    rand = int(rng.integers(spec.leaf_nodes))
                    if rand != e:
                        noise_edges.append(
                            [ent[min(e, rand)], ent[max(e, rand)], "related"]
                        )
                        edges.append((ent[min(e, rand)], ent[max(e, rand)], "related"))
                        break
            else:
                edges.append((ent[min(e, other)], ent[max(e, other)], "related"))

        candidates = ctx_by_class[cls]
        take = min(spec.cross_edges_per_leaf, len(candidates))
        chosen = rng.choice(candidates, size=take, replace=False)
        for cidx in np.sort(chosen):
            edges.append((ctx[int(cidx)], ent[e], "about"))

    labels = [(ent[i], f"class{int(ent_class[i])}") for i in range(spec.leaf_nodes)]
    truth = {
        "mode": "nc",
        "classes": {
            **{ctx[i]: int(ctx_class[i]) for i in range(spec.root_nodes)},
            **{ent[i]: int(ent_class[i]) for i in range(spec.leaf_nodes)},
        },
        "noise_edges": sorted(noise_edges),
    }
    partition = {"context": "context", "entity": "entity"}
    config = {
        "dataset": {
            "nodes": "nodes.tsv",
            "edges": "edges.tsv",
            "labels": "labels.tsv",
        },
        "partition": partition,
        "supergraph": {"directions": [["context", "entity"]], "task": "entity"},
        "encoder": {
            "context": {"internal_feature_dim": 32, "sublayer_dims": [16, 16]},
            "entity": {
                "internal_feature_dim": 32,
                "external_dim": 16,
                "sublayer_dims": [16],
            },
        },
        "task": {"type": "nc"},
        "training": {"epochs": 100, "lr": 0.01, "seed": spec.seed},
        "split": {"fraction": 0.9, "seed": spec.seed},
    }
    return nodes, sorted(set(edges)), labels, partition, truth, config


def generate_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> dict[str, str]:
    """Write the dataset files for ``spec`` into ``out_dir``.

    Produces nodes.tsv, edges.tsv, labels.tsv (nc only), partition.json,
    truth.json (ground-truth sidecar), and config.json (a complete run config
    pointing at the generated files). Byte-identical for identical specs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    if spec.mode == "lp":
        nodes, edges, labels, partition, truth, config = _generate_lp(spec, rng)
    else:
        nodes, edges, labels, partition, truth, config = _generate_nc(spec, rng)

    paths = {
        "nodes": out / "nodes.tsv",
        "edges": out / "edges.tsv",
        "partition": out / "partition.json",
        "truth": out / "truth.json",
        "config": out / "config.json",
        "spec": out / "synthetic_spec.json",
    }
    _write_tsv(paths["nodes"], nodes)
    _write_tsv(paths["edges"], edges)
    if labels is not None:
        paths["labels"] = out / "labels.tsv"
        _write_tsv(paths["labels"], labels)
    paths["partition"].write_text(dump_json(partition), encoding="utf-8")
    paths["truth"].write_text(dump_json(truth), encoding="utf-8")
    paths["config"].write_text(dump_json(config), encoding="utf-8")
    paths["spec"].write_text(dump_json(spec.to_json_dict()), encoding="utf-8")
    return {name: str(p) for name, p in paths.items()}
