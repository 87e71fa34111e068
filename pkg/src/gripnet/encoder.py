"""Supergraph encoder.

Each supervertex runs a three-part module: an external aggregation layer that
averages per-label neighbour means from every parent supervertex's embeddings,
an internal feature layer that maps the node's implicit one-hot input into the
working space (realized as row selection of a weight matrix), and an internal
aggregation stack of relational-convolution sublayers with per-label neighbour
means plus a self transform. Supervertices are encoded sequentially along the
topological schedule so parents are always available.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import LabelAdjacency, Parameter, Tape, Tensor
from .optim import xavier_init
from .supergraph import Supergraph, TopoSchedule

COMBINE_MODES = ("concat", "sum")
ACTIVATIONS = ("relu", "linear")

# Final embeddings per supervertex, one row per local node.
EmbeddingTable = dict[str, Tensor]


@dataclass(frozen=True)
class SupervertexConfig:
    """Layer dimensions and switches for one supervertex module.

    ``sublayer_dims`` lists the output width of each internal aggregation
    sublayer; the last entry is the supervertex's embedding width.
    ``external_dim`` only matters when the supervertex has parents; with
    ``combine_mode="sum"`` it must equal ``internal_feature_dim``.
    ``inter_activation`` selects the nonlinearity applied to the averaged
    parent contributions (linear keeps them untransformed).
    """

    internal_feature_dim: int = 32
    external_dim: int = 16
    combine_mode: str = "concat"
    inter_activation: str = "relu"
    sublayer_dims: tuple[int, ...] = (16,)

    def __post_init__(self):
        object.__setattr__(self, "sublayer_dims", tuple(self.sublayer_dims))

    def validate(self, category: str, has_parents: bool) -> None:
        if self.combine_mode not in COMBINE_MODES:
            raise ValueError(
                f"{category}: combine_mode must be one of {COMBINE_MODES}, "
                f"got {self.combine_mode!r}"
            )
        if self.inter_activation not in ACTIVATIONS:
            raise ValueError(
                f"{category}: inter_activation must be one of {ACTIVATIONS}, "
                f"got {self.inter_activation!r}"
            )
        if len(self.sublayer_dims) < 1:
            raise ValueError(f"{category}: need at least one aggregation sublayer")
        if self.internal_feature_dim < 1 or any(d < 1 for d in self.sublayer_dims):
            raise ValueError(f"{category}: layer dims must be >= 1")
        if has_parents:
            if self.external_dim < 1:
                raise ValueError(f"{category}: external_dim must be >= 1")
            if (
                self.combine_mode == "sum"
                and self.external_dim != self.internal_feature_dim
            ):
                raise ValueError(
                    f"{category}: sum combine needs internal_feature_dim == "
                    f"external_dim, got {self.internal_feature_dim} vs "
                    f"{self.external_dim}"
                )

    def external_width(self, has_parents: bool) -> int:
        """Width of the external block entering the combine step."""
        if not has_parents:
            # Roots contribute no external columns under concat; under sum the
            # zero external block shares the internal width.
            return 0 if self.combine_mode == "concat" else self.internal_feature_dim
        return self.external_dim

    def combined_width(self, has_parents: bool) -> int:
        if self.combine_mode == "concat":
            return self.external_width(has_parents) + self.internal_feature_dim
        return self.internal_feature_dim

    def embedding_width(self) -> int:
        return self.sublayer_dims[-1]


@dataclass
class EncoderGraph:
    """Prebuilt per-label adjacencies for every supervertex and superedge."""

    internal: dict[str, dict[str, LabelAdjacency]]
    external: dict[tuple[str, str], dict[str, LabelAdjacency]]


def build_adjacencies(
    sg: Supergraph,
    internal_edges_override: dict[str, list[tuple[int, int, str]]] | None = None,
) -> EncoderGraph:
    """Assemble label adjacencies from a supergraph.

    ``internal_edges_override`` replaces the edge list used for a
    supervertex's internal adjacencies (training uses this to restrict the
    task supervertex to train-split edges). The label key set always comes
    from the full supervertex so parameter shapes never depend on the split;
    a label with no remaining edges yields an all-empty adjacency.
    """
    override = internal_edges_override or {}
    internal: dict[str, dict[str, LabelAdjacency]] = {}
    for cat, sv in sg.supervertices.items():
        edges = override.get(cat, sv.edges)
        by_label: dict[str, list[tuple[int, int]]] = {lab: [] for lab in sv.labels}
        for s, d, lab in edges:
            by_label.setdefault(lab, []).append((s, d))
        internal[cat] = {
            lab: LabelAdjacency.from_edges(lab, pairs, sv.num_nodes)
            for lab, pairs in sorted(by_label.items())
        }
    external: dict[tuple[str, str], dict[str, LabelAdjacency]] = {}
    for (parent, child), se in sg.superedges.items():
        n_child = sg.supervertices[child].num_nodes
        n_parent = sg.supervertices[parent].num_nodes
        by_label = {lab: [] for lab in se.labels}
        for s, d, lab in se.edges:
            by_label[lab].append((s, d))
        external[(parent, child)] = {
            lab: LabelAdjacency.from_edges(lab, pairs, n_child, n_parent)
            for lab, pairs in sorted(by_label.items())
        }
    return EncoderGraph(internal=internal, external=external)


@dataclass
class EncoderParams:
    """All learnable encoder weights, keyed the way the layers consume them."""

    configs: dict[str, SupervertexConfig]
    w_internal: dict[str, Parameter]
    w_external: dict[tuple[str, str], dict[str, Parameter]]
    w_self: dict[str, list[Parameter]]
    w_relation: dict[str, list[dict[str, Parameter]]]
    ordered: list[Parameter] = field(default_factory=list)

    @classmethod
    def initialize(
        cls,
        sg: Supergraph,
        schedule: TopoSchedule,
        configs: dict[str, SupervertexConfig],
        rng,
    ) -> "EncoderParams":
        """Xavier-initialize every weight in deterministic schedule order."""
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        for cat in sg.supervertices:
            if cat not in configs:
                raise KeyError(f"no encoder config for supervertex {cat!r}")
            configs[cat].validate(cat, has_parents=bool(sg.parents(cat)))

        params = cls(
            configs=configs,
            w_internal={},
            w_external={},
            w_self={},
            w_relation={},
        )

        def make(name: str, rows: int, cols: int) -> Parameter:
            p = Parameter(xavier_init(rows, cols, rng), name)
            params.ordered.append(p)
            return p

        for cat in schedule:
            sv = sg.supervertices[cat]
            cfg = configs[cat]
            params.w_internal[cat] = make(
                f"in/{cat}", sv.num_nodes, cfg.internal_feature_dim
            )
            for parent in sg.parents(cat):
                se = sg.superedges[(parent, cat)]
                parent_width = configs[parent].embedding_width()
                params.w_external.setdefault((parent, cat), {})
                for lab in se.labels:
                    params.w_external[(parent, cat)][lab] = make(
                        f"ex/{parent}->{cat}/{lab}", parent_width, cfg.external_dim
                    )
            params.w_self[cat] = []
            params.w_relation[cat] = []
            in_dim = cfg.combined_width(has_parents=bool(sg.parents(cat)))
            for m, out_dim in enumerate(cfg.sublayer_dims):
                params.w_self[cat].append(
                    make(f"ia/{cat}/{m}/self", in_dim, out_dim)
                )
                rel = {}
                for lab in sv.labels:
                    rel[lab] = make(f"ia/{cat}/{m}/rel/{lab}", in_dim, out_dim)
                params.w_relation[cat].append(rel)
                in_dim = out_dim
        return params

    def all_parameters(self) -> list[Parameter]:
        return list(self.ordered)


def internal_feature(tape: Tape, params: EncoderParams, cat: str) -> Tensor:
    """ReLU of the one-hot input transform; with one-hot rows this is just the
    weight matrix itself, row per node."""
    return ad.relu(tape.parameter(params.w_internal[cat]))


def external_aggregation(
    tape: Tape,
    sg: Supergraph,
    graph: EncoderGraph,
    params: EncoderParams,
    cat: str,
    embeddings: EmbeddingTable,
) -> Tensor:
    """Average the per-parent contributions (per-label neighbour means pushed
    through their label transforms) and apply the configured activation.
    Root supervertices get a zero block."""
    cfg = params.configs[cat]
    parents = sg.parents(cat)
    n = sg.supervertices[cat].num_nodes
    if not parents:
        width = cfg.external_width(has_parents=False)
        return tape.constant(np.zeros((n, width)))
    contributions = []
    for parent in parents:
        z_parent = embeddings[parent]
        adjacencies = graph.external[(parent, cat)]
        term = None
        for lab in sorted(adjacencies):
            pooled = ad.spmm_mean(adjacencies[lab], z_parent)
            mapped = ad.matmul(pooled, tape.parameter(params.w_external[(parent, cat)][lab]))
            term = mapped if term is None else ad.add(term, mapped)
        contributions.append(term)
    total = contributions[0]
    for extra in contributions[1:]:
        total = ad.add(total, extra)
    total = ad.scale(total, 1.0 / len(parents))
    if cfg.inter_activation == "relu":
        total = ad.relu(total)
    return total


def combine_features(r_ex: Tensor, r_in: Tensor, mode: str) -> Tensor:
    """Total per-node feature: column concatenation or elementwise sum."""
    if mode == "concat":
        return ad.concat_cols(r_ex, r_in)
    if mode == "sum":
        return ad.add(r_ex, r_in)
    raise ValueError(f"unknown combine mode {mode!r}")


def internal_aggregation(
    tape: Tape,
    graph: EncoderGraph,
    params: EncoderParams,
    cat: str,
    r: Tensor,
) -> Tensor:
    """Run the stacked relational sublayers: per-label neighbour means through
    label transforms, plus the self transform, ReLU after each sublayer."""
    adjacencies = graph.internal[cat]
    u = r
    for m in range(len(params.configs[cat].sublayer_dims)):
        total = ad.matmul(u, tape.parameter(params.w_self[cat][m]))
        for lab in sorted(adjacencies):
            pooled = ad.spmm_mean(adjacencies[lab], u)
            mapped = ad.matmul(pooled, tape.parameter(params.w_relation[cat][m][lab]))
            total = ad.add(total, mapped)
        u = ad.relu(total)
    return u


def encode_supergraph(
    tape: Tape,
    sg: Supergraph,
    schedule: TopoSchedule,
    graph: EncoderGraph,
    params: EncoderParams,
) -> EmbeddingTable:
    """Produce final embeddings for every supervertex in schedule order."""
    embeddings: EmbeddingTable = {}
    for cat in schedule:
        r_ex = external_aggregation(tape, sg, graph, params, cat, embeddings)
        r_in = internal_feature(tape, params, cat)
        r = combine_features(r_ex, r_in, params.configs[cat].combine_mode)
        embeddings[cat] = internal_aggregation(tape, graph, params, cat, r)
    return embeddings
