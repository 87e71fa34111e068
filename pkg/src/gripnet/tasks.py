"""Downstream task heads and training loops.

Link prediction scores node pairs inside the task supervertex with a diagonal
bilinear decoder and trains against categorized negative samples: for each
edge label, negatives are drawn uniformly from the ordered non-self pairs that
are not positives of that label, one negative per positive. Node
classification applies a linear class projection with softmax. Both tasks
train full batch with Adam for a fixed number of epochs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import autodiff as ad
from .autodiff import Parameter, Tape, Tensor
from .encoder import (
    EncoderGraph,
    EncoderParams,
    SupervertexConfig,
    build_adjacencies,
    encode_supergraph,
)
from .metrics import (
    F1Report,
    RankingReport,
    SplitSpec,
    f1_metrics,
    ranking_report,
    stratified_split,
)
from .optim import AdamState, adam_step, xavier_init
from .supergraph import Supergraph, TopoSchedule, topological_order

PROB_EPS = 1e-12
SAMPLERS = ("cns", "corrupt")


class SamplingError(RuntimeError):
    """Raised when a negative sampler cannot satisfy a request."""


@dataclass
class TrainingOptions:
    epochs: int = 100
    lr: float = 0.01
    seed: int = 0
    sampler: str = "cns"
    resample_negatives: bool = True
    eval_every: int = 0  # 0: evaluate only after the last epoch

    def __post_init__(self):
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}, got {self.sampler!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")


@dataclass
class DistMultParams:
    """One trainable diagonal per predictable edge label."""

    vectors: dict[str, Parameter]

    @classmethod
    def initialize(cls, labels, dim: int, rng) -> "DistMultParams":
        vectors = {
            lab: Parameter(xavier_init(1, dim, rng), f"distmult/{lab}")
            for lab in sorted(labels)
        }
        return cls(vectors=vectors)

    def all_parameters(self) -> list[Parameter]:
        return [self.vectors[lab] for lab in sorted(self.vectors)]


@dataclass
class ClassifierParams:
    """Linear class projection applied to task-supervertex embeddings."""

    weight: Parameter
    classes: list[str]

    @classmethod
    def initialize(cls, classes, dim: int, rng) -> "ClassifierParams":
        classes = sorted(classes)
        if len(classes) < 2:
            raise ValueError(f"need at least 2 classes, got {classes}")
        return cls(
            weight=Parameter(xavier_init(dim, len(classes), rng), "nc/weight"),
            classes=classes,
        )

    def all_parameters(self) -> list[Parameter]:
        return [self.weight]


def distmult_score(z: np.ndarray, d: np.ndarray, i: int, j: int) -> float:
    """Probability that edge (i, j) exists under diagonal vector ``d``.

    Computed as sigmoid(sum_k z_i[k] * z_j[k] * d[k]); the product order makes
    the score exactly symmetric in i and j.
    """
    d = np.asarray(d).reshape(-1)
    zi, zj = z[i], z[j]
    if zi.shape != d.shape:
        raise ValueError(f"diagonal has width {d.shape[0]}, embeddings {zi.shape[0]}")
    return float(expit(np.dot(zi * zj, d)))


def distmult_scores(
    tape: Tape, z: Tensor, diag: Parameter, pairs: np.ndarray
) -> Tensor:
    """Differentiable column of probabilities for (i, j) rows of ``pairs``."""
    zi = ad.gather_rows(z, pairs[:, 0])
    zj = ad.gather_rows(z, pairs[:, 1])
    weighted = ad.mul(ad.mul(zi, zj), tape.parameter(diag))
    return ad.sigmoid(ad.row_sums(weighted))


def lp_loss(pos_scores: Tensor, neg_scores: Tensor) -> Tensor:
    """Cross-entropy over positive and sampled negative edges (a sum, not a
    mean); probabilities are clipped to [1e-12, 1-1e-12] before the logs."""
    if pos_scores.value.size == 0 or neg_scores.value.size == 0:
        raise ValueError("lp_loss needs non-empty positive and negative scores")
    p = ad.clip(pos_scores, PROB_EPS, 1.0 - PROB_EPS)
    q = ad.clip(neg_scores, PROB_EPS, 1.0 - PROB_EPS)
    pos_term = ad.sum_all(ad.log(p))
    neg_term = ad.sum_all(ad.log(ad.add_scalar(ad.scale(q, -1.0), 1.0)))
    return ad.scale(ad.add(pos_term, neg_term), -1.0)


def nc_head(tape: Tape, z: Tensor, params: ClassifierParams) -> Tensor:
    """Class probability matrix: softmax over the linear projection rows."""
    return ad.softmax_rows(ad.matmul(z, tape.parameter(params.weight)))


def nc_loss(probs: Tensor, class_indices) -> Tensor:
    """Cross-entropy against the true class of each row; probabilities are
    floored at 1e-12 so the loss stays finite at saturation."""
    idx = np.asarray(class_indices, dtype=np.intp)
    if idx.shape[0] != probs.value.shape[0]:
        raise ValueError(
            f"{probs.value.shape[0]} probability rows but {idx.shape[0]} labels"
        )
    picked = ad.select_entries(probs, np.arange(idx.shape[0]), idx)
    return ad.scale(ad.sum_all(ad.log(ad.clip(picked, PROB_EPS, None))), -1.0)


def _pair_code(i: np.ndarray, j: np.ndarray, n: int) -> np.ndarray:
    return i * (n - 1) + np.where(j > i, j - 1, j)


def _pair_decode(code: np.ndarray, n: int) -> np.ndarray:
    i = code // (n - 1)
    r = code % (n - 1)
    j = np.where(r >= i, r + 1, r)
    return np.column_stack([i, j])


def cns_sample(
    num_nodes: int,
    label: str,
    count: int,
    rng: np.random.Generator,
    forbidden: set[tuple[int, int]],
) -> np.ndarray:
    """Uniformly draw ``count`` distinct ordered non-self pairs that are not
    positives of ``label``; raises :class:`SamplingError` when fewer exist."""
    n = num_nodes
    total = n * (n - 1)
    forb = {(i, j) for i, j in forbidden if i != j and 0 <= i < n and 0 <= j < n}
    available = total - len(forb)
    if count > available:
        raise SamplingError(
            f"label {label!r}: requested {count} negatives but only "
            f"{available} candidate pairs exist"
        )
    if total <= 2_000_000 or count * 3 > available:
        if forb:
            fi = np.fromiter((p[0] for p in forb), dtype=np.int64, count=len(forb))
            fj = np.fromiter((p[1] for p in forb), dtype=np.int64, count=len(forb))
            forb_codes = _pair_code(fi, fj, n)
        else:
            forb_codes = np.zeros(0, dtype=np.int64)
        candidates = np.setdiff1d(
            np.arange(total, dtype=np.int64), forb_codes, assume_unique=False
        )
        chosen = rng.choice(candidates, size=count, replace=False)
        return _pair_decode(np.sort(chosen), n)
    taken: set[tuple[int, int]] = set()
    out = np.empty((count, 2), dtype=np.int64)
    k = 0
    while k < count:
        i = int(rng.integers(n))
        j = int(rng.integers(n - 1))
        j = j + 1 if j >= i else j
        pair = (i, j)
        if pair in forb or pair in taken:
            continue
        taken.add(pair)
        out[k] = pair
        k += 1
    return out


def corrupt_sample(
    positives: np.ndarray,
    num_nodes: int,
    label: str,
    rng: np.random.Generator,
    forbidden: set[tuple[int, int]],
) -> np.ndarray:
    """Endpoint-corruption sampler (the conventional alternative): redirect one
    end of each positive to a uniform node, rejecting self pairs and collisions
    with same-label positives. Duplicates among the negatives are allowed."""
    out = np.empty_like(positives)
    for row, (i, j) in enumerate(positives):
        for _ in range(10_000):
            node = int(rng.integers(num_nodes))
            pair = (node, int(j)) if int(rng.integers(2)) == 0 else (int(i), node)
            if pair[0] != pair[1] and pair not in forbidden:
                out[row] = pair
                break
        else:
            raise SamplingError(f"label {label!r}: could not corrupt ({i}, {j})")
    return out


@dataclass
class EdgeSplit:
    """Frozen link-prediction instance: per-label train/test positives, the
    forbidden ordered-pair sets, and the once-drawn test negatives."""

    train_pos: dict[str, np.ndarray]
    test_pos: dict[str, np.ndarray]
    test_neg: dict[str, np.ndarray]
    forbidden: dict[str, set[tuple[int, int]]]
    message_edges: list[tuple[int, int, str]]


def build_edge_split(
    sg: Supergraph,
    predictable_labels: list[str],
    split_spec: SplitSpec,
) -> EdgeSplit:
    """Stratified 90/10-style split of the task supervertex's predictable
    edges, with message passing restricted to train positives.

    When the supervertex is symmetrized, each undirected edge is canonicalized
    to one (i <= j) pair so its two orientations never straddle the split; the
    forbidden sets still contain both orientations. Test negatives are drawn
    once from a dedicated stream of the split seed.
    """
    sv = sg.task_graph()
    canonical: dict[str, set[tuple[int, int]]] = {lab: set() for lab in predictable_labels}
    for s, d, lab in sv.edges:
        if lab in canonical:
            pair = (min(s, d), max(s, d)) if sv.symmetrized else (s, d)
            canonical[lab].add(pair)
    for lab in predictable_labels:
        if lab not in sv.labels:
            raise ValueError(
                f"predictable label {lab!r} has no edges in task supervertex "
                f"{sv.category!r}"
            )
        if len(canonical[lab]) < 2:
            raise ValueError(
                f"predictable label {lab!r} needs at least 2 edges to split, "
                f"has {len(canonical[lab])}"
            )

    items = [
        (i, j, lab) for lab in sorted(canonical) for i, j in sorted(canonical[lab])
    ]
    train_items, test_items = stratified_split(items, split_spec, key=lambda e: e[2])

    def group(edge_items) -> dict[str, np.ndarray]:
        grouped = {lab: [] for lab in predictable_labels}
        for i, j, lab in edge_items:
            grouped[lab].append((i, j))
        return {
            lab: np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
            for lab, pairs in grouped.items()
        }

    train_pos = group(train_items)
    test_pos = group(test_items)

    forbidden: dict[str, set[tuple[int, int]]] = {}
    for lab in predictable_labels:
        pairs = set()
        for i, j in canonical[lab]:
            pairs.add((i, j))
            if sv.symmetrized:
                pairs.add((j, i))
        forbidden[lab] = pairs

    neg_rng = np.random.default_rng(np.random.SeedSequence(split_spec.seed, spawn_key=(1,)))
    test_neg = {
        lab: cns_sample(sv.num_nodes, lab, len(test_pos[lab]), neg_rng, forbidden[lab])
        for lab in sorted(predictable_labels)
    }

    message_edges = [
        (s, d, lab) for s, d, lab in sv.edges if lab not in canonical
    ]
    for lab in sorted(train_pos):
        for i, j in train_pos[lab]:
            message_edges.append((int(i), int(j), lab))
            if sv.symmetrized:
                message_edges.append((int(j), int(i), lab))

    return EdgeSplit(
        train_pos=train_pos,
        test_pos=test_pos,
        test_neg=test_neg,
        forbidden=forbidden,
        message_edges=sorted(set(message_edges)),
    )


@dataclass
class LinkPredictionRun:
    encoder_params: EncoderParams
    decoder: DistMultParams
    split: EdgeSplit
    graph: EncoderGraph
    schedule: TopoSchedule
    history: list[dict] = field(default_factory=list)
    report: RankingReport | None = None


def _score_pairs_plain(z: np.ndarray, d: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    if pairs.size == 0:
        return np.zeros(0)
    prod = z[pairs[:, 0]] * z[pairs[:, 1]]
    return expit(prod @ d.reshape(-1))


def evaluate_link_prediction(
    sg: Supergraph,
    schedule: TopoSchedule,
    graph: EncoderGraph,
    encoder_params: EncoderParams,
    decoder: DistMultParams,
    split: EdgeSplit,
) -> RankingReport:
    """Rank test positives against the frozen test negatives, per label."""
    tape = Tape()
    z = encode_supergraph(tape, sg, schedule, graph, encoder_params)
    z_task = z[sg.task_supervertex].value
    per_label = {}
    for lab in sorted(split.test_pos):
        d = decoder.vectors[lab].value
        pos = _score_pairs_plain(z_task, d, split.test_pos[lab])
        neg = _score_pairs_plain(z_task, d, split.test_neg[lab])
        scores = np.concatenate([pos, neg])
        labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        per_label[lab] = (scores, labels)
    return ranking_report(per_label)


def train_link_prediction(
    sg: Supergraph,
    configs: dict[str, SupervertexConfig],
    predictable_labels: list[str] | None,
    options: TrainingOptions,
    split_spec: SplitSpec,
) -> LinkPredictionRun:
    """Full-batch training of encoder plus diagonal bilinear decoder.

    Each epoch encodes the supergraph, scores the train positives and freshly
    sampled negatives of every predictable label, and takes one Adam step on
    the summed cross-entropy. Per-epoch losses land in ``history``; test
    metrics are computed at ``eval_every`` epochs (if set) and always after
    the last epoch.
    """
    schedule = topological_order(sg)
    sv = sg.task_graph()
    if predictable_labels is None:
        predictable_labels = sv.labels
    predictable_labels = sorted(predictable_labels)

    split = build_edge_split(sg, predictable_labels, split_spec)
    graph = build_adjacencies(
        sg, internal_edges_override={sg.task_supervertex: split.message_edges}
    )

    init_rng = np.random.default_rng(np.random.SeedSequence(options.seed, spawn_key=(0,)))
    encoder_params = EncoderParams.initialize(sg, schedule, configs, init_rng)
    decoder = DistMultParams.initialize(
        predictable_labels, configs[sg.task_supervertex].embedding_width(), init_rng
    )
    params = encoder_params.all_parameters() + decoder.all_parameters()
    state = AdamState(params, lr=options.lr)
    sampler_rng = np.random.default_rng(
        np.random.SeedSequence(options.seed, spawn_key=(2,))
    )

    run = LinkPredictionRun(
        encoder_params=encoder_params,
        decoder=decoder,
        split=split,
        graph=graph,
        schedule=schedule,
    )

    train_neg: dict[str, np.ndarray] = {}
    for epoch in range(options.epochs):
        if options.resample_negatives or not train_neg:
            for lab in predictable_labels:
                pos = split.train_pos[lab]
                if options.sampler == "cns":
                    train_neg[lab] = cns_sample(
                        sv.num_nodes, lab, len(pos), sampler_rng, split.forbidden[lab]
                    )
                else:
                    train_neg[lab] = corrupt_sample(
                        pos, sv.num_nodes, lab, sampler_rng, split.forbidden[lab]
                    )

        tape = Tape()
        z = encode_supergraph(tape, sg, schedule, graph, encoder_params)
        z_task = z[sg.task_supervertex]
        loss = None
        for lab in predictable_labels:
            pos_scores = distmult_scores(tape, z_task, decoder.vectors[lab], split.train_pos[lab])
            neg_scores = distmult_scores(tape, z_task, decoder.vectors[lab], train_neg[lab])
            label_loss = lp_loss(pos_scores, neg_scores)
            loss = label_loss if loss is None else ad.add(loss, label_loss)
        tape.backward(loss)
        adam_step(params, state)

        entry = {"epoch": epoch, "loss": float(loss.value[0, 0])}
        if options.eval_every and (epoch + 1) % options.eval_every == 0:
            interim = evaluate_link_prediction(
                sg, schedule, graph, encoder_params, decoder, split
            )
            entry["test_auroc"] = interim.macro_auroc
            entry["test_auprc"] = interim.macro_auprc
            entry["test_ap50"] = interim.macro_ap50
        run.history.append(entry)

    run.report = evaluate_link_prediction(
        sg, schedule, graph, encoder_params, decoder, split
    )
    return run


@dataclass
class NodeLabels:
    """Class assignment for (a subset of) the task supervertex's nodes."""

    node_indices: np.ndarray  # local indices, ascending
    class_indices: np.ndarray
    classes: list[str]

    @classmethod
    def from_mapping(cls, sv, labels: dict[str, str], graph_node_ids: list[str]) -> "NodeLabels":
        """Map original node-id -> class strings onto local indices of ``sv``."""
        classes = sorted(set(labels.values()))
        class_index = {c: k for k, c in enumerate(classes)}
        global_of_id = {nid: g for g, nid in enumerate(graph_node_ids)}
        rows = []
        for nid in sorted(labels):
            if nid not in global_of_id:
                raise KeyError(f"labeled node {nid!r} does not exist in the graph")
            g = global_of_id[nid]
            if g not in sv.local_of:
                raise KeyError(
                    f"labeled node {nid!r} is not in task supervertex {sv.category!r}"
                )
            rows.append((sv.local_of[g], class_index[labels[nid]]))
        rows.sort()
        idx = np.array([r[0] for r in rows], dtype=np.int64)
        cls_idx = np.array([r[1] for r in rows], dtype=np.int64)
        return cls(node_indices=idx, class_indices=cls_idx, classes=classes)


@dataclass
class NodeClassificationRun:
    encoder_params: EncoderParams
    decoder: ClassifierParams
    labels: NodeLabels
    train_rows: np.ndarray
    test_rows: np.ndarray
    graph: EncoderGraph
    schedule: TopoSchedule
    history: list[dict] = field(default_factory=list)
    report: F1Report | None = None


def evaluate_node_classification(
    sg: Supergraph,
    schedule: TopoSchedule,
    graph: EncoderGraph,
    encoder_params: EncoderParams,
    decoder: ClassifierParams,
    labels: NodeLabels,
    rows: np.ndarray,
) -> F1Report:
    """Argmax-class F1 on the given rows of the labeled node table."""
    tape = Tape()
    z = encode_supergraph(tape, sg, schedule, graph, encoder_params)
    z_task = z[sg.task_supervertex].value
    logits = z_task[labels.node_indices[rows]] @ decoder.weight.value
    predicted = [decoder.classes[k] for k in logits.argmax(axis=1)]
    true = [decoder.classes[k] for k in labels.class_indices[rows]]
    return f1_metrics(predicted, true, classes=decoder.classes)


def train_node_classification(
    sg: Supergraph,
    configs: dict[str, SupervertexConfig],
    labels: NodeLabels,
    options: TrainingOptions,
    split_spec: SplitSpec,
) -> NodeClassificationRun:
    """Full-batch training of encoder plus softmax classifier over the labeled
    nodes of the task supervertex, with a class-stratified train/test split."""
    schedule = topological_order(sg)
    graph = build_adjacencies(sg)

    row_ids = list(range(len(labels.node_indices)))
    train_rows_list, test_rows_list = stratified_split(
        row_ids, split_spec, key=lambda r: int(labels.class_indices[r])
    )
    train_rows = np.array(sorted(train_rows_list), dtype=np.int64)
    test_rows = np.array(sorted(test_rows_list), dtype=np.int64)

    init_rng = np.random.default_rng(np.random.SeedSequence(options.seed, spawn_key=(0,)))
    encoder_params = EncoderParams.initialize(sg, schedule, configs, init_rng)
    decoder = ClassifierParams.initialize(
        labels.classes, configs[sg.task_supervertex].embedding_width(), init_rng
    )
    params = encoder_params.all_parameters() + decoder.all_parameters()
    state = AdamState(params, lr=options.lr)

    run = NodeClassificationRun(
        encoder_params=encoder_params,
        decoder=decoder,
        labels=labels,
        train_rows=train_rows,
        test_rows=test_rows,
        graph=graph,
        schedule=schedule,
    )

    train_locals = labels.node_indices[train_rows]
    train_classes = labels.class_indices[train_rows]
    for epoch in range(options.epochs):
        tape = Tape()
        z = encode_supergraph(tape, sg, schedule, graph, encoder_params)
        z_train = ad.gather_rows(z[sg.task_supervertex], train_locals)
        probs = nc_head(tape, z_train, decoder)
        loss = nc_loss(probs, train_classes)
        tape.backward(loss)
        adam_step(params, state)

        entry = {"epoch": epoch, "loss": float(loss.value[0, 0])}
        if options.eval_every and (epoch + 1) % options.eval_every == 0:
            interim = evaluate_node_classification(
                sg, schedule, graph, encoder_params, decoder, labels, test_rows
            )
            entry["test_micro_f1"] = interim.micro_f1
            entry["test_macro_f1"] = interim.macro_f1
        run.history.append(entry)

    run.report = evaluate_node_classification(
        sg, schedule, graph, encoder_params, decoder, labels, test_rows
    )
    return run
