"""Config-driven orchestration: assemble a run from a config, train, evaluate,
export, and validate, writing machine-readable artifacts to the output
directory (checkpoint.json, history.csv, report.json, node_map.json,
embeddings_*.tsv). All outputs are canonical so identical configs and seeds
reproduce them byte for byte.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Tape
from .checkpoint import (
    CheckpointError,
    export_embeddings,
    load_checkpoint,
    restore_parameters,
    save_checkpoint,
)
from .config import RunConfig, dump_json
from .encoder import EncoderParams, build_adjacencies, encode_supergraph
from .graph import HeteroGraph, CategoricalPartition, load_edge_list, load_node_labels
from .metrics import SplitSpec, stratified_split
from .supergraph import Supergraph, TopoSchedule, build_supergraph, topological_order
from .tasks import (
    ClassifierParams,
    DistMultParams,
    NodeLabels,
    TrainingOptions,
    build_edge_split,
    evaluate_link_prediction,
    evaluate_node_classification,
    train_link_prediction,
    train_node_classification,
)


@dataclass
class Assembled:
    """Everything a run needs, built from a config."""

    config: RunConfig
    graph: HeteroGraph
    partition: CategoricalPartition
    supergraph: Supergraph
    schedule: TopoSchedule
    node_labels: NodeLabels | None
    dropped_cross_edges: int


def assemble(config: RunConfig) -> Assembled:
    graph = load_edge_list(config.nodes_path, config.edges_path)
    partition = CategoricalPartition(dict(config.partition))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sg = build_supergraph(
            graph,
            partition,
            list(config.directions),
            config.task,
            symmetrize=config.symmetrize,
        )
    for w in caught:
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    schedule = topological_order(sg)
    node_labels = None
    if config.task_type == "nc":
        raw = load_node_labels(config.labels_path)
        node_labels = NodeLabels.from_mapping(sg.task_graph(), raw, graph.node_ids)
    return Assembled(
        config=config,
        graph=graph,
        partition=partition,
        supergraph=sg,
        schedule=schedule,
        node_labels=node_labels,
        dropped_cross_edges=sg.dropped_cross_edges,
    )


def training_options(config: RunConfig, seed_override: int | None = None) -> TrainingOptions:
    t = config.training
    return TrainingOptions(
        epochs=t.epochs,
        lr=t.lr,
        seed=t.seed if seed_override is None else seed_override,
        sampler=t.sampler,
        resample_negatives=t.resample_negatives,
        eval_every=t.eval_every,
    )


def split_spec(config: RunConfig) -> SplitSpec:
    return SplitSpec(train_fraction=config.split.fraction, seed=config.split.seed)


def _write_history(path: Path, history: list[dict], metric_keys: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["epoch", "loss", *metric_keys]) + "\n")
        for entry in history:
            row = [str(entry["epoch"]), repr(entry["loss"])]
            for key in metric_keys:
                row.append(repr(entry[key]) if key in entry else "")
            fh.write(",".join(row) + "\n")


def _write_node_map(path: Path, sg: Supergraph, graph: HeteroGraph) -> None:
    mapping = {
        cat: [graph.node_ids[g] for g in sv.node_ids]
        for cat, sv in sorted(sg.supervertices.items())
    }
    path.write_text(dump_json(mapping), encoding="utf-8")


def run_training(
    config: RunConfig,
    out_dir: str | Path,
    seed_override: int | None = None,
) -> dict[str, str]:
    """Train per config and write checkpoint, history, report, and node map."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    assembled = assemble(config)
    options = training_options(config, seed_override)
    spec = split_spec(config)

    if config.task_type == "lp":
        run = train_link_prediction(
            assembled.supergraph,
            dict(config.encoder),
            list(config.predictable_labels) if config.predictable_labels else None,
            options,
            spec,
        )
        params = run.encoder_params.all_parameters() + run.decoder.all_parameters()
        classes = None
        metric_keys = ["test_auroc", "test_auprc", "test_ap50"]
    else:
        run = train_node_classification(
            assembled.supergraph,
            dict(config.encoder),
            assembled.node_labels,
            options,
            spec,
        )
        params = run.encoder_params.all_parameters() + run.decoder.all_parameters()
        classes = run.decoder.classes
        metric_keys = ["test_micro_f1", "test_macro_f1"]

    paths = {
        "checkpoint": out / "checkpoint.json",
        "history": out / "history.csv",
        "report": out / "report.json",
        "node_map": out / "node_map.json",
    }
    save_checkpoint(paths["checkpoint"], config, params, classes)
    _write_history(paths["history"], run.history, metric_keys)
    paths["report"].write_text(dump_json(run.report.to_json_dict()), encoding="utf-8")
    _write_node_map(paths["node_map"], assembled.supergraph, assembled.graph)
    return {k: str(p) for k, p in paths.items()}


def _rebuild_model(config: RunConfig, assembled: Assembled, classes=None):
    """Parameter skeleton matching the config, for checkpoint restoration."""
    rng = np.random.default_rng(
        np.random.SeedSequence(config.training.seed, spawn_key=(0,))
    )
    encoder_params = EncoderParams.initialize(
        assembled.supergraph, assembled.schedule, dict(config.encoder), rng
    )
    width = config.encoder[config.task].embedding_width()
    if config.task_type == "lp":
        labels = (
            list(config.predictable_labels)
            if config.predictable_labels
            else assembled.supergraph.task_graph().labels
        )
        decoder = DistMultParams.initialize(labels, width, rng)
    else:
        if classes is None:
            classes = assembled.node_labels.classes
        decoder = ClassifierParams.initialize(classes, width, rng)
    return encoder_params, decoder


def run_eval(
    config: RunConfig, checkpoint_path: str | Path, out_dir: str | Path
) -> dict[str, str]:
    """Recompute test metrics for a trained checkpoint and write report.json.

    The split and frozen test negatives are rebuilt deterministically from the
    config seeds, so a report after a restart matches the training-time one.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, values, classes = load_checkpoint(checkpoint_path)
    assembled = assemble(config)
    encoder_params, decoder = _rebuild_model(config, assembled, classes)
    restore_parameters(
        encoder_params.all_parameters() + decoder.all_parameters(), values
    )

    if config.task_type == "lp":
        labels = (
            list(config.predictable_labels)
            if config.predictable_labels
            else assembled.supergraph.task_graph().labels
        )
        split = build_edge_split(assembled.supergraph, sorted(labels), split_spec(config))
        graph_adj = build_adjacencies(
            assembled.supergraph,
            internal_edges_override={config.task: split.message_edges},
        )
        report = evaluate_link_prediction(
            assembled.supergraph,
            assembled.schedule,
            graph_adj,
            encoder_params,
            decoder,
            split,
        )
    else:
        node_labels = assembled.node_labels
        if classes is not None and list(classes) != node_labels.classes:
            raise CheckpointError(
                f"checkpoint classes {classes} do not match the labels file "
                f"classes {node_labels.classes}"
            )
        row_ids = list(range(len(node_labels.node_indices)))
        _, test_rows_list = stratified_split(
            row_ids, split_spec(config), key=lambda r: int(node_labels.class_indices[r])
        )
        test_rows = np.array(sorted(test_rows_list), dtype=np.int64)
        report = evaluate_node_classification(
            assembled.supergraph,
            assembled.schedule,
            build_adjacencies(assembled.supergraph),
            encoder_params,
            decoder,
            node_labels,
            test_rows,
        )

    report_path = out / "report.json"
    report_path.write_text(dump_json(report.to_json_dict()), encoding="utf-8")
    return {"report": str(report_path)}


def run_export(checkpoint_path: str | Path, out_dir: str | Path) -> dict[str, str]:
    """Re-encode with stored parameters over the full graph and export one
    embedding TSV per supervertex (original node ids, full float precision)."""
    config, values, classes = load_checkpoint(checkpoint_path)
    assembled = assemble(config)
    encoder_params, decoder = _rebuild_model(config, assembled, classes)
    restore_parameters(
        encoder_params.all_parameters() + decoder.all_parameters(), values
    )
    tape = Tape()
    z = encode_supergraph(
        tape,
        assembled.supergraph,
        assembled.schedule,
        build_adjacencies(assembled.supergraph),
        encoder_params,
    )
    embeddings = {cat: z[cat].value for cat in z}
    node_ids = {
        cat: [assembled.graph.node_ids[g] for g in sv.node_ids]
        for cat, sv in assembled.supergraph.supervertices.items()
    }
    return export_embeddings(out_dir, embeddings, node_ids)


def run_check(config: RunConfig) -> str:
    """Validate the supergraph declaration and summarize its structure."""
    assembled = assemble(config)
    sg = assembled.supergraph
    order = assembled.schedule.order
    lines = [
        f"valid: {len(sg.supervertices)} supervertices, "
        f"{len(sg.superedges)} superedges, order [{', '.join(order)}]",
        f"task supervertex: {sg.task_supervertex}",
    ]
    counts = assembled.graph.counts()
    lines.append(
        f"graph: {counts['nodes']} nodes, {counts['edges']} edges, "
        f"{counts['node_types']} node types, {counts['edge_labels']} edge labels"
    )
    for cat in order:
        sv = sg.supervertices[cat]
        label_text = ", ".join(sv.labels) if sv.labels else "none"
        lines.append(
            f"supervertex {cat}: {sv.num_nodes} nodes, {len(sv.edges)} internal "
            f"edges{' (symmetrized)' if sv.symmetrized else ''}, labels: {label_text}"
        )
    for (parent, child), se in sorted(sg.superedges.items()):
        lines.append(
            f"superedge {parent} -> {child}: {se.num_edges} edges, "
            f"labels: {', '.join(se.labels)}"
        )
    if assembled.dropped_cross_edges:
        lines.append(
            f"warning: {assembled.dropped_cross_edges} cross-category edge(s) "
            "not covered by any declared direction were dropped"
        )
    return "\n".join(lines)
