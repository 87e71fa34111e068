"""Versioned JSON checkpoints and embedding export.

A checkpoint stores the canonical run config (without the output directory),
the task kind, the decoder class list (for classification), and every
parameter as name + shape + row-major values. JSON float round-tripping is
exact, and serialization is canonical (sorted keys) so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .autodiff import Parameter
from .config import ConfigError, RunConfig, config_from_dict, dump_json

CHECKPOINT_FORMAT = "gripnet-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Raised for missing, malformed, or mismatched checkpoints."""


def checkpoint_document(
    config: RunConfig, params: list[Parameter], classes: list[str] | None = None
) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "task": config.task_type,
        "classes": classes,
        "config": config.to_json_dict(include_out_dir=False),
        "params": [
            {
                "name": p.name,
                "shape": list(p.value.shape),
                "data": [float(v) for v in p.value.reshape(-1)],
            }
            for p in params
        ],
    }


def save_checkpoint(
    path: str | Path,
    config: RunConfig,
    params: list[Parameter],
    classes: list[str] | None = None,
) -> None:
    doc = checkpoint_document(config, params, classes)
    Path(path).write_text(dump_json(doc), encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[RunConfig, dict[str, np.ndarray], list[str] | None]:
    """Read a checkpoint back: (config, name -> value matrix, classes)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {doc.get('version')!r}"
        )
    try:
        config = config_from_dict(doc["config"], base_dir=".")
    except (KeyError, ConfigError) as exc:
        raise CheckpointError(f"{path}: bad embedded config: {exc}") from exc
    values: dict[str, np.ndarray] = {}
    for entry in doc.get("params", []):
        name, shape, data = entry["name"], entry["shape"], entry["data"]
        arr = np.array(data, dtype=np.float64).reshape(shape)
        values[name] = arr
    return config, values, doc.get("classes")


def restore_parameters(params: list[Parameter], values: dict[str, np.ndarray]) -> None:
    """Copy checkpoint values into freshly built parameters by name."""
    missing = [p.name for p in params if p.name not in values]
    if missing:
        raise CheckpointError(f"checkpoint lacks parameters: {missing[:5]}")
    extra = sorted(set(values) - {p.name for p in params})
    if extra:
        raise CheckpointError(f"checkpoint has unexpected parameters: {extra[:5]}")
    for p in params:
        stored = values[p.name]
        if stored.shape != p.value.shape:
            raise CheckpointError(
                f"shape mismatch for {p.name!r}: config builds {p.value.shape}, "
                f"checkpoint holds {stored.shape}"
            )
        p.value[:] = stored


def export_embeddings(
    out_dir: str | Path,
    embeddings: dict[str, np.ndarray],
    node_ids: dict[str, list[str]],
) -> dict[str, str]:
    """Write one TSV per supervertex: ``node_id<TAB>v1..vd`` with full
    round-trip precision (shortest repr)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for cat in sorted(embeddings):
        z = embeddings[cat]
        ids = node_ids[cat]
        if len(ids) != z.shape[0]:
            raise ValueError(
                f"{cat}: {len(ids)} node ids for {z.shape[0]} embedding rows"
            )
        path = out / f"embeddings_{cat}.tsv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for nid, row in zip(ids, z):
                fh.write(nid + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")
        written[cat] = str(path)
    return written


def read_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            ids.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    return ids, np.array(rows, dtype=np.float64)
