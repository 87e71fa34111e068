"""Run configuration: a strict JSON schema with full defaulting.

Every key except the dataset paths has a default; unknown keys are rejected
with the offending name. Relative dataset paths are resolved against the
config file's directory, and parsing canonicalizes the document so that
parse -> serialize -> parse is an identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .encoder import ACTIVATIONS, COMBINE_MODES, SupervertexConfig
from .tasks import SAMPLERS

TASK_TYPES = ("lp", "nc")


class ConfigError(ValueError):
    """Raised when a config document violates the schema."""


def _require_keys(section: dict, allowed: dict, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be a JSON object")
    for key in section:
        if key not in allowed:
            raise ConfigError(
                f"unknown key {key!r} in {where}; allowed keys: {sorted(allowed)}"
            )


def _typed(section: dict, key: str, types, default, where: str):
    value = section.get(key, default)
    if value is None:
        return None
    allowed = types if isinstance(types, tuple) else (types,)
    if isinstance(value, bool) and bool not in allowed:
        raise ConfigError(f"{where}.{key} has the wrong type: {value!r}")
    if not isinstance(value, types):
        raise ConfigError(f"{where}.{key} has the wrong type: {value!r}")
    return value


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 100
    lr: float = 0.01
    seed: int = 0
    sampler: str = "cns"
    resample_negatives: bool = True
    eval_every: int = 0

    def to_json_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "lr": self.lr,
            "seed": self.seed,
            "sampler": self.sampler,
            "resample_negatives": self.resample_negatives,
            "eval_every": self.eval_every,
        }


@dataclass(frozen=True)
class SplitConfig:
    fraction: float = 0.9
    seed: int = 0

    def to_json_dict(self) -> dict:
        return {"fraction": self.fraction, "seed": self.seed}


@dataclass(frozen=True)
class RunConfig:
    nodes_path: str
    edges_path: str
    labels_path: str | None
    partition: dict[str, str]
    directions: tuple[tuple[str, str], ...]
    task: str
    symmetrize: bool
    encoder: dict[str, SupervertexConfig]
    task_type: str
    predictable_labels: tuple[str, ...] | None
    training: TrainingConfig
    split: SplitConfig
    out_dir: str | None = None

    @property
    def categories(self) -> list[str]:
        return sorted(set(self.partition.values()))

    def to_json_dict(self, include_out_dir: bool = True) -> dict:
        doc = {
            "dataset": {
                "nodes": self.nodes_path,
                "edges": self.edges_path,
                "labels": self.labels_path,
            },
            "partition": dict(sorted(self.partition.items())),
            "supergraph": {
                "directions": [list(d) for d in self.directions],
                "task": self.task,
                "symmetrize": self.symmetrize,
            },
            "encoder": {
                cat: {
                    "internal_feature_dim": cfg.internal_feature_dim,
                    "external_dim": cfg.external_dim,
                    "combine_mode": cfg.combine_mode,
                    "inter_activation": cfg.inter_activation,
                    "sublayer_dims": list(cfg.sublayer_dims),
                }
                for cat, cfg in sorted(self.encoder.items())
            },
            "task": {
                "type": self.task_type,
                "predictable_labels": (
                    list(self.predictable_labels)
                    if self.predictable_labels is not None
                    else None
                ),
            },
            "training": self.training.to_json_dict(),
            "split": self.split.to_json_dict(),
        }
        if include_out_dir:
            doc["out_dir"] = self.out_dir
        return doc


def _parse_supervertex_config(section: dict, where: str) -> SupervertexConfig:
    allowed = {
        "internal_feature_dim": int,
        "external_dim": int,
        "combine_mode": str,
        "inter_activation": str,
        "sublayer_dims": list,
    }
    _require_keys(section, allowed, where)
    defaults = SupervertexConfig()
    combine = _typed(section, "combine_mode", str, defaults.combine_mode, where)
    if combine not in COMBINE_MODES:
        raise ConfigError(f"{where}.combine_mode must be one of {COMBINE_MODES}")
    activation = _typed(
        section, "inter_activation", str, defaults.inter_activation, where
    )
    if activation not in ACTIVATIONS:
        raise ConfigError(f"{where}.inter_activation must be one of {ACTIVATIONS}")
    dims = section.get("sublayer_dims", list(defaults.sublayer_dims))
    if (
        not isinstance(dims, list)
        or not dims
        or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1 for d in dims)
    ):
        raise ConfigError(f"{where}.sublayer_dims must be a non-empty list of ints >= 1")
    internal = _typed(
        section, "internal_feature_dim", int, defaults.internal_feature_dim, where
    )
    external = _typed(section, "external_dim", int, defaults.external_dim, where)
    if internal < 1 or external < 0:
        raise ConfigError(f"{where}: dimensions out of range")
    return SupervertexConfig(
        internal_feature_dim=internal,
        external_dim=external,
        combine_mode=combine,
        inter_activation=activation,
        sublayer_dims=tuple(dims),
    )


def config_from_dict(doc: dict, base_dir: Path | str = ".") -> RunConfig:
    """Validate and fully default a config document."""
    base_dir = Path(base_dir)
    _require_keys(
        doc,
        {
            "dataset": dict,
            "partition": (dict, str),
            "supergraph": dict,
            "encoder": dict,
            "task": dict,
            "training": dict,
            "split": dict,
            "out_dir": str,
        },
        "config",
    )

    dataset = doc.get("dataset")
    if not isinstance(dataset, dict):
        raise ConfigError("config.dataset is required and must be an object")
    _require_keys(dataset, {"nodes": str, "edges": str, "labels": str}, "dataset")
    for key in ("nodes", "edges"):
        if not isinstance(dataset.get(key), str):
            raise ConfigError(f"dataset.{key} is required (a file path)")

    def resolve(p):
        if p is None:
            return None
        path = Path(p)
        return str(path if path.is_absolute() else (base_dir / path).resolve())

    nodes_path = resolve(dataset["nodes"])
    edges_path = resolve(dataset["edges"])
    labels_path = resolve(_typed(dataset, "labels", str, None, "dataset"))

    partition_doc = doc.get("partition")
    if isinstance(partition_doc, str):
        with open(resolve(partition_doc), encoding="utf-8") as fh:
            partition_doc = json.load(fh)
    if not isinstance(partition_doc, dict) or not partition_doc:
        raise ConfigError("partition must be a non-empty object (node type -> category)")
    for k, v in partition_doc.items():
        if not isinstance(k, str) or not isinstance(v, str):
            raise ConfigError("partition entries must map strings to strings")
    partition = dict(partition_doc)
    categories = sorted(set(partition.values()))

    sg_doc = doc.get("supergraph", {})
    _require_keys(
        sg_doc, {"directions": list, "task": str, "symmetrize": bool}, "supergraph"
    )
    raw_directions = sg_doc.get("directions", [])
    if not isinstance(raw_directions, list):
        raise ConfigError("supergraph.directions must be a list of [parent, child] pairs")
    directions = []
    for entry in raw_directions:
        if (
            not isinstance(entry, list)
            or len(entry) != 2
            or not all(isinstance(x, str) for x in entry)
        ):
            raise ConfigError(
                f"supergraph.directions entries must be [parent, child] pairs, got {entry!r}"
            )
        for cat in entry:
            if cat not in categories:
                raise ConfigError(
                    f"supergraph.directions references unknown category {cat!r}"
                )
        directions.append((entry[0], entry[1]))
    task = sg_doc.get("task")
    if task is None:
        if len(categories) != 1:
            raise ConfigError(
                "supergraph.task is required when the partition has several categories"
            )
        task = categories[0]
    if task not in categories:
        raise ConfigError(f"supergraph.task references unknown category {task!r}")
    symmetrize = sg_doc.get("symmetrize", True)
    if not isinstance(symmetrize, bool):
        raise ConfigError("supergraph.symmetrize must be a boolean")

    encoder_doc = doc.get("encoder", {})
    if not isinstance(encoder_doc, dict):
        raise ConfigError("encoder must be an object keyed by category")
    for cat in encoder_doc:
        if cat not in categories:
            raise ConfigError(f"encoder section references unknown category {cat!r}")
    encoder = {
        cat: _parse_supervertex_config(encoder_doc.get(cat, {}), f"encoder.{cat}")
        for cat in categories
    }

    task_doc = doc.get("task", {})
    _require_keys(task_doc, {"type": str, "predictable_labels": list}, "task")
    task_type = task_doc.get("type", "lp")
    if task_type not in TASK_TYPES:
        raise ConfigError(f"task.type must be one of {TASK_TYPES}, got {task_type!r}")
    predictable = task_doc.get("predictable_labels")
    if predictable is not None:
        if not isinstance(predictable, list) or not all(
            isinstance(x, str) for x in predictable
        ):
            raise ConfigError("task.predictable_labels must be a list of label strings")
        predictable = tuple(sorted(set(predictable)))
    if task_type == "nc" and labels_path is None:
        raise ConfigError("task.type 'nc' requires dataset.labels")

    training_doc = doc.get("training", {})
    _require_keys(
        training_doc,
        {
            "epochs": int,
            "lr": float,
            "seed": int,
            "sampler": str,
            "resample_negatives": bool,
            "eval_every": int,
        },
        "training",
    )
    sampler = training_doc.get("sampler", "cns")
    if sampler not in SAMPLERS:
        raise ConfigError(f"training.sampler must be one of {SAMPLERS}")
    epochs = training_doc.get("epochs", 100)
    if not isinstance(epochs, int) or isinstance(epochs, bool) or epochs < 0:
        raise ConfigError("training.epochs must be a non-negative integer")
    lr = training_doc.get("lr", 0.01)
    if not isinstance(lr, (int, float)) or isinstance(lr, bool) or lr <= 0:
        raise ConfigError("training.lr must be a positive number")
    seed = training_doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("training.seed must be a non-negative integer")
    resample = training_doc.get("resample_negatives", True)
    if not isinstance(resample, bool):
        raise ConfigError("training.resample_negatives must be a boolean")
    eval_every = training_doc.get("eval_every", 0)
    if not isinstance(eval_every, int) or isinstance(eval_every, bool) or eval_every < 0:
        raise ConfigError("training.eval_every must be a non-negative integer")
    training = TrainingConfig(
        epochs=epochs,
        lr=float(lr),
        seed=seed,
        sampler=sampler,
        resample_negatives=resample,
        eval_every=eval_every,
    )

    split_doc = doc.get("split", {})
    _require_keys(split_doc, {"fraction": float, "seed": int}, "split")
    fraction = split_doc.get("fraction", 0.9)
    if (
        not isinstance(fraction, (int, float))
        or isinstance(fraction, bool)
        or not 0.0 < float(fraction) < 1.0
    ):
        raise ConfigError("split.fraction must be a number in (0, 1)")
    split_seed = split_doc.get("seed", 0)
    if not isinstance(split_seed, int) or isinstance(split_seed, bool) or split_seed < 0:
        raise ConfigError("split.seed must be a non-negative integer")
    split = SplitConfig(fraction=float(fraction), seed=split_seed)

    out_dir = doc.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir must be a path string")

    return RunConfig(
        nodes_path=nodes_path,
        edges_path=edges_path,
        labels_path=labels_path,
        partition=partition,
        directions=tuple(directions),
        task=task,
        symmetrize=symmetrize,
        encoder=encoder,
        task_type=task_type,
        predictable_labels=predictable,
        training=training,
        split=split,
        out_dir=out_dir,
    )


def parse_config(path: str | Path) -> RunConfig:
    """Load, validate, and fully default a run config JSON file."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(doc, base_dir=path.parent)


def dump_json(doc: dict) -> str:
    """Canonical JSON text: sorted keys, two-space indent, final newline."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(dump_json(config.to_json_dict()), encoding="utf-8")


def list_presets() -> list[str]:
    files = resources.files("gripnet.presets")
    return sorted(
        p.name.removesuffix(".json") for p in files.iterdir() if p.name.endswith(".json")
    )


def load_preset(name: str) -> dict:
    """Shipped encoder dimension recipe keyed by supervertex role."""
    files = resources.files("gripnet.presets")
    try:
        text = (files / f"{name}.json").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {list_presets()}"
        ) from None
    return json.loads(text)


def apply_preset(preset: dict, role_to_category: dict[str, str]) -> dict:
    """Instantiate a preset's encoder section for concrete category names."""
    encoder = {}
    for role, category in role_to_category.items():
        if role not in preset["encoder"]:
            raise ConfigError(
                f"preset has no role {role!r}; roles: {sorted(preset['encoder'])}"
            )
        encoder[category] = dict(preset["encoder"][role])
    return encoder
