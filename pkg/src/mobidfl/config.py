"""Experiment configuration, loaded from and saved to a single JSON document."""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .learning import KINDS
from .mobility import Pattern

DATASET_KINDS = ("synthetic-blobs", "idx-files")


@dataclass(frozen=True)
class TrainerConfig:
    kind: str = "logistic"
    lr: float = 0.3
    momentum: float = 0.9
    weight_decay: float = 5e-4
    batch_size: int | None = None  # None -> full batch
    hidden: int = 32
    shared_init: bool = True


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "synthetic-blobs"
    # synthetic-blobs
    num_classes: int = 10
    per_class: int = 200
    test_per_class: int = 100
    dim: int = 20
    spread: float = 1.0
    separation: float = 4.0
    # idx-files
    train_images: str | None = None
    train_labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None
    max_train: int | None = None
    max_test: int | None = None


@dataclass(frozen=True)
class SimulationConfig:
    grid_size: int = 18
    num_clients: int = 20
    num_mobile: int = 5
    comm_radius: float = 3.0
    move_radius: float = math.inf
    pattern: str = "dam"
    alpha: float = 0.05
    rounds: int = 100
    eval_every: int = 10
    monte_carlo_runs: int = 1
    master_seed: int = 0
    workers: int = 1
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pattern", Pattern.parse(self.pattern).value)
        object.__setattr__(self, "move_radius", parse_radius(self.move_radius))

    @property
    def mobility(self) -> Pattern:
        return Pattern(self.pattern)

    def replace(self, **changes: Any) -> "SimulationConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "SimulationConfig":
        problems = []
        if self.grid_size < 1:
            problems.append(f"grid_size must be >= 1 (got {self.grid_size})")
        if self.num_clients < 1:
            problems.append(f"num_clients must be >= 1 (got {self.num_clients})")
        if not 0 <= self.num_mobile <= self.num_clients:
            problems.append(f"num_mobile must lie in [0, num_clients] (got {self.num_mobile})")
        if not self.comm_radius > 0:
            problems.append(f"comm_radius must be positive (got {self.comm_radius})")
        if not self.move_radius >= 0:
            problems.append(f"move_radius must be >= 0 or 'inf' (got {self.move_radius})")
        if not self.alpha > 0:
            problems.append(f"alpha must be positive (got {self.alpha})")
        if self.rounds < 1:
            problems.append(f"rounds must be >= 1 (got {self.rounds})")
        if self.eval_every < 1:
            problems.append(f"eval_every must be >= 1 (got {self.eval_every})")
        if self.monte_carlo_runs < 1:
            problems.append(f"monte_carlo_runs must be >= 1 (got {self.monte_carlo_runs})")
        if self.workers < 1:
            problems.append(f"workers must be >= 1 (got {self.workers})")
        if self.mobility is Pattern.STATIC and self.num_mobile > 0:
            problems.append("pattern 'static' requires num_mobile = 0")
        if self.mobility is Pattern.DCM and self.num_mobile >= self.num_clients:
            problems.append("pattern 'dcm' needs at least one static client")

        t = self.trainer
        if t.kind not in KINDS:
            problems.append(f"trainer.kind must be one of {KINDS} (got {t.kind!r})")
        if not t.lr >= 0:
            problems.append(f"trainer.lr must be >= 0 (got {t.lr})")
        if not 0 <= t.momentum < 1:
            problems.append(f"trainer.momentum must lie in [0, 1) (got {t.momentum})")
        if not t.weight_decay >= 0:
            problems.append(f"trainer.weight_decay must be >= 0 (got {t.weight_decay})")
        if t.batch_size is not None and t.batch_size < 1:
            problems.append(f"trainer.batch_size must be >= 1 or null (got {t.batch_size})")
        if t.kind == "mlp" and t.hidden < 1:
            problems.append(f"trainer.hidden must be >= 1 (got {t.hidden})")

        d = self.dataset
        if d.kind not in DATASET_KINDS:
            problems.append(f"dataset.kind must be one of {DATASET_KINDS} (got {d.kind!r})")
        elif d.kind == "synthetic-blobs":
            if d.num_classes < 2:
                problems.append("dataset.num_classes must be >= 2")
            if d.per_class < 1 or d.test_per_class < 1:
                problems.append("dataset.per_class and dataset.test_per_class must be >= 1")
            if d.dim < d.num_classes - 1:
                problems.append("dataset.dim must be >= num_classes - 1")
            if not d.spread >= 0:
                problems.append("dataset.spread must be >= 0")
        else:
            for name in ("train_images", "train_labels", "test_images", "test_labels"):
                if not getattr(d, name):
                    problems.append(f"dataset.{name} is required for idx-files")
        if problems:
            raise ConfigError("invalid configuration: " + "; ".join(problems))
        return self

    # JSON round trip ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["move_radius"] = format_radius(self.move_radius)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, raw: dict[str, Any], base_dir: str | os.PathLike | None = None) -> "SimulationConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        raw = dict(raw)
        trainer = _build(TrainerConfig, raw.pop("trainer", {}), "trainer")
        dataset = _build(DatasetConfig, raw.pop("dataset", {}), "dataset")
        if base_dir is not None and dataset.kind == "idx-files":
            fixed = {}
            for name in ("train_images", "train_labels", "test_images", "test_labels"):
                value = getattr(dataset, name)
                if value and not os.path.isabs(value):
                    fixed[name] = os.path.join(os.fspath(base_dir), value)
            dataset = dataclasses.replace(dataset, **fixed)
        return _build(cls, raw, "config", trainer=trainer, dataset=dataset)

    @classmethod
    def from_json(cls, text: str, base_dir: str | os.PathLike | None = None) -> "SimulationConfig":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw, base_dir)

    @classmethod
    def load(cls, path: str | os.PathLike) -> "SimulationConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        return cls.from_json(text, base_dir=path.parent)


def parse_radius(value: Any) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "unconstrained"):
            return math.inf
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"radius must be a number or 'inf', got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"radius must be a number or 'inf', got {value!r}")
    return float(value)


def format_radius(value: float) -> float | str:
    return "inf" if value == math.inf else value


def _build(klass, raw: dict[str, Any], where: str, **extra: Any):
    if not isinstance(raw, dict):
        raise ConfigError(f"{where} must be a JSON object")
    known = {f.name for f in dataclasses.fields(klass)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown {where} field(s): {', '.join(unknown)}")
    try:
        return klass(**raw, **extra)
    except TypeError as exc:
        raise ConfigError(f"bad {where}: {exc}") from exc
