from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

METHODS = ("jcl", "infonce", "vanilla")


@dataclass
class TrainConfig:
    """Hyperparameters for one training run; also the on-disk spec file schema."""

    method: str = "jcl"
    batch_size: int = 64
    positive_keys: int = 5
    lam: float = 4.0
    tau: float = 0.2
    momentum: float = 0.999
    queue_capacity: int = 1024
    embed_dim: int = 32
    hidden_dim: int = 64
    lr: float = 0.03
    sgd_momentum: float = 0.9
    weight_decay: float = 1e-4
    epochs: int = 100
    seed: int = 0
    num_instances: int = 512
    ambient_dim: int = 64
    num_clusters: int = 10
    cluster_spread: float = 2.5
    aug_noise: float = 0.1
    aug_gain: float = 0.1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.batch_size < 1 or self.positive_keys < 1:
            raise ValueError("batch_size and positive_keys must be >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if not self.lam >= 0:
            raise ValueError("lam must be >= 0")
        if not 0 <= self.momentum <= 1:
            raise ValueError("momentum must lie in [0, 1]")
        if self.queue_capacity < self.batch_size:
            raise ValueError("queue_capacity must be >= batch_size")
        if self.lr < 0 or self.epochs < 0:
            raise ValueError("lr and epochs must be non-negative")
        if min(self.embed_dim, self.hidden_dim, self.ambient_dim, self.num_instances, self.num_clusters) < 1:
            raise ValueError("dimensions and counts must be positive")
        if self.aug_noise < 0 or not 0 <= self.aug_gain < 1:
            raise ValueError("aug_noise must be >= 0 and aug_gain in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        values = {}
        for name, value in data.items():
            default = getattr(cls, name)
            if isinstance(default, str):
                values[name] = value
            elif isinstance(default, int):
                if isinstance(value, float) and not value.is_integer():
                    raise ValueError(f"{name} must be an integer, got {value}")
                values[name] = int(value)
            else:
                values[name] = float(value)
        return cls(**values)

    def replace(self, **changes) -> "TrainConfig":
        data = self.to_dict()
        data.update(changes)
        return TrainConfig.from_dict(data)


def load_config(path: str | Path) -> TrainConfig:
    with open(path) as fh:
        return TrainConfig.from_dict(json.load(fh))


def dump_config(config: TrainConfig, path: str | Path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(config.to_dict(), fh, indent=2)
        fh.write("\n")
