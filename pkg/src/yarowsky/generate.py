"""Synthetic planted-class datasets for experiments and property checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import BipartiteGraph, SeedLabels, build_graph


@dataclass(frozen=True)
class GenConfig:
    num_instances: int = 100
    num_features: int = 40
    num_labels: int = 2
    edges_per_instance: int | tuple[int, int] = (2, 5)
    seed_fraction: float = 0.1
    planted_classes: int | None = None
    noise: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        classes = self.classes
        if self.num_labels < 2:
            raise ValueError("need at least two labels")
        if not 1 <= classes <= self.num_labels:
            raise ValueError("planted_classes must be between 1 and num_labels")
        if self.num_features < classes:
            raise ValueError("need at least one feature per planted class")
        if not 0 < self.seed_fraction <= 1:
            raise ValueError("seed_fraction must be in (0, 1]")
        if self.seed_fraction * self.num_instances < 1:
            raise ValueError("seed_fraction * num_instances must be >= 1")
        if not 0 <= self.noise < 1:
            raise ValueError("noise must be in [0, 1)")
        lo, hi = self.degree_range
        if lo < 1 or hi < lo:
            raise ValueError("edges_per_instance must be a positive count or range")
        if hi > self.num_features:
            raise ValueError(f"infeasible: {hi} edges per instance but only {self.num_features} features")
        if self.noise == 0 and hi > self.num_features // classes:
            raise ValueError("infeasible: noise=0 needs edges_per_instance <= features per planted class")

    @property
    def classes(self) -> int:
        return self.num_labels if self.planted_classes is None else self.planted_classes

    @property
    def degree_range(self) -> tuple[int, int]:
        e = self.edges_per_instance
        if isinstance(e, (tuple, list)):
            return int(e[0]), int(e[1])
        return int(e), int(e)

    @property
    def num_seeds(self) -> int:
        return max(1, int(round(self.seed_fraction * self.num_instances)))


def feature_class(f: int, config: GenConfig) -> int:
    """Planted class of feature ``f``: features are split into contiguous blocks."""
    per = config.num_features // config.classes
    return min(f // per, config.classes - 1)


def generate(config: GenConfig) -> list[tuple[str, int | None, list[str]]]:
    """Records ``(instance_id, seed_label_or_None, feature_tokens)``.

    Instance ``i`` belongs to class ``i mod C``. Each of its features comes
    from its own class block, or with probability ``noise`` from another
    block. Seeds are spread round-robin over the classes so every planted
    class is represented when there are enough seeds.
    """
    rng = np.random.default_rng(config.rng_seed)
    C = config.classes
    lo, hi = config.degree_range
    blocks = [[f for f in range(config.num_features) if feature_class(f, config) == c] for c in range(C)]
    classes = [i % C for i in range(config.num_instances)]

    features: list[list[int]] = []
    for i in range(config.num_instances):
        own = blocks[classes[i]]
        other = [f for c, b in enumerate(blocks) if c != classes[i] for f in b]
        k = int(rng.integers(lo, hi + 1))
        chosen: list[int] = []
        for _ in range(k):
            use_other = bool(other) and rng.random() < config.noise
            pool = [f for f in (other if use_other else own) if f not in chosen]
            if not pool:
                pool = [f for f in (own if use_other else other) if f not in chosen]
            chosen.append(int(pool[rng.integers(len(pool))]))
        features.append(chosen)

    by_class = [rng.permutation([i for i in range(config.num_instances) if classes[i] == c]).tolist() for c in range(C)]
    seeded: set[int] = set()
    depth = 0
    while len(seeded) < config.num_seeds:
        for c in range(C):
            if depth < len(by_class[c]) and len(seeded) < config.num_seeds:
                seeded.add(by_class[c][depth])
        depth += 1

    return [
        (f"x{i}", classes[i] if i in seeded else None, [f"f{f}" for f in features[i]])
        for i in range(config.num_instances)
    ]


def generate_graph(config: GenConfig) -> tuple[BipartiteGraph, SeedLabels]:
    return build_graph(generate(config), config.num_labels)
