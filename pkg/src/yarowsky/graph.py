"""Bipartite instance/feature graph, TSV ingestion and degree padding."""

from __future__ import annotations

import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO

import numpy as np

PAD_PREFIX = "__pad__"
UNLABELED_MARK = "?"


class RecordError(ValueError):
    """A dataset record that cannot be ingested."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class SeedLabels:
    """Frozen initial labeling: instance id -> label index."""

    entries: Mapping[int, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, x: int) -> bool:
        return x in self.entries

    def __getitem__(self, x: int) -> int:
        return self.entries[x]

    def items(self):
        return self.entries.items()

    def mask(self, num_instances: int) -> np.ndarray:
        m = np.zeros(num_instances, dtype=bool)
        m[list(self.entries)] = True
        return m

    def label_array(self, num_instances: int) -> np.ndarray:
        """Per-instance seed label, ``-1`` for unseeded instances."""
        y = np.full(num_instances, -1, dtype=np.int64)
        for x, j in self.entries.items():
            y[x] = j
        return y

    def validate(self, graph: "BipartiteGraph") -> None:
        if not self.entries:
            raise ValueError("at least one seed label is required")
        for x, j in self.entries.items():
            if not 0 <= x < graph.num_instances:
                raise ValueError(f"seeded instance {x} is not in the graph")
            if not 0 <= j < graph.num_labels:
                raise ValueError(f"seed label {j} out of range for L={graph.num_labels}")


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Instances on one side, features on the other; an edge means "x has f".

    ``features_of[x]`` and ``instances_of[f]`` are sorted tuples of dense ids.
    Use :meth:`from_features` to build one; it derives and validates the
    reverse adjacency.
    """

    num_labels: int
    features_of: tuple[tuple[int, ...], ...]
    instances_of: tuple[tuple[int, ...], ...]
    instance_names: tuple[str, ...]
    feature_names: tuple[str, ...]

    @classmethod
    def from_features(
        cls,
        features_of: Iterable[Iterable[int]],
        num_labels: int,
        num_features: int | None = None,
        instance_names: Iterable[str] | None = None,
        feature_names: Iterable[str] | None = None,
    ) -> "BipartiteGraph":
        fx = tuple(tuple(sorted(set(int(f) for f in fs))) for fs in features_of)
        if num_features is None:
            num_features = 1 + max((max(fs) for fs in fx if fs), default=-1)
        xf: list[list[int]] = [[] for _ in range(num_features)]
        for x, fs in enumerate(fx):
            for f in fs:
                if not 0 <= f < num_features:
                    raise ValueError(f"feature id {f} out of range")
                xf[f].append(x)
        inames = tuple(instance_names) if instance_names is not None else tuple(f"x{i}" for i in range(len(fx)))
        fnames = tuple(feature_names) if feature_names is not None else tuple(f"f{i}" for i in range(num_features))
        graph = cls(num_labels, fx, tuple(tuple(xs) for xs in xf), inames, fnames)
        graph.validate()
        return graph

    def validate(self) -> None:
        if self.num_labels < 2:
            raise ValueError("need at least two labels")
        if len(self.instance_names) != self.num_instances or len(self.feature_names) != self.num_features:
            raise ValueError("name tables do not match the graph size")
        for x, fs in enumerate(self.features_of):
            if not fs:
                raise ValueError(f"instance {x} has no features")
        for f, xs in enumerate(self.instances_of):
            if not xs:
                raise ValueError(f"feature {f} has no instances")
            for x in xs:
                if f not in self.features_of[x]:
                    raise ValueError(f"adjacency is not symmetric at ({x}, {f})")
        if sum(map(len, self.features_of)) != sum(map(len, self.instances_of)):
            raise ValueError("adjacency is not symmetric")

    @property
    def num_instances(self) -> int:
        return len(self.features_of)

    @property
    def num_features(self) -> int:
        return len(self.instances_of)

    @property
    def num_edges(self) -> int:
        return int(self.edge_instance.size)

    @cached_property
    def edge_instance(self) -> np.ndarray:
        return np.array([x for x, fs in enumerate(self.features_of) for _ in fs], dtype=np.int64)

    @cached_property
    def edge_feature(self) -> np.ndarray:
        return np.array([f for fs in self.features_of for f in fs], dtype=np.int64)

    @cached_property
    def instance_degree(self) -> np.ndarray:
        return np.array([len(fs) for fs in self.features_of], dtype=np.int64)

    @cached_property
    def feature_degree(self) -> np.ndarray:
        return np.array([len(xs) for xs in self.instances_of], dtype=np.int64)

    def is_padding(self, f: int) -> bool:
        return self.feature_names[f].startswith(PAD_PREFIX)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (
            self.num_labels == other.num_labels
            and self.features_of == other.features_of
            and self.instances_of == other.instances_of
            and self.instance_names == other.instance_names
            and self.feature_names == other.feature_names
        )

    __hash__ = None


def build_graph(records: Iterable[tuple], num_labels: int) -> tuple[BipartiteGraph, SeedLabels]:
    """Build the graph and seed set from ``(instance_id, label_or_None, tokens)`` records.

    Feature tokens are interned to dense ids in first-seen order; repeated
    tokens within one record collapse to a single edge.
    """
    if num_labels < 2:
        raise ValueError("need at least two labels")
    names: list[str] = []
    seen: set[str] = set()
    token_ids: dict[str, int] = {}
    features_of: list[list[int]] = []
    seeds: dict[int, int] = {}
    for lineno, record in enumerate(records, start=1):
        line = getattr(record, "line", None) or lineno
        name, label, tokens = record[0], record[1], record[2]
        name = str(name)
        if name in seen:
            raise RecordError(f"duplicate instance id {name!r}", line)
        fs: list[int] = []
        for tok in tokens:
            fid = token_ids.setdefault(str(tok), len(token_ids))
            if fid not in fs:
                fs.append(fid)
        if not fs:
            raise RecordError(f"instance {name!r} has no features", line)
        if label is not None:
            if not isinstance(label, (int, np.integer)) or not 0 <= label < num_labels:
                raise RecordError(f"label {label!r} out of range for L={num_labels}", line)
            seeds[len(names)] = int(label)
        seen.add(name)
        names.append(name)
        features_of.append(fs)
    graph = BipartiteGraph.from_features(
        features_of,
        num_labels,
        num_features=len(token_ids),
        instance_names=names,
        feature_names=list(token_ids),
    )
    return graph, SeedLabels(seeds)


def pad_to_uniform_degree(graph: BipartiteGraph) -> tuple[BipartiteGraph, int]:
    """Give every instance ``m = max |F_x|`` features by adding private singleton features."""
    m = int(graph.instance_degree.max())
    if np.all(graph.instance_degree == m):
        return graph, m
    features_of = [list(fs) for fs in graph.features_of]
    feature_names = list(graph.feature_names)
    for x, fs in enumerate(features_of):
        for k in range(m - len(fs)):
            fs.append(len(feature_names))
            feature_names.append(f"{PAD_PREFIX}{graph.instance_names[x]}_{k}")
    padded = BipartiteGraph.from_features(
        features_of,
        graph.num_labels,
        num_features=len(feature_names),
        instance_names=graph.instance_names,
        feature_names=feature_names,
    )
    return padded, m


class _Record(tuple):
    line: int


def _record(name: str, label, tokens: list[str], line: int) -> _Record:
    r = _Record((name, label, tokens))
    r.line = line
    return r


def parse_tsv(lines: Iterable[str], num_labels: int | None = None) -> tuple[BipartiteGraph, SeedLabels, list[str]]:
    """Parse the dataset format ``id<TAB>label_or_?<TAB>space separated tokens``.

    An optional header ``#labels: a,b,c`` maps label names to indices and
    fixes L. Without it labels must be integers and L defaults to
    ``max(2, 1 + largest label)``. Returns the graph, the seeds and the label
    names.
    """
    label_names: list[str] | None = None
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("labels:"):
                label_names = [s.strip() for s in body[len("labels:"):].split(",") if s.strip()]
                if len(label_names) < 2:
                    raise RecordError("label map needs at least two labels", lineno)
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise RecordError(f"expected 3 tab-separated columns, got {len(cols)}", lineno)
        name, label_col, tokens = cols[0].strip(), cols[1].strip(), cols[2].split()
        if not name:
            raise RecordError("empty instance id", lineno)
        if label_col == UNLABELED_MARK:
            label = None
        elif label_names is not None and label_col in label_names:
            label = label_names.index(label_col)
        else:
            try:
                label = int(label_col)
            except ValueError:
                raise RecordError(f"unknown label {label_col!r}", lineno) from None
        records.append(_record(name, label, tokens, lineno))

    if label_names is not None:
        if num_labels is not None and num_labels != len(label_names):
            raise RecordError(f"label map has {len(label_names)} labels but L={num_labels} was requested")
        num_labels = len(label_names)
    elif num_labels is None:
        num_labels = max([2] + [r[1] + 1 for r in records if r[1] is not None and r[1] >= 0])
    if not records:
        raise RecordError("dataset is empty")
    graph, seeds = build_graph(records, num_labels)
    names = label_names if label_names is not None else [str(j) for j in range(num_labels)]
    return graph, seeds, names


def read_tsv(path: str | os.PathLike | IO[str], num_labels: int | None = None):
    if hasattr(path, "read"):
        return parse_tsv(path, num_labels)
    with open(path, encoding="utf-8") as fh:
        return parse_tsv(fh, num_labels)


def format_tsv(records: Iterable[tuple], label_names: list[str] | None = None) -> str:
    """Inverse of :func:`parse_tsv` for ``(id, label_or_None, tokens)`` records."""
    out = []
    if label_names is not None:
        out.append("#labels: " + ",".join(label_names))
    for name, label, tokens in records:
        mark = UNLABELED_MARK if label is None else (label_names[label] if label_names else str(label))
        out.append(f"{name}\t{mark}\t{' '.join(tokens)}")
    return "\n".join(out) + "\n"
