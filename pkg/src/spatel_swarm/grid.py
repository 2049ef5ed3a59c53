"""Workspace grid, occupancy matrices and quad transition systems.

Cells are indexed ``(i, j)`` with ``i`` the row counted from the north edge
and ``j`` the column counted from the west edge, both zero-based.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

LABELS = ("NW", "NE", "SW", "SE")
ALL_LABELS = frozenset(LABELS)

# (row offset, column offset) of each quadrant inside its parent block
_QUADRANT_OFFSET = {"NW": (0, 0), "NE": (0, 1), "SW": (1, 0), "SE": (1, 1)}

DEFAULT_MAX_DEPTH = 6


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridConfig:
    """Square workspace ``[-a/2, a/2]^2`` split into ``2^depth`` cells per side."""

    depth: int
    side_length: float
    robot_count: int
    max_speed: float
    step: float
    max_depth: int = DEFAULT_MAX_DEPTH

    def __post_init__(self):
        if self.depth < 1:
            raise GridError(f"depth must be >= 1, got {self.depth}")
        if self.depth > self.max_depth:
            raise GridError(
                f"depth {self.depth} exceeds the configured guard max_depth={self.max_depth}"
            )
        if self.side_length <= 0 or self.max_speed <= 0 or self.step <= 0:
            raise GridError("side_length, max_speed and step must be positive")
        if self.robot_count < 1:
            raise GridError("robot_count must be >= 1")
        if self.step < self.min_step - 1e-12:
            raise GridError(
                f"step {self.step} s is below the sampling bound a/(2^(D-1) u_m) = {self.min_step} s"
            )

    @property
    def size(self) -> int:
        return 2**self.depth

    @property
    def cell_width(self) -> float:
        return self.side_length / self.size

    @property
    def min_step(self) -> float:
        return self.side_length / (2 ** (self.depth - 1) * self.max_speed)


class OccupancyMatrix:
    """Immutable ``2^D x 2^D`` matrix of non-negative robot counts."""

    __slots__ = ("depth", "counts")

    def __init__(self, counts, depth: int | None = None):
        arr = np.array(counts, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise GridError(f"occupancy must be a square matrix, got shape {arr.shape}")
        n = arr.shape[0]
        d = int(round(np.log2(n))) if n > 0 else -1
        if n < 2 or 2**d != n:
            raise GridError(f"occupancy side {n} is not a power of two >= 2")
        if depth is not None and depth != d:
            raise GridError(f"occupancy side {n} does not match depth {depth}")
        if (arr < 0).any():
            raise GridError("occupancy counts must be non-negative")
        arr.flags.writeable = False
        object.__setattr__(self, "depth", d)
        object.__setattr__(self, "counts", arr)

    def __setattr__(self, name, value):
        raise AttributeError("OccupancyMatrix is immutable")

    @property
    def size(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __getitem__(self, idx):
        return int(self.counts[idx])

    def __eq__(self, other):
        if not isinstance(other, OccupancyMatrix):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    def __hash__(self):
        return hash(self.counts.tobytes())

    def __repr__(self):
        return f"OccupancyMatrix({self.counts.tolist()})"

    def tolist(self) -> list[list[int]]:
        return self.counts.tolist()

    @classmethod
    def zeros(cls, depth: int) -> "OccupancyMatrix":
        return cls(np.zeros((2**depth, 2**depth), dtype=np.int64))

    @classmethod
    def from_positions(cls, cfg: GridConfig, positions) -> "OccupancyMatrix":
        counts = np.zeros((cfg.size, cfg.size), dtype=np.int64)
        for x, y in positions:
            i, j = cell_of(cfg, x, y)
            counts[i, j] += 1
        return cls(counts)


def cell_of(cfg: GridConfig, x: float, y: float) -> tuple[int, int]:
    """Cell containing workspace point ``(x, y)``; boundary points go south/east."""
    half = cfg.side_length / 2
    w = cfg.cell_width
    j = int(np.floor((x + half) / w))
    i = int(np.floor((half - y) / w))
    return min(max(i, 0), cfg.size - 1), min(max(j, 0), cfg.size - 1)


def cell_bounds(cfg: GridConfig, i: int, j: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """Return ``((x_lo, x_hi), (y_lo, y_hi))`` of cell ``(i, j)``."""
    n = cfg.size
    if not (0 <= i < n and 0 <= j < n):
        raise GridError(f"cell ({i}, {j}) out of range for a {n}x{n} grid")
    half = cfg.side_length / 2
    w = cfg.cell_width
    return (-half + j * w, -half + (j + 1) * w), (half - (i + 1) * w, half - i * w)


def neighbors(size: int, i: int, j: int) -> list[tuple[int, int]]:
    """4-neighbourhood of a cell, in row-major order (north, west, east, south)."""
    out = []
    for di, dj in ((-1, 0), (0, -1), (0, 1), (1, 0)):
        a, b = i + di, j + dj
        if 0 <= a < size and 0 <= b < size:
            out.append((a, b))
    return out


# -- quad transition systems ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class QtsShape:
    """Node structure of the QTS over a ``2^D x 2^D`` grid, without valuations.

    Nodes are numbered breadth-first from the root (node 0) with children
    visited in ``NW, NE, SW, SE`` order, so for ``D = 2`` node ids agree with
    the usual ``v_0 .. v_20`` drawing of the tree.
    """

    depth: int
    children: tuple[dict, ...]  # node -> {label: child}
    level: tuple[int, ...]
    # top-left cell and side length of the block a node covers
    block: tuple[tuple[int, int, int], ...]

    @property
    def node_count(self) -> int:
        return len(self.children)

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]

    def cells(self, v: int) -> list[tuple[int, int]]:
        i0, j0, s = self.block[v]
        return [(i0 + a, j0 + b) for a in range(s) for b in range(s)]

    def leaf_of_cell(self, i: int, j: int) -> int:
        return self._leaf_index[(i, j)]

    @property
    def leaves(self) -> list[int]:
        return [v for v in range(self.node_count) if not self.children[v]]

    @property
    def _leaf_index(self) -> dict:
        idx = self.__dict__.get("_leaf_cache")
        if idx is None:
            idx = {self.block[v][:2]: v for v in range(self.node_count) if not self.children[v]}
            object.__setattr__(self, "_leaf_cache", idx)
        return idx


@lru_cache(maxsize=None)
def qts_shape(depth: int) -> QtsShape:
    children: list[dict] = [{}]
    level = [0]
    block = [(0, 0, 2**depth)]
    frontier = [0]
    for d in range(depth):
        nxt = []
        for v in frontier:
            i0, j0, s = block[v]
            h = s // 2
            for lab in LABELS:
                di, dj = _QUADRANT_OFFSET[lab]
                c = len(children)
                children.append({})
                level.append(d + 1)
                block.append((i0 + di * h, j0 + dj * h, h))
                children[v][lab] = c
                nxt.append(c)
        frontier = nxt
    return QtsShape(depth, tuple(children), tuple(level), tuple(block))


@dataclass(frozen=True)
class Qts:
    shape: QtsShape
    values: tuple[float, ...]
    root: int = 0

    @property
    def depth(self) -> int:
        return self.shape.depth

    def value(self, v: int) -> float:
        return self.values[v]

    def child(self, v: int, label: str) -> int | None:
        return self.shape.children[v].get(label)


def build_qts(m: OccupancyMatrix) -> Qts:
    shape = qts_shape(m.depth)
    counts = m.counts
    values = [0] * shape.node_count
    # children always have larger ids than their parent
    for v in range(shape.node_count - 1, -1, -1):
        kids = shape.children[v]
        if kids:
            values[v] = sum(values[c] for c in kids.values())
        else:
            i, j, _ = shape.block[v]
            values[v] = int(counts[i, j])
    return Qts(shape, tuple(values))


class LabeledPath:
    """A downward path ending at a leaf; indexing past the end repeats the leaf."""

    __slots__ = ("steps", "labels")

    def __init__(self, steps: Sequence[int], labels: frozenset):
        self.steps = tuple(steps)
        self.labels = labels

    @property
    def origin(self) -> int:
        return self.steps[0]

    def __getitem__(self, i: int) -> int:
        if i < 0:
            raise IndexError("labeled paths are indexed from 0")
        return self.steps[min(i, len(self.steps) - 1)]

    def prefix(self, k: int) -> tuple[int, ...]:
        return tuple(self[i] for i in range(k + 1))

    def __eq__(self, other):
        return isinstance(other, LabeledPath) and self.steps == other.steps

    def __hash__(self):
        return hash(self.steps)

    def __repr__(self):
        return f"LabeledPath{self.steps}"


def _walk(shape: QtsShape, v: int, labels: frozenset, remaining: int) -> Iterator[tuple[int, ...]]:
    kids = shape.children[v]
    if remaining == 0 or not kids:
        yield (v,)
        return
    for lab in LABELS:
        if lab in labels:
            for rest in _walk(shape, kids[lab], labels, remaining - 1):
                yield (v,) + rest


def labeled_paths(q: Qts | QtsShape, v: int, labels, max_index: int) -> Iterator[LabeledPath]:
    """Lazily enumerate B-labeled paths from ``v``, distinct up to index ``max_index``.

    Paths that only differ beyond ``max_index`` are reported once; a path that
    reaches a leaf before ``max_index`` stops there (the leaf repeats).
    """
    labels = frozenset(labels)
    if not labels:
        raise GridError("label set must be nonempty")
    if not labels <= ALL_LABELS:
        raise GridError(f"unknown labels {sorted(labels - ALL_LABELS)}")
    if max_index < 0:
        raise GridError("max_index must be >= 0")
    shape = q.shape if isinstance(q, Qts) else q
    for steps in _walk(shape, v, labels, max_index):
        yield LabeledPath(steps, labels)


# -- CSV ---------------------------------------------------------------------


def occupancy_to_csv(m: OccupancyMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(m.tolist())
    return buf.getvalue()


def occupancy_from_csv(text: str) -> OccupancyMatrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    return OccupancyMatrix([[int(x) for x in r] for r in rows])


def frames_to_csv(frames: Sequence[OccupancyMatrix]) -> str:
    """Stack of occupancy frames, separated by blank lines."""
    return "\n".join(occupancy_to_csv(m) for m in frames)


def frames_from_csv(text: str) -> list[OccupancyMatrix]:
    blocks, cur = [], []
    for line in text.splitlines():
        if line.strip():
            cur.append(line)
        elif cur:
            blocks.append(cur)
            cur = []
    if cur:
        blocks.append(cur)
    return [occupancy_from_csv("\n".join(b)) for b in blocks]
