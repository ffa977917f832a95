"""Single-relation directed graphs: trees, closure, evaluation partitions, ingestion.

Edge sets are stored as ``(n, 2)`` int64 arrays sorted by ``sub * V + obj``.
The complement set E^c contains self-pairs ``(v, v)``, so that
``|E| + |E^c| == V**2`` holds for every graph.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

_logger = logging.getLogger(__name__)

__all__ = [
    "DirectedGraph",
    "EdgePartitions",
    "Vocab",
    "EdgeListError",
    "build_complete_binary_tree",
    "transitive_closure",
    "edge_partitions",
    "sample_edges",
    "ingest_edge_list",
    "export_edge_list",
]


class EdgeListError(ValueError):
    """Malformed edge-list file."""


def _canonical(edges, num_vertices: int) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size == 0:
        out = np.empty((0, 2), dtype=np.int64)
    else:
        keys = np.unique(arr[:, 0] * num_vertices + arr[:, 1])
        out = np.column_stack(np.divmod(keys, num_vertices)).astype(np.int64)
    out.flags.writeable = False
    return out


def _linear_keys(edges: np.ndarray, num_vertices: int) -> np.ndarray:
    return edges[:, 0] * num_vertices + edges[:, 1]


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    """Vertex count plus a deduplicated, self-loop free set of directed edges."""

    num_vertices: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.num_vertices < 1:
            raise ValueError(f"num_vertices must be positive, got {self.num_vertices}")
        raw = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        # check before linear keys are formed: u * V + v would alias an out-of-range v
        if raw.size:
            if raw.min() < 0 or raw.max() >= self.num_vertices:
                raise ValueError("edge endpoint out of range [0, V)")
            if np.any(raw[:, 0] == raw[:, 1]):
                raise ValueError("self-loops are not allowed")
        edges = _canonical(raw, self.num_vertices)
        object.__setattr__(self, "edges", edges)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(map(tuple, self.edges.tolist()))

    def __contains__(self, pair) -> bool:
        u, v = pair
        key = u * self.num_vertices + v
        keys = _linear_keys(self.edges, self.num_vertices)
        i = np.searchsorted(keys, key)
        return bool(i < len(keys) and keys[i] == key)

    def __eq__(self, other):
        if not isinstance(other, DirectedGraph):
            return NotImplemented
        return self.num_vertices == other.num_vertices and np.array_equal(self.edges, other.edges)

    __hash__ = None

    def successors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.num_vertices)]
        for u, v in self.edges.tolist():
            adj[u].append(v)
        return adj


@dataclass(frozen=True, eq=False)
class EdgePartitions:
    """E, E^c and E^rev for a closed graph.

    E^c is kept implicit (everything not in E, self-pairs included) because
    it is quadratic in V; ``ec_set`` materializes it on demand.
    """

    num_vertices: int
    e_set: np.ndarray = field(repr=False)
    erev_set: np.ndarray = field(repr=False)

    @property
    def num_e(self) -> int:
        return len(self.e_set)

    @property
    def num_ec(self) -> int:
        return self.num_vertices**2 - len(self.e_set)

    @property
    def num_erev(self) -> int:
        return len(self.erev_set)

    @property
    def e_keys(self) -> np.ndarray:
        return _linear_keys(self.e_set, self.num_vertices)

    @property
    def ec_set(self) -> np.ndarray:
        mask = np.ones(self.num_vertices**2, dtype=bool)
        mask[self.e_keys] = False
        keys = np.flatnonzero(mask)
        return np.column_stack(np.divmod(keys, self.num_vertices)).astype(np.int64)

    def ec_from_ranks(self, ranks: np.ndarray) -> np.ndarray:
        """Map positions within the sorted E^c to pairs without materializing E^c."""
        ranks = np.asarray(ranks, dtype=np.int64)
        forbidden = self.e_keys
        # forbidden[i] - i = number of allowed keys strictly below forbidden[i]
        shifted = forbidden - np.arange(len(forbidden), dtype=np.int64)
        keys = ranks + np.searchsorted(shifted, ranks, side="right")
        return np.column_stack(np.divmod(keys, self.num_vertices)).astype(np.int64)

    def sample_ec(self, n: int, seed: int) -> np.ndarray:
        """Uniform n-subset of E^c; same draw as ``sample_edges(self.ec_set, n, seed)``."""
        if n > self.num_ec:
            raise ValueError(f"cannot sample {n} pairs from a set of {self.num_ec}")
        rng = np.random.default_rng(seed)
        ranks = np.sort(rng.choice(self.num_ec, size=n, replace=False))
        return self.ec_from_ranks(ranks)

    def is_e(self, pairs: np.ndarray) -> np.ndarray:
        keys = _linear_keys(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), self.num_vertices)
        e_keys = self.e_keys
        idx = np.searchsorted(e_keys, keys)
        idx = np.minimum(idx, max(len(e_keys) - 1, 0))
        if len(e_keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        return e_keys[idx] == keys


@dataclass
class Vocab:
    """Bijection between external names and dense entity ids."""

    names: list[str] = field(default_factory=list)
    index: dict[str, int] = field(default_factory=dict)
    # duplicate lines skipped by ingest_edge_list
    duplicates: int = 0

    def add(self, name: str) -> int:
        if name not in self.index:
            self.index[name] = len(self.names)
            self.names.append(name)
        return self.index[name]

    def __len__(self):
        return len(self.names)

    def id_of(self, name: str) -> int:
        return self.index[name]

    def name_of(self, i: int) -> str:
        return self.names[i]

    @classmethod
    def from_size(cls, n: int) -> "Vocab":
        vocab = cls()
        for i in range(n):
            vocab.add(str(i))
        return vocab


def build_complete_binary_tree(depth: int) -> DirectedGraph:
    """Complete binary tree in level order; vertex 0 is the root, edges point to children."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    n = 2**depth - 1
    children = np.arange(1, n, dtype=np.int64)
    parents = (children - 1) // 2
    return DirectedGraph(n, np.column_stack([parents, children]))


def _topological_order(num_vertices: int, adj: list[list[int]]) -> list[int]:
    indeg = [0] * num_vertices
    for succ in adj:
        for v in succ:
            indeg[v] += 1
    stack = [v for v in range(num_vertices) if indeg[v] == 0]
    order = []
    while stack:
        u = stack.pop()
        order.append(u)
        for v in adj[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    if len(order) != num_vertices:
        raise ValueError("graph contains a cycle; transitive closure requires a DAG")
    return order


def transitive_closure(g: DirectedGraph) -> DirectedGraph:
    """All (u, w) joined by a directed path of length >= 1.

    Reachability sets are Python-int bitsets filled in reverse topological
    order, which is the per-vertex DFS with memoized descendants.
    """
    adj = g.successors()
    order = _topological_order(g.num_vertices, adj)
    reach = [0] * g.num_vertices
    for u in reversed(order):
        bits = 0
        for v in adj[u]:
            bits |= reach[v] | (1 << v)
        reach[u] = bits

    subs, objs = [], []
    for u, bits in enumerate(reach):
        if not bits:
            continue
        # little-endian bitset -> indices of set bits
        raw = np.frombuffer(bits.to_bytes((bits.bit_length() + 7) // 8, "little"), dtype=np.uint8)
        targets = np.flatnonzero(np.unpackbits(raw, bitorder="little"))
        subs.append(np.full(len(targets), u, dtype=np.int64))
        objs.append(targets.astype(np.int64))
    if not subs:
        return DirectedGraph(g.num_vertices, np.empty((0, 2), dtype=np.int64))
    return DirectedGraph(g.num_vertices, np.column_stack([np.concatenate(subs), np.concatenate(objs)]))


def edge_partitions(g_closed: DirectedGraph) -> EdgePartitions:
    e = g_closed.edges
    erev = _canonical(e[:, ::-1], g_closed.num_vertices)
    return EdgePartitions(g_closed.num_vertices, e, erev)


def sample_edges(edges: np.ndarray, n: int, seed: int) -> np.ndarray:
    """Uniform n-subset of ``edges`` without replacement, in the input order."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if n < 0 or n > len(edges):
        raise ValueError(f"cannot sample {n} pairs from a set of {len(edges)}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(edges), size=n, replace=False))
    return edges[idx]


def ingest_edge_list(path) -> tuple[DirectedGraph, Vocab]:
    """Read ``subject<TAB>object`` lines. Names get ids in first-appearance order."""
    vocab = Vocab()
    pairs = []
    seen = set()
    duplicates = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise EdgeListError(f"{path}:{lineno}: expected 'subject<TAB>object', got {line!r}")
            sub, obj = parts
            if sub == obj:
                raise ValueError(f"{path}:{lineno}: self-loop on {sub!r}")
            pair = (vocab.add(sub), vocab.add(obj))
            if pair in seen:
                duplicates += 1
                continue
            seen.add(pair)
            pairs.append(pair)
    if duplicates:
        _logger.warning("%s: skipped %d duplicate edge line(s)", path, duplicates)
    if not len(vocab):
        raise EdgeListError(f"{path}: no edges")
    vocab.duplicates = duplicates
    return DirectedGraph(len(vocab), np.array(pairs, dtype=np.int64).reshape(-1, 2)), vocab


def export_edge_list(graph: DirectedGraph, path, vocab: Vocab | None = None) -> None:
    vocab = vocab if vocab is not None else Vocab.from_size(graph.num_vertices)
    names = vocab.names
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in graph.edges.tolist():
            fh.write(f"{names[u]}\t{names[v]}\n")
