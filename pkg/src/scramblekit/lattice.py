"""Interaction graphs, balls/shells, and spatial-dimension certificates."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Set, Tuple

import numpy as np

from .errors import CertificationError

MAX_VERTICES = 1 << 20

_UNREACHED = -1


class InteractionGraph:
    """Undirected simple graph with cached all-pairs BFS distances."""

    __slots__ = ("n_vertices", "edges", "dist", "degree", "max_degree")

    def __init__(self, n_vertices: int, edges: Iterable[Tuple[int, int]]):
        if n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        if n_vertices > MAX_VERTICES:
            raise ValueError(f"graph size {n_vertices} exceeds limit {MAX_VERTICES}")
        canon = set()
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n_vertices and 0 <= v < n_vertices):
                raise ValueError(f"edge ({u},{v}) out of range")
            canon.add((min(u, v), max(u, v)))
        self.n_vertices = n_vertices
        self.edges: FrozenSet[Tuple[int, int]] = frozenset(canon)
        adj: List[List[int]] = [[] for _ in range(n_vertices)]
        for u, v in canon:
            adj[u].append(v)
            adj[v].append(u)
        self.degree = np.array([len(a) for a in adj], dtype=np.int64)
        self.max_degree = int(self.degree.max()) if n_vertices else 0
        self.dist = self._all_pairs_bfs(adj)

    def _all_pairs_bfs(self, adj) -> np.ndarray:
        n = self.n_vertices
        dist = np.full((n, n), _UNREACHED, dtype=np.int64)
        for s in range(n):
            row = dist[s]
            row[s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                du = row[u]
                for w in adj[u]:
                    if row[w] == _UNREACHED:
                        row[w] = du + 1
                        q.append(w)
        return dist

    @property
    def connected(self) -> bool:
        return not np.any(self.dist == _UNREACHED)

    @property
    def diameter(self) -> int:
        if not self.connected:
            raise CertificationError("graph is disconnected; distances are infinite")
        return int(self.dist.max())

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def __repr__(self):
        return f"InteractionGraph(n={self.n_vertices}, edges={len(self.edges)}, k={self.max_degree})"


def ball(g: InteractionGraph, v: int, d: int) -> Set[int]:
    """S_D = vertices within graph distance d of v."""
    if not 0 <= v < g.n_vertices:
        raise ValueError(f"vertex {v} out of range")
    if d < 0:
        raise ValueError("radius must be non-negative")
    row = g.dist[v]
    return {int(x) for x in np.nonzero((row >= 0) & (row <= d))[0]}


def shell(g: InteractionGraph, v: int, d: int) -> Set[int]:
    """Q_D = vertices at distance exactly d from v."""
    if d == 0:
        return {v}
    return ball(g, v, d) - ball(g, v, d - 1)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def build_lattice(d: int, length: int, periodic: bool = False) -> InteractionGraph:
    """Hypercubic lattice: L^d vertices with nearest-neighbor edges."""
    if d not in (1, 2, 3):
        raise ValueError("spatial dimension must be 1, 2 or 3")
    if length < 2:
        raise ValueError("side length must be at least 2")
    n = length ** d
    if n > MAX_VERTICES:
        raise ValueError(f"lattice size {n} exceeds limit {MAX_VERTICES}")

    def index(coords):
        i = 0
        for c in coords:
            i = i * length + c
        return i

    edges = set()
    for flat in range(n):
        coords = []
        rem = flat
        for _ in range(d):
            coords.append(rem % length)
            rem //= length
        coords = coords[::-1]
        for axis in range(d):
            nb = list(coords)
            nb[axis] += 1
            if nb[axis] == length:
                if not periodic:
                    continue
                nb[axis] = 0
            j = index(nb)
            if j != flat:
                edges.add((min(flat, j), max(flat, j)))
    return InteractionGraph(n, edges)


def complete_graph(n: int) -> InteractionGraph:
    return InteractionGraph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def single_vertex() -> InteractionGraph:
    return InteractionGraph(1, [])


# ---------------------------------------------------------------------------
# dimension certification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DimensionCertificate:
    """Tight constants for |S_D| <= c1 D^d and |Q_D| <= c2 D^{d-1}.

    Valid for every vertex and every D in [1, d_max]; D = 0 is excluded
    (the ball-volume inequality is vacuous there).
    """

    d: int
    c1: float
    c2: float
    d_max: int

    def check(self, g: InteractionGraph) -> bool:
        for v in range(g.n_vertices):
            prev = 1
            for dd in range(1, self.d_max + 1):
                s = len(ball(g, v, dd))
                if s > self.c1 * dd ** self.d + 1e-12:
                    return False
                if s - prev > self.c2 * dd ** (self.d - 1) + 1e-12:
                    return False
                prev = s
        return True


def certify_dimension(g: InteractionGraph, d: int) -> DimensionCertificate:
    """Smallest constants making the d-dimensional ball/shell bounds hold."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if not g.connected:
        raise CertificationError("graph is disconnected; distances are infinite")
    d_max = max(g.diameter, 1)
    c1 = 0.0
    c2 = 0.0
    for v in range(g.n_vertices):
        row = g.dist[v]
        sizes = np.bincount(row, minlength=d_max + 1).cumsum()
        for dd in range(1, d_max + 1):
            c1 = max(c1, sizes[dd] / dd ** d)
            c2 = max(c2, (sizes[dd] - sizes[dd - 1]) / dd ** (d - 1))
    return DimensionCertificate(d=d, c1=float(c1), c2=float(c2), d_max=d_max)


# ---------------------------------------------------------------------------
# edge-list text format: first line "N", then one "u v" pair per line
# ---------------------------------------------------------------------------

def write_edge_list(g: InteractionGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{g.n_vertices}\n")
        for u, v in sorted(g.edges):
            fh.write(f"{u} {v}\n")


def read_edge_list(path) -> InteractionGraph:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError("empty edge-list file")
    n = int(lines[0])
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {ln!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return InteractionGraph(n, edges)
