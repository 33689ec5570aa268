"""Two-body all-to-all plus lattice Hamiltonians with piecewise-constant schedules.

H(t) per segment:

    H = sum_{i<j} sum_{A,B} J[i,j][A,B] N^{-alpha} X^A_i X^B_j
      + sum_{{i,j} in E} sum_{A,B} K[i,j][A,B] X^A_i X^B_j
      + sum_i sum_A h[i,A] X^A_i

with letters A, B in {X, Y, Z}.  Couplings are stored canonically per
unordered pair (i < j): J[i,j][A,B] is THE coefficient of the string
X^A_i X^B_j.  An ordered coupling matrix (both (i,j) and (j,i) entries)
can be folded into this form with :func:`fold_ordered_couplings`, which
sums J_ij^{AB} + J_ji^{BA}; note the folded value of an all-ones ordered
matrix is 2 per pair.  The hypothesis checked by :func:`validate`
(|J| <= 1, |K| <= 1) applies to the canonical values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .lattice import InteractionGraph, ball
from .pauli import OperatorVector

LETTERS = ("X", "Y", "Z")
_LETTER_IDX = {"X": 0, "Y": 1, "Z": 2}
# (x bit, z bit) per letter index
_BITS = ((1, 0), (1, 1), (0, 1))

PairCouplings = Dict[Tuple[int, int], np.ndarray]  # (i<j) -> 3x3 coefficients


def channel_matrix(entries: Dict[str, float]) -> np.ndarray:
    """3x3 coupling block from {"ZZ": 1.0, "XY": -0.3, ...}."""
    m = np.zeros((3, 3))
    for key, val in entries.items():
        a, b = key[0], key[1]
        m[_LETTER_IDX[a], _LETTER_IDX[b]] = val
    return m


@dataclass
class Segment:
    duration: float
    J: PairCouplings = field(default_factory=dict)
    K: PairCouplings = field(default_factory=dict)
    h: Optional[np.ndarray] = None  # (n, 3)

    def fields(self, n: int) -> np.ndarray:
        if self.h is None:
            return np.zeros((n, 3))
        return np.asarray(self.h, dtype=np.float64)


@dataclass
class Violation:
    kind: str
    segment: int
    index: tuple
    value: float
    limit: float

    def __str__(self):
        return (
            f"segment {self.segment}: {self.kind} at {self.index} "
            f"has |value| {abs(self.value):.6g} (limit {self.limit:.6g})"
        )


class HamiltonianSpec:
    """Graph, all-to-all exponent, and a piecewise-constant schedule."""

    def __init__(self, graph: InteractionGraph, alpha: float, segments: List[Segment]):
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not segments:
            raise ValueError("schedule needs at least one segment")
        self.graph = graph
        self.alpha = float(alpha)
        self.segments = list(segments)

    @property
    def n_sites(self) -> int:
        return self.graph.n_vertices

    @property
    def total_time(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def segment_boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([s.duration for s in self.segments])])

    def __repr__(self):
        return (
            f"HamiltonianSpec(n={self.n_sites}, alpha={self.alpha}, "
            f"segments={len(self.segments)})"
        )


def fold_ordered_couplings(ordered: np.ndarray) -> PairCouplings:
    """Canonical per-pair couplings from an ordered (n, n, 3, 3) array.

    The (i, j) and (j, i) entries address the same string X^A_i X^B_j,
    so they fold as J_ij^{AB} + J_ji^{BA}.
    """
    n = ordered.shape[0]
    out: PairCouplings = {}
    for i in range(n):
        for j in range(i + 1, n):
            block = ordered[i, j] + ordered[j, i].T
            if np.any(block != 0.0):
                out[(i, j)] = np.array(block, dtype=np.float64)
    return out


def validate(spec: HamiltonianSpec) -> List[Violation]:
    """Check the coupling-magnitude and structural invariants.

    Returns an empty list when the spec is valid, otherwise one entry
    per offending coupling/duration.
    """
    out: List[Violation] = []
    n = spec.n_sites
    for s_idx, seg in enumerate(spec.segments):
        if not seg.duration > 0:
            out.append(Violation("duration", s_idx, (), seg.duration, 0.0))
        for name, coup in (("J", seg.J), ("K", seg.K)):
            for (i, j), block in coup.items():
                if not (0 <= i < j < n):
                    out.append(Violation(f"{name}-pair", s_idx, (i, j), 0.0, 0.0))
                    continue
                if name == "K" and not spec.graph.has_edge(i, j):
                    out.append(Violation("K-non-edge", s_idx, (i, j), 0.0, 0.0))
                block = np.asarray(block)
                for a in range(3):
                    for b in range(3):
                        if abs(block[a, b]) > 1.0 + 1e-12:
                            out.append(
                                Violation(
                                    f"{name}-magnitude",
                                    s_idx,
                                    (i, j, LETTERS[a], LETTERS[b]),
                                    float(block[a, b]),
                                    1.0,
                                )
                            )
        h = seg.fields(n)
        if h.shape != (n, 3):
            out.append(Violation("h-shape", s_idx, tuple(h.shape), 0.0, 0.0))
    return out


def _pair_string(n: int, i: int, a: int, j: int, b: int) -> Tuple[int, int]:
    xa, za = _BITS[a]
    xb, zb = _BITS[b]
    return (xa << i) | (xb << j), (za << i) | (zb << j)


def _site_string(i: int, a: int) -> Tuple[int, int]:
    xa, za = _BITS[a]
    return xa << i, za << i


def term_list(spec: HamiltonianSpec, segment: int):
    """All (x_mask, z_mask, coefficient, tag, pair) terms of one segment.

    tag is "J", "K" or "h"; pair is (i, j) or (i,) for fields.  The
    all-to-all terms carry the N^{-alpha} scale.
    """
    seg = spec.segments[segment]
    n = spec.n_sites
    scale = n ** (-spec.alpha)
    terms = []
    for (i, j), block in sorted(seg.J.items()):
        block = np.asarray(block)
        for a in range(3):
            for b in range(3):
                c = block[a, b]
                if c != 0.0:
                    x, z = _pair_string(n, i, a, j, b)
                    terms.append((x, z, c * scale, "J", (i, j)))
    for (i, j), block in sorted(seg.K.items()):
        block = np.asarray(block)
        for a in range(3):
            for b in range(3):
                c = block[a, b]
                if c != 0.0:
                    x, z = _pair_string(n, i, a, j, b)
                    terms.append((x, z, float(c), "K", (i, j)))
    h = seg.fields(n)
    for i in range(n):
        for a in range(3):
            c = h[i, a]
            if c != 0.0:
                x, z = _site_string(i, a)
                terms.append((x, z, float(c), "h", (i,)))
    return terms


def materialize(spec: HamiltonianSpec, segment: int) -> OperatorVector:
    """Sparse Pauli sum of one schedule segment (Hermitian)."""
    op = OperatorVector.zero(spec.n_sites)
    for x, z, c, _tag, _pair in term_list(spec, segment):
        op.add_string(x, z, c)
    op.hermitian = True
    return op


@dataclass
class RegionDecomposition:
    """The five-way split of one segment relative to a ball S_D.

    inside:            lattice terms (K, h) supported entirely in S_D
    boundary:          K terms with exactly one endpoint in S_D
    outside:           lattice terms supported entirely outside S_D
    nonlocal_inside:   all-to-all terms touching S_D
    nonlocal_outside:  all-to-all terms entirely outside S_D
    """

    inside: OperatorVector
    boundary: OperatorVector
    outside: OperatorVector
    nonlocal_inside: OperatorVector
    nonlocal_outside: OperatorVector

    def recompose(self) -> OperatorVector:
        return (
            self.inside
            + self.boundary
            + self.outside
            + self.nonlocal_inside
            + self.nonlocal_outside
        )


def decompose(spec: HamiltonianSpec, segment: int, v: int, d: int) -> RegionDecomposition:
    if d < 0:
        raise ValueError("radius must be non-negative")
    n = spec.n_sites
    in_ball = ball(spec.graph, v, d)
    parts = {name: OperatorVector.zero(n) for name in
             ("inside", "boundary", "outside", "nonlocal_inside", "nonlocal_outside")}
    for x, z, c, tag, pair in term_list(spec, segment):
        if tag == "J":
            touches = any(p in in_ball for p in pair)
            name = "nonlocal_inside" if touches else "nonlocal_outside"
        elif tag == "K":
            inside_count = sum(p in in_ball for p in pair)
            name = ("outside", "boundary", "inside")[inside_count]
        else:
            name = "inside" if pair[0] in in_ball else "outside"
        parts[name].add_string(x, z, c)
    for p in parts.values():
        p.hermitian = True
    return RegionDecomposition(**parts)


def frobenius_norm_nl(spec: HamiltonianSpec, segment: int, v: int, d: int) -> float:
    """Exact normalized Frobenius norm of the ball-touching all-to-all part.

    The strings are orthonormal, so the squared norm is the sum of
    squared coefficients; with canonical |J| <= 1 it is bounded by
    9 |S_D| N^{1-2 alpha}.
    """
    dec = decompose(spec, segment, v, d)
    return float(np.sqrt(dec.nonlocal_inside.norm2()))


def opnorm_bound_hd(spec: HamiltonianSpec, segment: int, v: int, d: int) -> float:
    """Triangle-inequality operator-norm bound on the boundary part.

    Every Pauli string has operator norm 1, so sum |K^{AB}| over
    boundary terms bounds ||H_D||.
    """
    dec = decompose(spec, segment, v, d)
    return float(sum(abs(c) for c in dec.boundary.terms.values()))


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def uniform_J(n: int, channel: str = "ZZ", value: float = 1.0) -> PairCouplings:
    """The same coupling on every pair, single (A,B) channel."""
    block = channel_matrix({channel: value})
    return {(i, j): block.copy() for i in range(n) for j in range(i + 1, n)}


def random_pm1_J(n: int, rng: np.random.Generator, channel: str = "ZZ") -> PairCouplings:
    """Independent +-1 couplings on every pair, single channel."""
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            out[(i, j)] = channel_matrix({channel: float(rng.choice([-1.0, 1.0]))})
    return out


def random_J(n: int, rng: np.random.Generator, full_channels: bool = True) -> PairCouplings:
    """Uniform[-1, 1] couplings; all nine channels or ZZ only."""
    out = {}
    for i in range(n):
        for j in range(i + 1, n):
            if full_channels:
                out[(i, j)] = rng.uniform(-1.0, 1.0, size=(3, 3))
            else:
                out[(i, j)] = channel_matrix({"ZZ": float(rng.uniform(-1.0, 1.0))})
    return out


def random_K(graph: InteractionGraph, rng: np.random.Generator,
             full_channels: bool = True) -> PairCouplings:
    out = {}
    for (i, j) in sorted(graph.edges):
        if full_channels:
            out[(i, j)] = rng.uniform(-1.0, 1.0, size=(3, 3))
        else:
            out[(i, j)] = channel_matrix({"ZZ": float(rng.uniform(-1.0, 1.0))})
    return out


def uniform_fields(n: int, hvec) -> np.ndarray:
    return np.tile(np.asarray(hvec, dtype=np.float64), (n, 1))


def random_fields(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    return rng.uniform(-scale, scale, size=(n, 3))


def two_site_zz(j_coupling: float = 1.0) -> HamiltonianSpec:
    """H = J Z_0 Z_1 on two sites (alpha = 0); the closed-form test model."""
    g = InteractionGraph(2, [(0, 1)])
    seg = Segment(duration=1e9, J={(0, 1): channel_matrix({"ZZ": j_coupling})})
    return HamiltonianSpec(g, alpha=0.0, segments=[seg])


# ---------------------------------------------------------------------------
# permutation-symmetric structure detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollectiveSegment:
    duration: float
    lam: float          # coefficient of each Z_i Z_j string (N^{-alpha} folded in)
    h: Tuple[float, float, float]


def collective_form(spec: HamiltonianSpec) -> Optional[List[CollectiveSegment]]:
    """Per-segment collective parameters if the spec is permutation symmetric.

    Requires K = 0, J uniform over all pairs in the ZZ channel only, and
    site-uniform fields.  Returns None otherwise.
    """
    n = spec.n_sites
    n_pairs = n * (n - 1) // 2
    scale = n ** (-spec.alpha)
    out = []
    for seg in spec.segments:
        if seg.K:
            return None
        if len(seg.J) != n_pairs:
            return None
        blocks = list(seg.J.values())
        ref = np.asarray(blocks[0])
        zz = ref[2, 2]
        mask = np.zeros((3, 3))
        mask[2, 2] = zz
        if not np.array_equal(ref, mask):
            return None
        for b in blocks[1:]:
            if not np.array_equal(np.asarray(b), ref):
                return None
        h = seg.fields(n)
        if not np.all(h == h[0]):
            return None
        out.append(CollectiveSegment(seg.duration, float(zz * scale), tuple(h[0])))
    return out
