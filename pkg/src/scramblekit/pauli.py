"""Exact sparse algebra of Pauli strings and operator vectors.

Mask encoding: a Pauli string on n sites is (x_mask, z_mask, phase_power)
with bit i of x_mask set iff site i carries X or Y, bit i of z_mask iff
site i carries Z or Y, and an overall factor i^phase_power.  The
canonical (phase_power = 0) strings are Hermitian and orthonormal under
the normalized trace inner product (A|B) = 2^{-n} tr(A^dag B), which is
the inner product used everywhere in this package.

Operator vectors store {(x_mask, z_mask): coefficient} with the phase
folded into the coefficient at insertion, so string equality is a pure
mask comparison.  Coefficients below PRUNE_TOL are dropped after each
arithmetic pass.

A second, "ladder" single-site basis {1, X+, X-, Z} with
sqrt(2) X^{+-} = X +- iY (orthonormal under the same inner product) is
provided by :class:`XpmOperator`; it is the working basis of the
operator-growth protocol.
"""

from __future__ import annotations

import cmath
import math
from typing import Dict, Iterable, Tuple

import numpy as np

from .errors import DimensionMismatchError

PRUNE_TOL = 1e-14

_LETTERS = "IXYZ"
# letter -> (x bit, z bit)
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}

_XPM_LETTERS = {(0, 0): "I", (0, 1): "Z", (1, 0): "+", (1, 1): "-"}


def _popcount(v: int) -> int:
    return bin(v).count("1")


def mul_phase_power(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power k of i in S(x1,z1) S(x2,z2) = i^k S(x1^x2, z1^z2)."""
    c1 = _popcount(x1 & z1)
    c2 = _popcount(x2 & z2)
    c12 = _popcount((x1 ^ x2) & (z1 ^ z2))
    return (c1 + c2 - c12 + 2 * _popcount(z1 & x2)) % 4


def strings_commute(x1: int, z1: int, x2: int, z2: int) -> bool:
    return (_popcount(x1 & z2) + _popcount(z1 & x2)) % 2 == 0


class PauliString:
    """One element of the 4^n string basis, with an i^k prefactor."""

    __slots__ = ("n_sites", "x_mask", "z_mask", "phase_power")

    def __init__(self, n_sites: int, x_mask: int, z_mask: int, phase_power: int = 0):
        if n_sites < 1:
            raise ValueError("n_sites must be positive")
        limit = 1 << n_sites
        if not (0 <= x_mask < limit and 0 <= z_mask < limit):
            raise ValueError("mask does not fit in n_sites bits")
        self.n_sites = n_sites
        self.x_mask = x_mask
        self.z_mask = z_mask
        self.phase_power = phase_power % 4

    @classmethod
    def identity(cls, n_sites: int) -> "PauliString":
        return cls(n_sites, 0, 0)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Build from a letter string, site 0 first (e.g. "XIZ")."""
        x = z = 0
        for i, ch in enumerate(label):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r}") from None
            x |= bx << i
            z |= bz << i
        return cls(len(label), x, z)

    @classmethod
    def from_ops(cls, n_sites: int, ops: Dict[int, str]) -> "PauliString":
        """Build from {site: letter}; omitted sites are identity."""
        x = z = 0
        for site, ch in ops.items():
            if not 0 <= site < n_sites:
                raise ValueError(f"site {site} out of range")
            bx, bz = _LETTER_BITS[ch]
            x |= bx << site
            z |= bz << site
        return cls(n_sites, x, z)

    def letter(self, site: int) -> str:
        return _BITS_LETTER[((self.x_mask >> site) & 1, (self.z_mask >> site) & 1)]

    def label(self) -> str:
        return "".join(self.letter(i) for i in range(self.n_sites))

    @property
    def size(self) -> int:
        return _popcount(self.x_mask | self.z_mask)

    @property
    def support(self) -> Tuple[int, ...]:
        s = self.x_mask | self.z_mask
        return tuple(i for i in range(self.n_sites) if (s >> i) & 1)

    @property
    def phase(self) -> complex:
        return 1j ** self.phase_power

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.n_sites == other.n_sites
            and self.x_mask == other.x_mask
            and self.z_mask == other.z_mask
            and self.phase_power == other.phase_power
        )

    def __hash__(self):
        return hash((self.n_sites, self.x_mask, self.z_mask, self.phase_power))

    def __repr__(self):
        pre = {0: "", 1: "i*", 2: "-", 3: "-i*"}[self.phase_power]
        return f"{pre}{self.label()}"


def mul(p: PauliString, q: PauliString) -> PauliString:
    """Pauli group product p * q with the symplectic phase rule."""
    if p.n_sites != q.n_sites:
        raise DimensionMismatchError(
            f"cannot multiply strings on {p.n_sites} and {q.n_sites} sites"
        )
    k = mul_phase_power(p.x_mask, p.z_mask, q.x_mask, q.z_mask)
    return PauliString(
        p.n_sites,
        p.x_mask ^ q.x_mask,
        p.z_mask ^ q.z_mask,
        p.phase_power + q.phase_power + k,
    )


class OperatorVector:
    """Sparse complex combination of canonical Pauli strings."""

    __slots__ = ("n_sites", "terms", "hermitian")

    def __init__(
        self,
        n_sites: int,
        terms: Dict[Tuple[int, int], complex] | None = None,
        hermitian: bool | None = None,
    ):
        self.n_sites = n_sites
        self.terms: Dict[Tuple[int, int], complex] = dict(terms) if terms else {}
        self.hermitian = hermitian

    # -- construction -------------------------------------------------

    @classmethod
    def zero(cls, n_sites: int) -> "OperatorVector":
        return cls(n_sites)

    @classmethod
    def from_pauli(cls, p: PauliString, coeff: complex = 1.0) -> "OperatorVector":
        c = complex(coeff) * p.phase
        return cls(p.n_sites, {(p.x_mask, p.z_mask): c} if abs(c) > 0 else {})

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "OperatorVector":
        return cls.from_pauli(PauliString.from_label(label), coeff)

    def copy(self) -> "OperatorVector":
        return OperatorVector(self.n_sites, self.terms, self.hermitian)

    # -- bookkeeping ---------------------------------------------------

    def _check_same(self, other: "OperatorVector"):
        if self.n_sites != other.n_sites:
            raise DimensionMismatchError(
                f"operators on {self.n_sites} and {other.n_sites} sites"
            )

    def prune(self, tol: float = PRUNE_TOL) -> "OperatorVector":
        self.terms = {k: v for k, v in self.terms.items() if abs(v) > tol}
        return self

    def add_string(self, x: int, z: int, coeff: complex):
        key = (x, z)
        c = self.terms.get(key, 0.0) + coeff
        if abs(c) > PRUNE_TOL:
            self.terms[key] = c
        elif key in self.terms:
            del self.terms[key]

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"OperatorVector(n_sites={self.n_sites}, n_terms={len(self.terms)})"

    # -- linear structure ----------------------------------------------

    def __add__(self, other: "OperatorVector") -> "OperatorVector":
        self._check_same(other)
        out = self.copy()
        for k, v in other.terms.items():
            out.add_string(k[0], k[1], v)
        out.hermitian = self.hermitian if self.hermitian == other.hermitian else None
        return out

    def __sub__(self, other: "OperatorVector") -> "OperatorVector":
        return self + (other * -1.0)

    def __mul__(self, scalar: complex) -> "OperatorVector":
        s = complex(scalar)
        out = OperatorVector(
            self.n_sites,
            {k: v * s for k, v in self.terms.items()},
            self.hermitian if s.imag == 0 else None,
        )
        return out.prune()

    __rmul__ = __mul__

    # -- products -------------------------------------------------------

    def matmul(self, other: "OperatorVector") -> "OperatorVector":
        """Operator product A B."""
        self._check_same(other)
        out = OperatorVector.zero(self.n_sites)
        for (x1, z1), c1 in self.terms.items():
            for (x2, z2), c2 in other.terms.items():
                k = mul_phase_power(x1, z1, x2, z2)
                out.add_string(x1 ^ x2, z1 ^ z2, c1 * c2 * (1j ** k))
        return out.prune()

    def __matmul__(self, other):
        return self.matmul(other)

    def dagger(self) -> "OperatorVector":
        return OperatorVector(
            self.n_sites, {k: v.conjugate() for k, v in self.terms.items()}
        )

    # -- inner product and norms -----------------------------------------

    def norm2(self) -> float:
        return float(sum((v * v.conjugate()).real for v in self.terms.values()))

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        """Reality of all coefficients in the canonical-phase basis."""
        return all(abs(v.imag) <= tol for v in self.terms.values())


def commutator(a: OperatorVector, b: OperatorVector) -> OperatorVector:
    """[A, B] = AB - BA, using that string pairs either commute or anticommute."""
    a._check_same(b)
    out = OperatorVector.zero(a.n_sites)
    for (x1, z1), c1 in a.terms.items():
        for (x2, z2), c2 in b.terms.items():
            if strings_commute(x1, z1, x2, z2):
                continue
            k = mul_phase_power(x1, z1, x2, z2)
            out.add_string(x1 ^ x2, z1 ^ z2, 2.0 * c1 * c2 * (1j ** k))
    return out.prune()


def inner_product(a: OperatorVector, b: OperatorVector) -> complex:
    """(A|B) = 2^{-n} tr(A^dag B), exact in the orthonormal string basis."""
    a._check_same(b)
    small, big = (a, b) if len(a.terms) <= len(b.terms) else (b, a)
    acc = 0.0 + 0.0j
    for k, v in small.terms.items():
        w = big.terms.get(k)
        if w is not None:
            if small is a:
                acc += v.conjugate() * w
            else:
                acc += w.conjugate() * v
    return acc


def project_sites(a: OperatorVector, sites: Iterable[int]) -> OperatorVector:
    """Keep strings with a non-identity letter on at least one site of S."""
    mask = 0
    for s in sites:
        mask |= 1 << s
    terms = {k: v for k, v in a.terms.items() if (k[0] | k[1]) & mask}
    return OperatorVector(a.n_sites, terms)


def project_size(a: OperatorVector, s: int) -> OperatorVector:
    """Keep strings with exactly s non-identity letters."""
    if not 0 <= s <= a.n_sites:
        raise ValueError(f"size {s} out of range [0, {a.n_sites}]")
    terms = {k: v for k, v in a.terms.items() if _popcount(k[0] | k[1]) == s}
    return OperatorVector(a.n_sites, terms)


class SizeDistribution:
    """Weights (A|Q_s|A) indexed by string size s = 0 .. n_sites."""

    __slots__ = ("probs",)

    def __init__(self, probs: np.ndarray):
        self.probs = np.asarray(probs, dtype=np.float64)

    def total(self) -> float:
        return float(self.probs.sum())

    def mean(self) -> float:
        s = np.arange(self.probs.size)
        return float((s * self.probs).sum())

    def __getitem__(self, s):
        return float(self.probs[s])


def size_distribution(a: OperatorVector) -> SizeDistribution:
    probs = np.zeros(a.n_sites + 1)
    for (x, z), v in a.terms.items():
        probs[_popcount(x | z)] += (v * v.conjugate()).real
    return SizeDistribution(probs)


def average_size(a: OperatorVector, normalize: bool = False) -> float:
    """sum_j (A|P_j|A) for unit-norm A; equals the size-distribution mean.

    With normalize=True the squared norm is divided out instead of
    requiring unit norm.
    """
    n2 = a.norm2()
    if not normalize and abs(n2 - 1.0) > 1e-9:
        raise ValueError(f"operator norm^2 = {n2:.6g}, expected 1 (or pass normalize=True)")
    acc = 0.0
    for (x, z), v in a.terms.items():
        acc += _popcount(x | z) * (v * v.conjugate()).real
    return acc / n2 if normalize else acc


def site_weights(a: OperatorVector) -> np.ndarray:
    """Array of (A|P_j|A) for every site j."""
    out = np.zeros(a.n_sites)
    for (x, z), v in a.terms.items():
        supp = x | z
        w = (v * v.conjugate()).real
        i = 0
        while supp:
            if supp & 1:
                out[i] += w
            supp >>= 1
            i += 1
    return out


# ---------------------------------------------------------------------------
# ladder basis {1, X+, X-, Z}
# ---------------------------------------------------------------------------

_SQRT_HALF = 1.0 / math.sqrt(2.0)


class XpmOperator:
    """Sparse operator in the per-site basis {1, X+, X-, Z}.

    Letter encoding per site in two masks (u, v):
    (0,0) = 1, (0,1) = Z, (1,0) = X+, (1,1) = X-.
    The basis is orthonormal under (A|B) = 2^{-n} tr(A^dag B), so norms
    and size projections read off the coefficients exactly as in the
    canonical basis.
    """

    __slots__ = ("n_sites", "terms")

    def __init__(self, n_sites: int, terms: Dict[Tuple[int, int], complex] | None = None):
        self.n_sites = n_sites
        self.terms: Dict[Tuple[int, int], complex] = dict(terms) if terms else {}

    @classmethod
    def single(cls, n_sites: int, site: int, letter: str, coeff: complex = 1.0) -> "XpmOperator":
        bits = {"I": (0, 0), "Z": (0, 1), "+": (1, 0), "-": (1, 1)}[letter]
        return cls(n_sites, {(bits[0] << site, bits[1] << site): complex(coeff)})

    def letter(self, key: Tuple[int, int], site: int) -> str:
        return _XPM_LETTERS[((key[0] >> site) & 1, (key[1] >> site) & 1)]

    def add_string(self, u: int, v: int, coeff: complex):
        key = (u, v)
        c = self.terms.get(key, 0.0) + coeff
        if abs(c) > PRUNE_TOL:
            self.terms[key] = c
        elif key in self.terms:
            del self.terms[key]

    def norm2(self) -> float:
        return float(sum((v * v.conjugate()).real for v in self.terms.values()))

    def size_distribution(self) -> SizeDistribution:
        probs = np.zeros(self.n_sites + 1)
        for (u, v), c in self.terms.items():
            probs[_popcount(u | v)] += (c * c.conjugate()).real
        return SizeDistribution(probs)

    def average_size(self) -> float:
        return sum(
            _popcount(u | v) * (c * c.conjugate()).real for (u, v), c in self.terms.items()
        )

    def __len__(self):
        return len(self.terms)


def to_xpm(a: OperatorVector) -> XpmOperator:
    """Change of basis {1,X,Y,Z} -> {1,X+,X-,Z} on every site."""
    out = XpmOperator(a.n_sites)
    for (x, z), c in a.terms.items():
        # ladder sites: letters X or Y (x bit set); Z and 1 carry over.
        expansion = [(0, z & ~x, c)]
        m = x
        while m:
            site_bit = m & (-m)
            m ^= site_bit
            is_y = bool(z & site_bit)
            new = []
            for u, v, amp in expansion:
                if is_y:
                    # Y = -i (X+ - X-)/sqrt(2)
                    new.append((u | site_bit, v, amp * (-1j) * _SQRT_HALF))
                    new.append((u | site_bit, v | site_bit, amp * 1j * _SQRT_HALF))
                else:
                    # X = (X+ + X-)/sqrt(2)
                    new.append((u | site_bit, v, amp * _SQRT_HALF))
                    new.append((u | site_bit, v | site_bit, amp * _SQRT_HALF))
            expansion = new
        for u, v, amp in expansion:
            out.add_string(u, v, amp)
    return out


def from_xpm(a: XpmOperator) -> OperatorVector:
    """Inverse basis change; round-trips with :func:`to_xpm`."""
    out = OperatorVector.zero(a.n_sites)
    for (u, v), c in a.terms.items():
        expansion = [(0, v & ~u, c)]
        m = u
        while m:
            site_bit = m & (-m)
            m ^= site_bit
            is_minus = bool(v & site_bit)
            new = []
            for x, z, amp in expansion:
                # X+- = (X +- iY)/sqrt(2)
                sgn = -1.0 if is_minus else 1.0
                new.append((x | site_bit, z, amp * _SQRT_HALF))
                new.append((x | site_bit, z | site_bit, amp * sgn * 1j * _SQRT_HALF))
            expansion = new
        for x, z, amp in expansion:
            out.add_string(x, z, amp)
    return out.prune()


# ---------------------------------------------------------------------------
# dense conversion (2^n matrices; for small-n work and conversions)
# ---------------------------------------------------------------------------

def to_dense(a: OperatorVector) -> np.ndarray:
    """Dense 2^n x 2^n matrix of the operator."""
    n = a.n_sites
    dim = 1 << n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim, dtype=np.uint64)
    for (x, z), c in a.terms.items():
        # S(x,z)[s^x, s] = i^{pc(x&z)} * (-1)^{pc(s & z)}
        phase = 1j ** (_popcount(x & z) % 4)
        signs = 1.0 - 2.0 * (np.bitwise_count(cols & np.uint64(z)) & np.uint64(1)).astype(np.float64)
        mat[cols ^ np.uint64(x), cols] += c * phase * signs
    return mat


def from_dense(mat: np.ndarray, n_sites: int, tol: float = PRUNE_TOL) -> OperatorVector:
    """Sparse Pauli form of a dense matrix (drops coefficients <= tol)."""
    from . import _kernels

    coeff = _kernels.dense_to_coeff(np.asarray(mat, dtype=np.complex128), n_sites)
    xs, zs = np.nonzero(np.abs(coeff) > tol)
    terms = {(int(x), int(z)): complex(coeff[x, z]) for x, z in zip(xs, zs)}
    return OperatorVector(n_sites, terms)
