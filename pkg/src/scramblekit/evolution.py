"""Exact Heisenberg-picture evolution, OTOCs, and scrambling-time scans.

Two cross-validating backends:

* dense: 2^n matrices per schedule segment, exact segment exponentials
  via eigendecomposition (no Trotter error), O(t) = U^dag O U;
* superop: the linear ODE d|O)/dt = i[H(t), O] integrated adaptively in
  Pauli-coefficient space (a dense 4^n vector for small n, a sparse map
  otherwise).

A third exact backend for permutation-symmetric specs lives in
:mod:`scramblekit.collective` and is picked automatically where valid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernels
from .errors import CapacityError, IntegrationError
from .hamiltonian import HamiltonianSpec, collective_form, term_list
from .pauli import (
    OperatorVector,
    PauliString,
    commutator,
    from_dense,
    to_dense,
)

DENSE_SITE_LIMIT = 12
SUPEROP_DENSE_LIMIT = 8


@dataclass
class EvolutionResult:
    operator: OperatorVector
    backend: str
    steps: int
    max_local_error: float
    norm_drift: float


def seed_operator(n: int, site: int, letter: str) -> OperatorVector:
    return OperatorVector.from_pauli(PauliString.from_ops(n, {site: letter}))


# ---------------------------------------------------------------------------
# dense backend
# ---------------------------------------------------------------------------

def build_dense_segment(spec: HamiltonianSpec, segment: int) -> np.ndarray:
    """Dense 2^n Hamiltonian matrix of one segment."""
    n = spec.n_sites
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=np.complex128)
    cols = np.arange(dim, dtype=np.uint64)
    for x, z, c, _tag, _pair in term_list(spec, segment):
        phase = 1j ** (bin(x & z).count("1") % 4)
        signs = 1.0 - 2.0 * (np.bitwise_count(cols & np.uint64(z)) & np.uint64(1)).astype(np.float64)
        h[cols ^ np.uint64(x), cols] += c * phase * signs
    return h


class DensePropagator:
    """Cached eigendecompositions serving U(t) for any t in the schedule."""

    def __init__(self, spec: HamiltonianSpec, dense_limit: int = DENSE_SITE_LIMIT):
        if spec.n_sites > dense_limit:
            raise CapacityError(
                f"dense backend limited to {dense_limit} sites, got {spec.n_sites}"
            )
        self.spec = spec
        self.n = spec.n_sites
        self.boundaries = spec.segment_boundaries()
        self._eigs: Dict[int, Tuple[np.ndarray, np.ndarray]] = {}
        self._cum: List[Optional[np.ndarray]] = [None] * (len(spec.segments) + 1)
        dim = 1 << self.n
        self._cum[0] = np.eye(dim, dtype=np.complex128)

    def _eig(self, k: int):
        if k not in self._eigs:
            h = build_dense_segment(self.spec, k)
            w, v = np.linalg.eigh(h)
            self._eigs[k] = (w, v)
        return self._eigs[k]

    def _cum_unitary(self, k: int) -> np.ndarray:
        """Product of the full segment propagators 0 .. k-1."""
        if self._cum[k] is None:
            prev = self._cum_unitary(k - 1)
            w, v = self._eig(k - 1)
            dt = self.spec.segments[k - 1].duration
            u_seg = (v * np.exp(-1j * w * dt)) @ v.conj().T
            self._cum[k] = u_seg @ prev
        return self._cum[k]

    def _locate(self, t: float) -> Tuple[int, float]:
        total = self.boundaries[-1]
        if t < -1e-12 or t > total + 1e-9:
            raise ValueError(f"time {t} outside schedule [0, {total}]")
        t = min(max(t, 0.0), total)
        k = int(np.searchsorted(self.boundaries, t, side="right") - 1)
        k = min(k, len(self.spec.segments) - 1)
        return k, t - self.boundaries[k]

    def unitary(self, t: float) -> np.ndarray:
        k, tau = self._locate(t)
        w, v = self._eig(k)
        u_local = (v * np.exp(-1j * w * tau)) @ v.conj().T
        return u_local @ self._cum_unitary(k)

    def heisenberg_dense(self, op: np.ndarray, t: float) -> np.ndarray:
        u = self.unitary(t)
        return u.conj().T @ op @ u

    def evolve(self, a0: OperatorVector, t: float) -> EvolutionResult:
        mat = self.heisenberg_dense(to_dense(a0), t)
        out = from_dense(mat, self.n)
        drift = abs(out.norm2() - a0.norm2())
        return EvolutionResult(out, "dense", 1, 0.0, drift)

    def evolved_coeff(self, op_mat: np.ndarray, t: float) -> np.ndarray:
        """Pauli coefficient matrix of U(t)^dag op U(t)."""
        return _kernels.dense_to_coeff(self.heisenberg_dense(op_mat, t), self.n)


def evolve_dense(
    spec: HamiltonianSpec,
    a0: OperatorVector,
    t: float,
    dense_limit: int = DENSE_SITE_LIMIT,
) -> EvolutionResult:
    return DensePropagator(spec, dense_limit).evolve(a0, t)


# ---------------------------------------------------------------------------
# superoperator backend
# ---------------------------------------------------------------------------

def _segment_term_arrays(spec: HamiltonianSpec, k: int):
    terms = term_list(spec, k)
    tx = np.array([t[0] for t in terms], dtype=np.uint64)
    tz = np.array([t[1] for t in terms], dtype=np.uint64)
    tc = np.array([t[2] for t in terms], dtype=np.float64)
    return tx, tz, tc


def _segment_spans(spec: HamiltonianSpec, t: float):
    """Per-segment integration spans for O(t) = U(t)^dag O U(t).

    The map of the segment containing t acts on the operator first and
    the earliest segment acts last, so spans are emitted latest-first.
    """
    boundaries = spec.segment_boundaries()
    if t > boundaries[-1] + 1e-9:
        raise ValueError(f"time {t} outside schedule [0, {boundaries[-1]}]")
    t = min(t, boundaries[-1])
    spans = []
    for k in range(len(spec.segments)):
        if boundaries[k] >= t - 1e-15:
            break
        spans.append((k, min(t, boundaries[k + 1]) - boundaries[k]))
    return spans[::-1]


def _superop_dense(spec: HamiltonianSpec, a0: OperatorVector, t: float, tol: float):
    n = spec.n_sites
    dim = 1 << n
    vec = np.zeros(dim * dim, dtype=np.complex128)
    for (x, z), c in a0.terms.items():
        vec[(x << n) | z] = c
    steps = 0
    scratch = np.empty_like(vec)
    for k, span in _segment_spans(spec, t):
        tx, tz, tc = _segment_term_arrays(spec, k)

        def rhs(_s, y):
            _kernels.liouvillian_apply(tx, tz, tc, y, n, scratch)
            return scratch.copy()

        sol = solve_ivp(
            rhs,
            (0.0, span),
            vec,
            method="RK45",
            rtol=tol,
            atol=tol * 1e-2,
            dense_output=False,
        )
        if not sol.success:
            raise IntegrationError(
                f"segment {k}: integrator stopped at t={sol.t[-1]:.6g} "
                f"({sol.message}); tol={tol}"
            )
        vec = sol.y[:, -1].copy()
        steps += sol.t.size - 1
    out = OperatorVector.zero(n)
    idx = np.nonzero(np.abs(vec) > 1e-14)[0]
    for i in idx:
        out.add_string(int(i) >> n, int(i) & (dim - 1), complex(vec[i]))
    drift = abs(out.norm2() - a0.norm2())
    return EvolutionResult(out, "superop-dense", steps, tol, drift)


# Dormand-Prince RK45 tableau for the sparse path.
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (
    5179 / 57600,
    0.0,
    7571 / 16695,
    393 / 640,
    -92097 / 339200,
    187 / 2100,
    1 / 40,
)


def _lincomb(n: int, base: OperatorVector, pairs) -> OperatorVector:
    out = base.copy()
    for coef, vec in pairs:
        if coef == 0.0:
            continue
        for k, v in vec.terms.items():
            out.add_string(k[0], k[1], coef * v)
    return out.prune()


def _superop_sparse(spec: HamiltonianSpec, a0: OperatorVector, t: float, tol: float):
    n = spec.n_sites
    y = a0.copy()
    steps = 0
    max_err = 0.0
    for k, span in _segment_spans(spec, t):
        h_op = OperatorVector.zero(n)
        for x, z, c, _tag, _pair in term_list(spec, k):
            h_op.add_string(x, z, c)

        def rhs(vec: OperatorVector) -> OperatorVector:
            return commutator(h_op, vec) * 1j

        t_end = span
        dt = min(span, 0.1 / max(1.0, sum(abs(c) for c in h_op.terms.values())))
        t_cur = 0.0
        min_dt = max(span, 1.0) * 1e-13
        while t_cur < t_end - 1e-15:
            dt = min(dt, t_end - t_cur)
            if dt < min_dt:
                raise IntegrationError(
                    f"step underflow at t={t_cur:.6g} (dt={dt:.3g}, tol={tol}); "
                    "the generator is too stiff for the requested tolerance"
                )
            stages = []
            for row in range(7):
                arg = _lincomb(
                    n, y, [(dt * a, stages[j]) for j, a in enumerate(_DP_A[row])]
                )
                stages.append(rhs(arg))
            y5 = _lincomb(n, y, [(dt * b, stages[j]) for j, b in enumerate(_DP_B5)])
            y4 = _lincomb(n, y, [(dt * b, stages[j]) for j, b in enumerate(_DP_B4)])
            err = (y5 - y4).norm()
            scale = tol * max(1.0, y.norm())
            if err <= scale:
                y = y5
                t_cur += dt
                steps += 1
                max_err = max(max_err, err)
                factor = 2.0 if err == 0.0 else 0.9 * (scale / err) ** 0.2
                dt *= min(3.0, max(0.3, factor))
            else:
                dt *= max(0.1, 0.9 * (scale / err) ** 0.25)
    drift = abs(y.norm2() - a0.norm2())
    return EvolutionResult(y, "superop-sparse", steps, max_err, drift)


def evolve_superop(
    spec: HamiltonianSpec,
    a0: OperatorVector,
    t: float,
    tol: float = 1e-10,
    dense_site_limit: int = SUPEROP_DENSE_LIMIT,
) -> EvolutionResult:
    if spec.n_sites <= dense_site_limit:
        return _superop_dense(spec, a0, t, tol)
    return _superop_sparse(spec, a0, t, tol)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

_SIZE_TABLES: Dict[int, np.ndarray] = {}


def _size_table(n: int) -> np.ndarray:
    if n not in _SIZE_TABLES:
        idx = np.arange(1 << n, dtype=np.uint64)
        _SIZE_TABLES[n] = _kernels.popcount(np.bitwise_or.outer(idx, idx)).astype(
            np.float64
        )
    return _SIZE_TABLES[n]


@dataclass
class OtocSample:
    t: float
    i: int
    j: int
    otoc: float
    projector_weight: float  # (X_i(t)|P_j|X_i(t))

    @property
    def bound(self) -> float:
        return 4.0 * self.projector_weight

    @property
    def slack(self) -> float:
        return self.bound - abs(self.otoc)


def otoc(
    spec: HamiltonianSpec,
    i: int,
    j: int,
    t: float,
    propagator: Optional[DensePropagator] = None,
) -> float:
    return otoc_sample(spec, i, j, t, propagator).otoc


def otoc_sample(
    spec: HamiltonianSpec,
    i: int,
    j: int,
    t: float,
    propagator: Optional[DensePropagator] = None,
) -> OtocSample:
    """2^{-n} tr([X_i(t), X_j]^2) plus the projector weight bounding it.

    The commutator of Hermitian operators is anti-Hermitian, so the value
    is -(C|C) <= 0 with C = [X_i(t), X_j].
    """
    prop = propagator or DensePropagator(spec)
    xi_t = prop.evolve(seed_operator(spec.n_sites, i, "X"), t).operator
    xj = seed_operator(spec.n_sites, j, "X")
    comm = commutator(xi_t, xj)
    value = -comm.norm2()
    weight = sum(
        (v * v.conjugate()).real
        for (x, z), v in xi_t.terms.items()
        if ((x | z) >> j) & 1
    )
    return OtocSample(t, i, j, float(value), float(weight))


def size_quadratic_form(
    spec: HamiltonianSpec,
    i: int,
    t: float,
    propagator: Optional[DensePropagator] = None,
) -> np.ndarray:
    """M[A,B] = sum_j (X^A_i(t)|P_j|X^B_i(t)) over letters A, B = X, Y, Z.

    Real symmetric; its largest eigenvalue is the sup of average operator
    size over unit-norm traceless single-site seeds at site i.
    """
    prop = propagator or DensePropagator(spec)
    n = spec.n_sites
    table = _size_table(n)
    coeffs = [
        prop.evolved_coeff(to_dense(seed_operator(n, i, letter)), t)
        for letter in ("X", "Y", "Z")
    ]
    m = np.empty((3, 3))
    for a in range(3):
        for b in range(a, 3):
            val = np.sum(table * np.conj(coeffs[a]) * coeffs[b])
            m[a, b] = m[b, a] = val.real
    return m


def sup_site_size(m: np.ndarray, complex_coefficients: bool = False) -> float:
    """Largest size reachable by a unit-norm single-site seed.

    The form is real symmetric, so the sup over complex coefficient
    vectors (Hermitian ladder combinations) coincides with the real sup;
    the flag exists to make that choice explicit.
    """
    sym = 0.5 * (m + m.T)
    return float(np.linalg.eigvalsh(sym)[-1])


@dataclass
class ScramblingResult:
    t_s: Optional[float]
    reached: bool
    threshold: float
    grid_times: np.ndarray
    grid_sizes: np.ndarray
    source: Optional[int]

    @property
    def status(self) -> str:
        return "reached" if self.reached else "not-reached"


def scrambling_time(
    spec: HamiltonianSpec,
    a: float,
    t_max: float,
    dt: float,
    sources: Optional[Sequence[int]] = None,
    method: str = "auto",
    refine: int = 100,
) -> ScramblingResult:
    """First grid crossing of sup-size above a*N, bisection-refined.

    The scan records the whole grid and returns the first crossing; the
    crossing is localized to dt/refine.  Returns reached=False when no
    crossing occurs at or before t_max.
    """
    if not 0.0 < a < 1.0:
        raise ValueError("threshold fraction a must be in (0, 1)")
    n = spec.n_sites
    threshold = a * n

    if method == "auto":
        method = "collective" if collective_form(spec) is not None else "dense"

    if method == "collective":
        from .collective import CollectivePropagator

        cprop = CollectivePropagator(spec)
        src_list = list(sources) if sources is not None else [0]

        def size_at(t: float, src: int) -> float:
            return sup_site_size(cprop.size_form(t))
    else:
        prop = DensePropagator(spec)
        src_list = list(sources) if sources is not None else list(range(n))

        def size_at(t: float, src: int) -> float:
            return sup_site_size(size_quadratic_form(spec, src, t, prop))

    times = np.arange(0.0, t_max + dt * 0.5, dt)
    times[-1] = min(times[-1], t_max)
    sizes = np.empty((len(src_list), times.size))
    for si, src in enumerate(src_list):
        for ti, t in enumerate(times):
            sizes[si, ti] = size_at(float(t), src)
    sup_sizes = sizes.max(axis=0)

    crossing = np.nonzero(sup_sizes > threshold)[0]
    if crossing.size == 0:
        return ScramblingResult(None, False, threshold, times, sup_sizes, None)
    k = int(crossing[0])
    src = src_list[int(np.argmax(sizes[:, k]))]
    if k == 0:
        return ScramblingResult(float(times[0]), True, threshold, times, sup_sizes, src)

    def sup_at(t: float) -> float:
        return max(size_at(t, s) for s in src_list)

    lo, hi = float(times[k - 1]), float(times[k])
    target = dt / refine
    while hi - lo > target:
        mid = 0.5 * (lo + hi)
        if sup_at(mid) > threshold:
            hi = mid
        else:
            lo = mid
    return ScramblingResult(hi, True, threshold, times, sup_sizes, src)
