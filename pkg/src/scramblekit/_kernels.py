"""Hot numeric kernels, in numba and pure-numpy variants.

Everything here works on the symplectic mask encoding of Pauli strings:
a string on n sites is a pair of n-bit integers (x, z); bit i of x is set
iff site i carries X or Y, bit i of z iff site i carries Z or Y.  The
canonical (Hermitian, phase-free) string is

    S(x, z) = i^{popcount(x & z)} * X^x Z^z

so that S is the tensor product of 1/X/Y/Z letters.  Dense matrices are
indexed by computational-basis bitstrings; S(x, z) has one nonzero per
row: S[s ^ x, s] = i^{popcount(x & z)} * (-1)^{popcount(s & z)}.

Coefficient arrays for an operator O are C[x, z] = 2^{-n} tr(S(x,z) O),
stored as a (2^n, 2^n) complex matrix (rows x, columns z).

The module exposes a single public set of names (``popcount``,
``dense_to_coeff``, ``coeff_to_dense``, ``liouvillian_apply``,
``site_weight_profile``); which implementation backs them is decided by
:mod:`scramblekit.backend` at import time.  Both variants stay importable
for cross-checking and benchmarks.
"""

import numpy as np
from scipy.linalg import hadamard

from .backend import USE_NUMBA

_I_POW = np.array([1, 1j, -1, -1j], dtype=np.complex128)       # i^k
_MINUS_I_POW = np.array([1, -1j, -1, 1j], dtype=np.complex128)  # (-i)^k


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def popcount_np(a):
    """Bit count of an array of non-negative integers."""
    return np.bitwise_count(np.asarray(a, dtype=np.uint64))


class _TransformCache:
    """Per-n lookup tables for the mask transforms (numpy path)."""

    def __init__(self):
        self._tables = {}

    def get(self, n):
        if n not in self._tables:
            dim = 1 << n
            idx = np.arange(dim, dtype=np.uint32)
            xor = np.bitwise_xor.outer(idx, idx).astype(np.int32)
            walsh = hadamard(dim, dtype=np.float64)
            ipow = popcount_np(np.bitwise_and.outer(idx, idx)).astype(np.int64) & 3
            self._tables[n] = (xor, walsh, ipow)
        return self._tables[n]


_CACHE = _TransformCache()


def dense_to_coeff_np(mat, n):
    """Pauli coefficients C[x, z] of a dense 2^n x 2^n matrix."""
    dim = 1 << n
    xor, walsh, ipow = _CACHE.get(n)
    cols = np.arange(dim)
    stripes = mat[xor, cols[None, :]]           # stripes[x, s] = mat[s ^ x, s]
    c = stripes.real @ walsh
    if np.iscomplexobj(mat):
        c = c + 1j * (stripes.imag @ walsh)
    c = c.astype(np.complex128, copy=False)
    c *= _MINUS_I_POW[ipow]
    c *= 1.0 / dim
    return c


def coeff_to_dense_np(coeff, n):
    """Dense matrix from Pauli coefficients (inverse of dense_to_coeff)."""
    dim = 1 << n
    xor, walsh, ipow = _CACHE.get(n)
    u = coeff * _I_POW[ipow]
    stripes = (u.real @ walsh) + 1j * (u.imag @ walsh)
    mat = np.empty((dim, dim), dtype=np.complex128)
    cols = np.arange(dim)
    mat[xor, cols[None, :]] = stripes
    return mat


def liouvillian_apply_np(tx, tz, tc, vec, n, out):
    """out = i[H, .] applied to a flat coefficient vector.

    H = sum_t tc[t] * S(tx[t], tz[t]); vec and out are flat length-4^n
    arrays indexed by (x << n) | z.  Real term coefficients are assumed
    (Hermitian H).
    """
    dim = 1 << n
    mask = dim - 1
    idx = np.arange(vec.size, dtype=np.uint64)
    px = idx >> np.uint64(n)
    pz = idx & np.uint64(mask)
    cp = (popcount_np(px & pz) & 3).astype(np.int64)
    out[:] = 0.0
    for t in range(len(tx)):
        a = np.uint64(tx[t])
        b = np.uint64(tz[t])
        anti = (popcount_np(a & pz) + popcount_np(b & px)) & 1
        sel = anti.astype(bool)
        qx = px[sel] ^ a
        qz = pz[sel] ^ b
        ct = int(popcount_np(a & b) & 3)
        k = (
            ct
            + cp[sel]
            - (popcount_np(qx & qz) & 3).astype(np.int64)
            + 2 * popcount_np(b & px[sel]).astype(np.int64)
        ) & 3
        # i[T, P] = 2 i * i^k * Q for anticommuting T, P; k is odd, so the
        # factor is -2 for k = 1 and +2 for k = 3.
        f = np.where(k == 1, -2.0, 2.0) * tc[t]
        q = (qx << np.uint64(n)) | qz
        np.add.at(out, q.astype(np.int64), f * vec[sel])
    return out


def site_weight_profile_np(xs, zs, w, n):
    """weights[j] = sum of w over strings with a non-identity letter at j."""
    supp = np.bitwise_or(
        np.asarray(xs, dtype=np.uint64), np.asarray(zs, dtype=np.uint64)
    )
    bits = (supp[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)
    return (bits.astype(np.float64) * np.asarray(w, dtype=np.float64)[:, None]).sum(axis=0)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if USE_NUMBA:
    from numba import njit

    @njit(cache=True, inline="always")
    def _pc64(v):
        v = np.uint64(v)
        v = v - ((v >> np.uint64(1)) & np.uint64(0x5555555555555555))
        v = (v & np.uint64(0x3333333333333333)) + (
            (v >> np.uint64(2)) & np.uint64(0x3333333333333333)
        )
        v = (v + (v >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
        return np.int64((v * np.uint64(0x0101010101010101)) >> np.uint64(56))

    @njit(cache=True)
    def _popcount_nb(a):
        out = np.empty(a.size, dtype=np.int64)
        flat = a.ravel()
        for i in range(flat.size):
            out[i] = _pc64(flat[i])
        return out.reshape(a.shape)

    def popcount_nb(a):
        arr = np.asarray(a, dtype=np.uint64)
        if arr.ndim == 0:
            return _popcount_nb(arr.reshape(1))[0]
        return _popcount_nb(arr)

    @njit(cache=True)
    def _fwht_inplace(buf):
        dim = buf.size
        h = 1
        while h < dim:
            step = h * 2
            for i in range(0, dim, step):
                for j in range(i, i + h):
                    a = buf[j]
                    b = buf[j + h]
                    buf[j] = a + b
                    buf[j + h] = a - b
            h = step

    @njit(cache=True)
    def _dense_to_coeff_nb(mat, n):
        dim = 1 << n
        inv = 1.0 / dim
        coeff = np.empty((dim, dim), dtype=np.complex128)
        stripe = np.empty(dim, dtype=np.complex128)
        phase = np.empty(4, dtype=np.complex128)
        phase[0] = 1.0
        phase[1] = -1j
        phase[2] = -1.0
        phase[3] = 1j
        for x in range(dim):
            for s in range(dim):
                stripe[s] = mat[s ^ x, s]
            _fwht_inplace(stripe)
            for z in range(dim):
                k = _pc64(np.uint64(x & z)) & 3
                coeff[x, z] = stripe[z] * phase[k] * inv
        return coeff

    @njit(cache=True)
    def _coeff_to_dense_nb(coeff, n):
        dim = 1 << n
        mat = np.empty((dim, dim), dtype=np.complex128)
        stripe = np.empty(dim, dtype=np.complex128)
        phase = np.empty(4, dtype=np.complex128)
        phase[0] = 1.0
        phase[1] = 1j
        phase[2] = -1.0
        phase[3] = -1j
        for x in range(dim):
            for z in range(dim):
                k = _pc64(np.uint64(x & z)) & 3
                stripe[z] = coeff[x, z] * phase[k]
            _fwht_inplace(stripe)
            for s in range(dim):
                mat[s ^ x, s] = stripe[s]
        return mat

    @njit(cache=True)
    def _liouvillian_apply_nb(tx, tz, tc, vec, n, out):
        dim = 1 << n
        nn = np.uint64(n)
        mask = np.uint64(dim - 1)
        out[:] = 0.0
        for t in range(tx.size):
            a = tx[t]
            b = tz[t]
            c = tc[t]
            ct = _pc64(a & b) & 3
            for idx in range(vec.size):
                u = np.uint64(idx)
                px = u >> nn
                pz = u & mask
                if ((_pc64(a & pz) + _pc64(b & px)) & 1) == 0:
                    continue
                qx = px ^ a
                qz = pz ^ b
                k = (
                    ct
                    + (_pc64(px & pz) & 3)
                    - (_pc64(qx & qz) & 3)
                    + 2 * _pc64(b & px)
                ) & 3
                f = -2.0 * c if k == 1 else 2.0 * c
                q = (qx << nn) | qz
                out[np.int64(q)] += f * vec[idx]
        return out

    @njit(cache=True)
    def _site_weight_profile_nb(xs, zs, w, n):
        prof = np.zeros(n, dtype=np.float64)
        for i in range(xs.size):
            supp = xs[i] | zs[i]
            for j in range(n):
                if (supp >> np.uint64(j)) & np.uint64(1):
                    prof[j] += w[i]
        return prof

    def dense_to_coeff_nb(mat, n):
        return _dense_to_coeff_nb(np.ascontiguousarray(mat, dtype=np.complex128), n)

    def coeff_to_dense_nb(coeff, n):
        return _coeff_to_dense_nb(np.ascontiguousarray(coeff, dtype=np.complex128), n)

    def liouvillian_apply_nb(tx, tz, tc, vec, n, out):
        return _liouvillian_apply_nb(
            np.asarray(tx, dtype=np.uint64),
            np.asarray(tz, dtype=np.uint64),
            np.asarray(tc, dtype=np.float64),
            vec,
            n,
            out,
        )

    def site_weight_profile_nb(xs, zs, w, n):
        return _site_weight_profile_nb(
            np.asarray(xs, dtype=np.uint64),
            np.asarray(zs, dtype=np.uint64),
            np.asarray(w, dtype=np.float64),
            n,
        )


# ---------------------------------------------------------------------------
# public dispatch
# ---------------------------------------------------------------------------

if USE_NUMBA:
    popcount = popcount_nb
    dense_to_coeff = dense_to_coeff_nb
    coeff_to_dense = coeff_to_dense_nb
    liouvillian_apply = liouvillian_apply_nb
    site_weight_profile = site_weight_profile_nb
else:
    popcount = popcount_np
    dense_to_coeff = dense_to_coeff_np
    coeff_to_dense = coeff_to_dense_np
    liouvillian_apply = liouvillian_apply_np
    site_weight_profile = site_weight_profile_np
