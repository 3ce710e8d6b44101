"""Dense complex matrix kernel.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
Operators on ``L(H)`` are represented by their matrices; superoperators use
column-stacking vectorization (see :mod:`qcclab.channel`).
"""
from __future__ import annotations

from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as spl

from .errors import InvalidInputError

__all__ = [
    "HermitianSpectrum",
    "as_matrix",
    "is_hermitian",
    "is_unitary",
    "hermitian_eig",
    "singular_values",
    "schatten_norm",
    "operator_norm",
    "trace_norm",
    "matrix_exp",
    "hermitian_exp",
    "tensor",
    "partial_trace",
    "dagger",
    "embed_operator",
    "ket",
    "projector",
    "random_matrix",
    "random_unitary",
    "random_isometry",
    "random_state_vector",
    "random_density_matrix",
    "von_neumann_entropy",
]

SVD_CLAMP = 1e-12


class HermitianSpectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce ``M`` to a finite 2-D complex array, raising on bad input."""
    arr = np.asarray(M, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return arr


def _square(M, name="matrix"):
    arr = as_matrix(M, name)
    if arr.shape[0] != arr.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {arr.shape}")
    return arr


def dagger(M) -> np.ndarray:
    return np.conj(np.transpose(M))


def is_hermitian(M, tol: float = 1e-10) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
    return bool(np.max(np.abs(M - dagger(M)), initial=0.0) <= tol * scale)


def is_unitary(M, tol: float = 1e-10) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return bool(np.max(np.abs(dagger(M) @ M - np.eye(M.shape[0])), initial=0.0) <= tol)


def hermitian_eig(M) -> HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues non-increasing."""
    M = _square(M)
    w, v = np.linalg.eigh((M + dagger(M)) / 2)
    order = np.argsort(w)[::-1]
    return HermitianSpectrum(w[order], v[:, order])


def singular_values(M, clamp: float = SVD_CLAMP) -> np.ndarray:
    """Singular values in non-increasing order.

    Computed from the eigenvalues of ``M^dag M``; rounding negatives down to
    ``-clamp`` (relative to the largest eigenvalue) are set to zero.
    Hermitian inputs use ``|eigvalsh(M)|`` directly, which is exact to
    working precision for small singular values.
    """
    M = as_matrix(M)
    if M.shape[0] == M.shape[1] and is_hermitian(M, 1e-14):
        s = np.abs(np.linalg.eigvalsh((M + dagger(M)) / 2))
        return np.sort(s)[::-1]
    gram = dagger(M) @ M if M.shape[1] <= M.shape[0] else M @ dagger(M)
    w = np.linalg.eigvalsh((gram + dagger(gram)) / 2)
    scale = max(1.0, float(np.max(np.abs(w), initial=0.0)))
    if np.min(w) < -clamp * scale:
        raise InvalidInputError(f"Gram matrix has eigenvalue {np.min(w):.3e} below clamp")
    w = np.clip(w, 0.0, None)
    return np.sort(np.sqrt(w))[::-1]


def schatten_norm(M, p: float = 1) -> float:
    """Schatten p-norm ``(sum_k s_k^p)^(1/p)``; ``p=np.inf`` gives the operator norm."""
    if not (p == np.inf or (np.isfinite(p) and p >= 1)):
        raise InvalidInputError(f"Schatten index must satisfy p >= 1, got {p}")
    s = singular_values(M)
    if p == np.inf:
        return float(s[0])
    if p == 1:
        return float(np.sum(s))
    if p == 2:
        return float(np.sqrt(np.sum(s * s)))
    return float(np.sum(s**p) ** (1.0 / p))


def operator_norm(M) -> float:
    return schatten_norm(M, np.inf)


def trace_norm(M) -> float:
    return schatten_norm(M, 1)


def matrix_exp(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring (Pade degree 13)."""
    return spl.expm(_square(M))


def hermitian_exp(H, coeff: complex = 1.0) -> np.ndarray:
    """``exp(coeff * H)`` for Hermitian ``H`` via the spectral decomposition."""
    H = _square(H)
    if not is_hermitian(H, 1e-10):
        raise InvalidInputError("hermitian_exp needs a Hermitian matrix")
    w, v = np.linalg.eigh((H + dagger(H)) / 2)
    return (v * np.exp(coeff * w)) @ dagger(v)


def tensor(*mats) -> np.ndarray:
    """Kronecker product ``A (x) B (x) ...`` with block (i, j) equal to ``a_ij B``."""
    if not mats:
        raise InvalidInputError("tensor needs at least one factor")
    return reduce(np.kron, [as_matrix(m) for m in mats])


def partial_trace(M, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem whose index is not in ``keep``.

    Kept subsystems stay in their original order.
    """
    M = _square(M)
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims) or int(np.prod(dims)) != M.shape[0]:
        raise InvalidInputError(f"dims {dims} do not factor a {M.shape[0]}-dimensional space")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise InvalidInputError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    t = M.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # contract matching row/col axes from the highest index down so positions stay valid
    for k in sorted(traced, reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + cur)
    d_keep = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d_keep, d_keep)


def embed_operator(op, dims: Sequence[int], support: Sequence[int]) -> np.ndarray:
    """Lift ``op`` acting on the subsystems ``support`` (in that order) to the full space.

    Identities act on all other subsystems; ``support`` need be neither
    sorted nor contiguous.
    """
    dims = [int(d) for d in dims]
    support = [int(s) for s in support]
    n = len(dims)
    if len(set(support)) != len(support) or any(s < 0 or s >= n for s in support):
        raise InvalidInputError(f"invalid support {support} for {n} subsystems")
    op = _square(op, "op")
    d_sup = int(np.prod([dims[s] for s in support]))
    if op.shape[0] != d_sup:
        raise InvalidInputError(f"operator of size {op.shape[0]} does not match support dimension {d_sup}")
    rest = [k for k in range(n) if k not in support]
    order = support + rest
    d_rest = int(np.prod([dims[k] for k in rest])) if rest else 1
    full = np.kron(op, np.eye(d_rest))
    inv = [0] * n
    for pos, sub in enumerate(order):
        inv[sub] = pos
    perm_dims = [dims[k] for k in order]
    t = full.reshape(perm_dims + perm_dims)
    t = t.transpose(inv + [n + i for i in inv])
    D = int(np.prod(dims))
    return t.reshape(D, D)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, np.conj(v))


def von_neumann_entropy(rho) -> float:
    w = np.linalg.eigvalsh((np.asarray(rho) + dagger(rho)) / 2)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)))


# -- random sampling -------------------------------------------------------

def _rng(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def random_matrix(rows: int, cols: int | None = None, rng=None) -> np.ndarray:
    """Complex Ginibre matrix with unit-variance entries."""
    rng = _rng(rng)
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_isometry(rows: int, cols: int, rng=None) -> np.ndarray:
    """Haar-random isometry ``V`` (rows x cols, rows >= cols) with ``V^dag V = I``."""
    if rows < cols:
        raise InvalidInputError("isometry needs rows >= cols")
    q, r = np.linalg.qr(random_matrix(rows, cols, rng))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_unitary(n: int, rng=None) -> np.ndarray:
    return random_isometry(n, n, rng)


def random_state_vector(n: int, rng=None) -> np.ndarray:
    v = random_matrix(n, 1, rng).reshape(-1)
    return v / np.linalg.norm(v)


def random_density_matrix(n: int, rng=None, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Hilbert-Schmidt type) measure."""
    G = random_matrix(n, n if rank is None else rank, rng)
    rho = G @ dagger(G)
    return rho / np.trace(rho).real
