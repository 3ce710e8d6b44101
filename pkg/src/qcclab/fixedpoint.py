"""Exact solutions of the ersatz condition ``P(rho) = U rho U^dag``.

For a unital channel with Kraus operators ``X_i`` the solution set is the
commutant of ``{U^dag X_i}``. It is computed here as the joint nullspace of
the commutator superoperators

    rho -> K rho - rho K,   K = U^dag X_i,

which in column-stacking form read ``I (x) K - K^T (x) I``.

For non-unital channels the commutant can be strictly larger than the
fixed-point set; :func:`ersatz_solution_space` solves the linear system
``(S_P - Ad_U) vec(rho) = 0`` directly and is the ground truth in that case.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .channel import KrausChannel, to_superop, unitary_channel, unvec
from .errors import (
    CapacityError,
    FixedPointVerificationError,
    InvalidInputError,
    RankAmbiguityWarning,
)
from .linalg import as_matrix, dagger, is_unitary, trace_norm

NULL_THRESHOLD = 1e-9
GAP_WARNING = 10.0
MAX_DIM = 32


@dataclass(frozen=True)
class OperatorAlgebraBasis:
    """Hilbert-Schmidt orthonormal basis of a matrix subspace."""

    dim: int
    basis: tuple
    singular_value_gap: float = float("inf")
    unital: bool = True
    singular_values: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def algebra_dim(self) -> int:
        return len(self.basis)

    def _stack(self):
        if not self.basis:
            return np.zeros((self.dim * self.dim, 0), dtype=complex)
        return np.stack([B.reshape(-1, order="F") for B in self.basis], axis=1)

    def residual(self, X) -> float:
        """Frobenius distance from ``X`` to the span, relative to ``||X||_2``."""
        X = as_matrix(X)
        x = X.reshape(-1, order="F")
        nrm = np.linalg.norm(x)
        if nrm == 0:
            return 0.0
        Q = self._stack()
        # basis may not be exactly orthonormal after user edits, so project by least squares
        coeffs, *_ = np.linalg.lstsq(Q, x, rcond=None)
        return float(np.linalg.norm(x - Q @ coeffs) / nrm)

    def contains(self, X, tol: float = 1e-8) -> bool:
        return self.residual(X) <= tol

    def gram_rank(self, tol: float = 1e-10) -> int:
        Q = self._stack()
        if Q.shape[1] == 0:
            return 0
        return int(np.linalg.matrix_rank(dagger(Q) @ Q, tol=tol))

    def closure_defect(self) -> float:
        """Largest residual of pairwise products and adjoints of basis elements."""
        worst = 0.0
        for A in self.basis:
            worst = max(worst, self.residual(dagger(A)))
            for B in self.basis:
                worst = max(worst, self.residual(A @ B))
        return worst

    def is_closed(self, tol: float = 1e-8) -> bool:
        return self.closure_defect() <= tol

    def as_dict(self) -> dict:
        return {
            "algebra_dim": self.algebra_dim,
            "basis": [np.asarray(B) for B in self.basis],
            "singular_value_gap": self.singular_value_gap,
            "unital": self.unital,
        }


def _nullspace(M: np.ndarray, threshold: float):
    """Right nullspace of ``M`` by SVD, the kept/discarded gap and the singular values."""
    _, s, vh = np.linalg.svd(M)
    ncols = M.shape[1]
    full = np.zeros(ncols)
    full[: len(s)] = s
    null = full <= threshold
    rank = int(np.count_nonzero(~null))
    if rank == 0 or rank == ncols:
        gap = float("inf")
    else:
        kept_min = full[~null].min()
        dropped_max = full[null].max()
        gap = float("inf") if dropped_max == 0 else float(kept_min / dropped_max)
    return np.conj(vh[rank:]).T, gap, full


def _check_dims(P: KrausChannel, U) -> np.ndarray:
    if P.dim_in != P.dim_out:
        raise InvalidInputError("the ersatz condition needs a channel from L(H) to itself")
    U = as_matrix(U, "U")
    if U.shape != (P.dim_in, P.dim_in):
        raise InvalidInputError(f"U has shape {U.shape}, channel acts on dim {P.dim_in}")
    if not is_unitary(U, 1e-9):
        raise InvalidInputError("U is not unitary")
    if P.dim_in > MAX_DIM:
        raise CapacityError(f"dimension {P.dim_in} exceeds the commutant cap {MAX_DIM}")
    return U


def _basis_from(vectors, n, gap, svals, unital, what):
    if gap < GAP_WARNING:
        warnings.warn(
            f"{what}: singular value gap {gap:.3g} is below {GAP_WARNING:g}; the rank decision is fragile",
            RankAmbiguityWarning,
            stacklevel=3,
        )
    basis = tuple(unvec(v, n) for v in vectors.T)
    return OperatorAlgebraBasis(n, basis, gap, unital, svals)


def is_unital(P: KrausChannel, tol: float = 1e-9) -> bool:
    total = sum(K @ dagger(K) for K in P.kraus)
    return bool(np.max(np.abs(total - np.eye(P.dim_out))) <= tol)


def eqcc_commutant(P: KrausChannel, U, threshold: float = NULL_THRESHOLD) -> OperatorAlgebraBasis:
    """Commutant of ``{U^dag X_i}`` as an orthonormal matrix basis.

    The ``unital`` flag of the result records whether ``P`` is unital, which
    is when the commutant coincides with the ersatz solution set.
    """
    U = _check_dims(P, U)
    n = P.dim_in
    eye = np.eye(n)
    blocks = []
    for X in P.kraus:
        K = dagger(U) @ X
        blocks.append(np.kron(eye, K) - np.kron(K.T, eye))
    vecs, gap, s = _nullspace(np.vstack(blocks), threshold)
    return _basis_from(vecs, n, gap, s, is_unital(P), "eqcc_commutant")


def ersatz_solution_space(P: KrausChannel, U, threshold: float = NULL_THRESHOLD) -> OperatorAlgebraBasis:
    """All ``rho`` with ``P(rho) = U rho U^dag``, from the superoperator nullspace."""
    U = _check_dims(P, U)
    M = to_superop(P).matrix - to_superop(unitary_channel(U)).matrix
    vecs, gap, s = _nullspace(M, threshold)
    return _basis_from(vecs, P.dim_in, gap, s, is_unital(P), "ersatz_solution_space")


def verify_fixed_points(
    P: KrausChannel,
    U,
    basis: OperatorAlgebraBasis,
    trials: int = 32,
    tol: float = 1e-9,
    seed: int = 0,
) -> float:
    """Largest ``||P(rho) - U rho U^dag||_1`` over random Hermitian elements of the span.

    Each sample is a random combination of the basis, made Hermitian and
    scaled to unit trace norm. Raises :class:`FixedPointVerificationError`
    when the defect exceeds ``tol``.
    """
    U = _check_dims(P, U)
    if basis.dim != P.dim_in:
        raise InvalidInputError("basis dimension does not match the channel")
    if not basis.basis:
        return 0.0
    rng = np.random.default_rng(seed)
    worst = 0.0
    m = len(basis.basis)
    for _ in range(trials):
        c = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        rho = sum(ci * B for ci, B in zip(c, basis.basis))
        rho = (rho + dagger(rho)) / 2
        nrm = trace_norm(rho)
        if nrm < 1e-14:
            continue
        rho = rho / nrm
        worst = max(worst, trace_norm(P(rho) - U @ rho @ dagger(U)))
    if worst > tol:
        raise FixedPointVerificationError(
            f"fixed-point defect {worst:.3e} exceeds tolerance {tol:.1e}"
            + ("" if basis.unital else " (channel is not unital, so the commutant may exceed the fixed-point set)")
        )
    return float(worst)
