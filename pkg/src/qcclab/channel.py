"""Completely positive trace-preserving maps.

A channel is held in operator-sum form (:class:`KrausChannel`); its matrix
view (:class:`Superoperator`) and Choi matrix are derived on demand.

Vectorization is column stacking, ``vec(A X B) = (B^T (x) A) vec(X)``, so the
matrix of ``rho -> sum_i X_i rho X_i^dag`` is ``sum_i conj(X_i) (x) X_i``.
The Choi matrix is ``sum_ij E_ij (x) P(E_ij)`` with the input factor first.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, NotCompletelyPositiveError
from .linalg import (
    as_matrix,
    dagger,
    embed_operator,
    is_hermitian,
    is_unitary,
    operator_norm,
    random_isometry,
)

CHOI_DISCARD = 1e-12

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


def vec(X) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(X, dtype=complex).reshape(-1, order="F")


def unvec(v, rows: int, cols: int | None = None) -> np.ndarray:
    cols = rows if cols is None else cols
    return np.asarray(v, dtype=complex).reshape((rows, cols), order="F")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


# -- value types -----------------------------------------------------------

@dataclass(frozen=True)
class Superoperator:
    """Matrix of a linear map ``L(C^dim_in) -> L(C^dim_out)`` on column-stacked operators."""

    matrix: np.ndarray
    dim_in: int
    dim_out: int

    def __post_init__(self):
        m = as_matrix(self.matrix, "superoperator")
        if m.shape != (self.dim_out**2, self.dim_in**2):
            raise InvalidInputError(
                f"superoperator shape {m.shape} inconsistent with dims ({self.dim_in}, {self.dim_out})"
            )
        object.__setattr__(self, "matrix", _frozen(m))

    def __call__(self, X) -> np.ndarray:
        return self.apply(X)

    def apply(self, X) -> np.ndarray:
        X = as_matrix(X)
        if X.shape != (self.dim_in, self.dim_in):
            raise InvalidInputError(f"operand shape {X.shape} does not match dim_in={self.dim_in}")
        return unvec(self.matrix @ vec(X), self.dim_out)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        if self.dim_in != other.dim_out:
            raise InvalidInputError("superoperator dimensions do not chain")
        return Superoperator(self.matrix @ other.matrix, other.dim_in, self.dim_out)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out):
            raise InvalidInputError("superoperator dimensions differ")
        return Superoperator(self.matrix - other.matrix, self.dim_in, self.dim_out)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out):
            raise InvalidInputError("superoperator dimensions differ")
        return Superoperator(self.matrix + other.matrix, self.dim_in, self.dim_out)

    def scale(self, c: complex) -> "Superoperator":
        return Superoperator(c * self.matrix, self.dim_in, self.dim_out)

    def dual(self) -> "Superoperator":
        """Adjoint with respect to the Hilbert-Schmidt inner product."""
        return Superoperator(dagger(self.matrix), self.dim_out, self.dim_in)

    def norm_2to2(self) -> float:
        """Operator norm for the Schatten 2-norm on both sides (exact singular value)."""
        return float(np.linalg.norm(self.matrix, 2))

    def choi(self) -> np.ndarray:
        return superop_to_choi(self)

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim), dim, dim)


@dataclass(frozen=True)
class KrausChannel:
    """Operator-sum representation ``P(rho) = sum_i X_i rho X_i^dag``.

    The constructor checks shapes only. Trace preservation is checked by
    :func:`validate_cptp`; factories in this module always produce CPTP maps.
    """

    kraus: tuple
    dim_in: int = field(init=False)
    dim_out: int = field(init=False)

    def __post_init__(self):
        ops = tuple(_frozen(as_matrix(k, "Kraus operator")) for k in self.kraus)
        if not ops:
            raise InvalidInputError("Kraus family must be non-empty")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise InvalidInputError("Kraus operators must share one shape")
        object.__setattr__(self, "kraus", ops)
        object.__setattr__(self, "dim_out", shape[0])
        object.__setattr__(self, "dim_in", shape[1])

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def to_superop(self) -> Superoperator:
        return to_superop(self)

    def to_choi(self) -> np.ndarray:
        return to_choi(self)

    def adjoint(self) -> Superoperator:
        return adjoint(self)

    def simplified(self) -> "KrausChannel":
        """Equivalent channel with minimal Kraus rank (via the Choi matrix)."""
        return from_choi(self.to_choi(), self.dim_in, self.dim_out, tol=1e-8)


@dataclass(frozen=True)
class ValidationReport:
    trace_defect: float
    choi_min_eig: float
    tol: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "trace_defect": self.trace_defect,
            "choi_min_eig": self.choi_min_eig,
            "tol": self.tol,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class AbelianAlgebra:
    """Abelian algebra spanned by block projections in a distinguished basis.

    ``basis`` columns are orthonormal vectors ``v_0..v_{dim-1}``; block ``k``
    defines the projection ``Q_k = sum_{a in block k} |v_a><v_a|``.
    """

    dim: int
    blocks: tuple
    basis: np.ndarray = None

    def __post_init__(self):
        basis = np.eye(self.dim, dtype=complex) if self.basis is None else as_matrix(self.basis, "basis")
        if basis.shape != (self.dim, self.dim) or not is_unitary(basis, 1e-10):
            raise InvalidInputError("algebra basis must be a dim x dim unitary")
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in self.blocks)
        if any(len(b) == 0 for b in blocks):
            raise InvalidInputError("algebra blocks must be non-empty")
        flat = sorted(i for b in blocks for i in b)
        if flat != list(range(self.dim)):
            raise InvalidInputError(f"blocks {blocks} do not partition range({self.dim})")
        object.__setattr__(self, "basis", _frozen(basis))
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def diagonal(cls, dim: int, basis=None) -> "AbelianAlgebra":
        """Maximal abelian algebra of operators diagonal in ``basis``."""
        return cls(dim, tuple((i,) for i in range(dim)), basis)

    def projections(self) -> list:
        V = self.basis
        return [V[:, list(b)] @ dagger(V[:, list(b)]) for b in self.blocks]


# -- core operations -------------------------------------------------------

def _as_channel(P) -> KrausChannel:
    if isinstance(P, KrausChannel):
        return P
    return KrausChannel(tuple(P))


def apply(P: KrausChannel, rho) -> np.ndarray:
    """``P(rho) = sum_i X_i rho X_i^dag``."""
    rho = as_matrix(rho, "rho")
    if rho.shape != (P.dim_in, P.dim_in):
        raise InvalidInputError(f"state of shape {rho.shape} does not match dim_in={P.dim_in}")
    return sum(X @ rho @ dagger(X) for X in P.kraus)


def adjoint(P: KrausChannel) -> Superoperator:
    """Heisenberg-picture map ``P^t(T) = sum_i X_i^dag T X_i``."""
    return to_superop(P).dual()


def to_superop(P: KrausChannel) -> Superoperator:
    m = sum(np.kron(np.conj(X), X) for X in P.kraus)
    return Superoperator(m, P.dim_in, P.dim_out)


def superop_to_choi(S: Superoperator) -> np.ndarray:
    di, do = S.dim_in, S.dim_out
    t = np.asarray(S.matrix).reshape(do, do, di, di)
    return t.transpose(3, 1, 2, 0).reshape(di * do, di * do)


def choi_to_superop(C, dim_in: int, dim_out: int) -> Superoperator:
    C = as_matrix(C, "Choi matrix")
    t = C.reshape(dim_in, dim_out, dim_in, dim_out)
    return Superoperator(t.transpose(3, 1, 2, 0).reshape(dim_out**2, dim_in**2), dim_in, dim_out)


def to_choi(P) -> np.ndarray:
    """Choi matrix ``sum_ij E_ij (x) P(E_ij)``."""
    if isinstance(P, Superoperator):
        return superop_to_choi(P)
    C = 0
    for X in P.kraus:
        v = X.T.reshape(-1)  # v[i*dout + a] = X[a, i]
        C = C + np.outer(v, np.conj(v))
    return C


def from_choi(C, dim_in: int, dim_out: int | None = None, tol: float = 1e-9) -> KrausChannel:
    """Kraus family from the eigendecomposition of a Choi matrix.

    Raises:
        NotCompletelyPositiveError: the Choi matrix has an eigenvalue below ``-tol``.
        InvalidInputError: wrong shape, not Hermitian, or the output partial
            trace is not the identity (map not trace preserving).
    """
    dim_out = dim_in if dim_out is None else dim_out
    C = as_matrix(C, "Choi matrix")
    if C.shape != (dim_in * dim_out, dim_in * dim_out):
        raise InvalidInputError(f"Choi shape {C.shape} does not match dims ({dim_in}, {dim_out})")
    if not is_hermitian(C, max(tol, 1e-12)):
        raise InvalidInputError("Choi matrix is not Hermitian")
    C = (C + dagger(C)) / 2
    w, v = np.linalg.eigh(C)
    if w[0] < -tol:
        raise NotCompletelyPositiveError(f"Choi matrix has eigenvalue {w[0]:.6g} < -{tol:g}")
    tr_out = np.trace(C.reshape(dim_in, dim_out, dim_in, dim_out), axis1=1, axis2=3)
    if np.max(np.abs(tr_out - np.eye(dim_in))) > tol:
        raise InvalidInputError("Choi matrix partial trace is not the identity (not trace preserving)")
    kraus = [
        np.sqrt(lam) * v[:, k].reshape(dim_in, dim_out).T
        for k, lam in enumerate(w)
        if lam > CHOI_DISCARD
    ]
    if not kraus:
        raise InvalidInputError("Choi matrix is zero")
    return KrausChannel(tuple(kraus))


def compose(P2: KrausChannel, P1: KrausChannel) -> KrausChannel:
    """``P2 o P1`` (``P1`` acts first); Kraus family ``{Y_j X_i}``."""
    if P1.dim_out != P2.dim_in:
        raise InvalidInputError(f"cannot compose: P1 outputs dim {P1.dim_out}, P2 expects {P2.dim_in}")
    return KrausChannel(tuple(Y @ X for Y in P2.kraus for X in P1.kraus))


def tensor_channels(*channels: KrausChannel) -> KrausChannel:
    ops = []
    for combo in itertools.product(*[c.kraus for c in channels]):
        out = combo[0]
        for X in combo[1:]:
            out = np.kron(out, X)
        ops.append(out)
    return KrausChannel(tuple(ops))


def embed_channel(P: KrausChannel, dims: Sequence[int], support: Sequence[int]) -> KrausChannel:
    """Act with ``P`` on the subsystems ``support``; identity elsewhere."""
    return KrausChannel(tuple(embed_operator(X, dims, support) for X in P.kraus))


def validate_cptp(P, tol: float = 1e-9) -> ValidationReport:
    """Trace-preservation defect ``||sum X^dag X - I||_inf`` and Choi minimum eigenvalue."""
    if isinstance(P, Superoperator):
        dual_unit = unvec(dagger(P.matrix) @ vec(np.eye(P.dim_out)), P.dim_in)
        defect = operator_norm(dual_unit - np.eye(P.dim_in))
        C = superop_to_choi(P)
        C = (C + dagger(C)) / 2
    else:
        P = _as_channel(P)
        gram = sum(dagger(X) @ X for X in P.kraus)
        defect = operator_norm(gram - np.eye(P.dim_in))
        C = to_choi(P)
    min_eig = float(np.linalg.eigvalsh((C + dagger(C)) / 2)[0])
    return ValidationReport(float(defect), min_eig, tol, bool(defect <= tol and min_eig >= -tol))


# -- factories -------------------------------------------------------------

def identity_channel(dim: int) -> KrausChannel:
    return KrausChannel((np.eye(dim),))


def unitary_channel(U) -> KrausChannel:
    U = as_matrix(U, "U")
    if not is_unitary(U, 1e-10):
        raise InvalidInputError("unitary_channel needs a unitary matrix")
    return KrausChannel((U,))


def _weyl_operators(dim: int) -> list:
    if dim & (dim - 1) == 0:
        n = dim.bit_length() - 1
        ops = []
        for combo in itertools.product(PAULIS, repeat=n):
            op = np.eye(1, dtype=complex)
            for p in combo:
                op = np.kron(op, p)
            ops.append(op)
        return ops
    omega = np.exp(2j * np.pi / dim)
    shift = np.roll(np.eye(dim), 1, axis=0)
    clock = np.diag(omega ** np.arange(dim))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(dim)
        for b in range(dim)
    ]


def depolarizing(dim: int = 2) -> KrausChannel:
    """Uniform twirl over the ``dim**2`` Pauli (or Weyl) operators.

    For one qubit this is ``rho -> (rho + sum_j s_j rho s_j) / 4``; the
    output is always ``tr(rho) I / dim``.
    """
    if dim < 1:
        raise InvalidInputError("dim must be positive")
    return KrausChannel(tuple(W / dim for W in _weyl_operators(dim)))


def completely_depolarizing(dim: int) -> KrausChannel:
    """``rho -> tr(rho) I / dim`` with Kraus operators ``|i><j| / sqrt(dim)``."""
    if dim < 1:
        raise InvalidInputError("dim must be positive")
    ops = []
    for i in range(dim):
        for j in range(dim):
            K = np.zeros((dim, dim), dtype=complex)
            K[i, j] = 1 / np.sqrt(dim)
            ops.append(K)
    return KrausChannel(tuple(ops))


def dephasing(p: float) -> KrausChannel:
    """Qubit dephasing ``(1-p) rho + p Z rho Z``; coherences scale by ``1 - 2p``."""
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"dephasing probability must lie in [0, 1], got {p}")
    return KrausChannel((np.sqrt(1 - p) * PAULI_I, np.sqrt(p) * PAULI_Z))


def conditional_expectation(algebra: AbelianAlgebra) -> KrausChannel:
    """Unital CPTP projection ``E(T) = sum_k tr(Q_k T)/tr(Q_k) Q_k`` onto the algebra.

    Kraus operators are ``|v_b><v_a| / sqrt(d_k)`` for ``a, b`` in block ``k``;
    the family is closed under adjoints, so ``E`` is self-dual.
    """
    V = algebra.basis
    ops = []
    for block in algebra.blocks:
        d = len(block)
        for a in block:
            for b in block:
                ops.append(np.outer(V[:, b], np.conj(V[:, a])) / np.sqrt(d))
    return KrausChannel(tuple(ops))


pinching = conditional_expectation


def random_channel(dim_in: int, dim_out: int | None = None, rank: int | None = None, rng=None) -> KrausChannel:
    """Channel from a Haar-random isometry into ``dim_out (x) C^rank`` with the environment traced out."""
    dim_out = dim_in if dim_out is None else dim_out
    rank = dim_in * dim_out if rank is None else rank
    V = random_isometry(dim_out * rank, dim_in, rng).reshape(dim_out, rank, dim_in)
    return KrausChannel(tuple(V[:, k, :] for k in range(rank)))


def validate_density_matrix(rho, tol: float = 1e-10) -> np.ndarray:
    """Return ``rho`` as an array after checking Hermiticity, positivity and unit trace."""
    rho = as_matrix(rho, "rho")
    if rho.shape[0] != rho.shape[1]:
        raise InvalidInputError("density matrix must be square")
    if not is_hermitian(rho, tol):
        raise InvalidInputError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise InvalidInputError(f"density matrix has trace {np.trace(rho).real:.12g}")
    if np.linalg.eigvalsh((rho + dagger(rho)) / 2)[0] < -tol:
        raise InvalidInputError("density matrix has a negative eigenvalue")
    return rho
