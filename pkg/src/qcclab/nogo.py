"""Encoding No-Go certification.

A channel ``P`` on an ``n``-dimensional space is gamma-damped relative to an
abelian algebra when every Heisenberg output ``P^t(T)`` lies within
``gamma ||T||_inf`` of the algebra. Choosing the algebra element
``E(P^t(T))`` (``E`` the conditional expectation) shows that any upper bound
on the ``inf->inf`` norm of

    D = (id - E) o P^t

is a valid gamma. If ``2 gamma + alpha < sqrt(2)/4`` no encoding of a logical
space of dimension >= 2 can satisfy the QCC at tolerance ``alpha``.

Two upper bounds on ``||D||_{inf->inf}`` are computed:

* the norm-equivalence chain ``sqrt(n) ||D||_{2->2}``;
* the Choi-split bound: writing the Hermiticity-preserving map as
  ``D(T) = sum_k lam_k V_k T V_k^dag`` (Choi eigendecomposition),
  ``||D(T)|| <= ||sum_k |lam_k| V_k V_k^dag|| ||T||``.

The certified gamma is the smaller of the two. Sampled operators give a
lower estimate.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channel import (
    AbelianAlgebra,
    KrausChannel,
    Superoperator,
    completely_depolarizing,
    conditional_expectation,
    dephasing,
    to_superop,
    unvec,
)
from .errors import InvalidInputError, QccLabError
from .linalg import (
    as_matrix,
    dagger,
    is_hermitian,
    operator_norm,
    random_density_matrix,
    random_matrix,
    random_unitary,
)

NOGO_THRESHOLD = float(np.sqrt(2.0) / 4.0)
THRESHOLD_GUARD = 1e-12
NOGO = "nogo-certified"
NOT_TRIGGERED = "not-triggered"
SCAN_HEADER = ("param", "alpha", "gamma_cert", "gamma_lower", "two_gamma_plus_alpha", "verdict")


@dataclass(frozen=True)
class DampingReport:
    gamma_cert: float
    gamma_lower: float
    gamma_chain: float
    gamma_split: float
    norm_2to2: float
    algebra: AbelianAlgebra
    witness: np.ndarray = None

    def as_dict(self) -> dict:
        return {
            "gamma_cert": self.gamma_cert,
            "gamma_lower": self.gamma_lower,
            "gamma_chain": self.gamma_chain,
            "gamma_split": self.gamma_split,
            "norm_2to2": self.norm_2to2,
        }


@dataclass(frozen=True)
class NoGoVerdict:
    two_gamma_plus_alpha: float
    threshold: float
    verdict: str


def _rng_for(seed, index):
    return np.random.default_rng([int(seed), int(index)])


def superop_trace(S: Superoperator) -> float:
    """Trace of the ``n^2 x n^2`` matrix of ``S`` (the operator-space trace)."""
    if S.dim_in != S.dim_out:
        raise InvalidInputError("superop_trace needs a map from L(H) to itself")
    return float(np.real(np.trace(S.matrix)))


def split_norm_bound(S: Superoperator) -> float:
    """Upper bound on ``||S||_{inf->inf}`` from the signed Choi decomposition.

    Returns ``inf`` when ``S`` is not Hermiticity preserving.
    """
    C = S.choi()
    if not is_hermitian(C, 1e-10):
        return float("inf")
    lam, vecs = np.linalg.eigh((C + dagger(C)) / 2)
    acc = np.zeros((S.dim_out, S.dim_out), dtype=complex)
    for l, v in zip(lam, vecs.T):
        V = v.reshape(S.dim_in, S.dim_out).T
        acc += abs(l) * (V @ dagger(V))
    return operator_norm(acc)


def _witness_operators(algebra: AbelianAlgebra) -> list:
    """sigma_x/sigma_y/sigma_z-like operators built on pairs of algebra basis vectors."""
    n = algebra.dim
    out = []
    for B in (algebra.basis, np.eye(n, dtype=complex)):
        for a in range(n):
            for b in range(a + 1, n):
                va, vb = B[:, a], B[:, b]
                flip = np.outer(va, np.conj(vb))
                out.append(flip + dagger(flip))
                out.append(1j * (flip - dagger(flip)))
                out.append(np.outer(va, np.conj(va)) - np.outer(vb, np.conj(vb)))
    return out


def sampled_inf_norm(S: Superoperator, candidates) -> tuple:
    """``max ||S(T)||_inf / ||T||_inf`` over ``candidates``; returns ``(value, best_T)``."""
    best, best_T = 0.0, None
    for T in candidates:
        nrm = operator_norm(T)
        if nrm < 1e-14:
            continue
        T = T / nrm
        val = operator_norm(S.apply(T))
        if val > best:
            best, best_T = val, T
    return best, best_T


def _top_singular_operator(S: Superoperator) -> list:
    _, _, vh = np.linalg.svd(S.matrix)
    T = unvec(np.conj(vh[0]), S.dim_in)
    return [T, (T + dagger(T)) / 2, (T - dagger(T)) / 2j]


def gamma_certified(
    P: KrausChannel,
    algebra: AbelianAlgebra,
    trials: int = 200,
    seed: int = 0,
) -> DampingReport:
    """Certified damping constant of ``P`` relative to ``algebra``."""
    if P.dim_in != P.dim_out or P.dim_in != algebra.dim:
        raise InvalidInputError("channel and algebra dimensions must agree")
    n = algebra.dim
    heis = to_superop(P).dual()
    E = to_superop(conditional_expectation(algebra))
    D = (Superoperator.identity(n) - E) @ heis
    norm22 = D.norm_2to2()
    chain = float(np.sqrt(n) * norm22)
    split = split_norm_bound(D)
    cert = min(chain, split)
    rng = _rng_for(seed, 0)
    candidates = _witness_operators(algebra) + _top_singular_operator(D)
    for _ in range(trials):
        U = random_unitary(n, rng)
        candidates.append(U)
        candidates.append(U + dagger(U))
    lower, witness = sampled_inf_norm(D, candidates)
    return DampingReport(float(cert), float(lower), chain, float(split), norm22, algebra, witness)


def nogo_verdict(report: DampingReport | float, alpha: float) -> NoGoVerdict:
    """Apply the ``2 gamma + alpha < sqrt(2)/4`` test with the certified gamma."""
    if alpha < 0:
        raise InvalidInputError("alpha must be non-negative")
    gamma = report.gamma_cert if isinstance(report, DampingReport) else float(report)
    value = 2.0 * gamma + float(alpha)
    verdict = NOGO if value < NOGO_THRESHOLD - THRESHOLD_GUARD else NOT_TRIGGERED
    return NoGoVerdict(value, NOGO_THRESHOLD, verdict)


# -- abelian-factorizable maps --------------------------------------------

@dataclass(frozen=True)
class FactorizableMap:
    """Unital map ``T -> sum_i tr(T S_i) G_i`` with states ``S_i`` and a POVM ``G_i``."""

    n: int
    states: tuple
    effects: tuple

    def __post_init__(self, tol: float = 1e-9):
        states = tuple(as_matrix(S, "state") for S in self.states)
        effects = tuple(as_matrix(G, "effect") for G in self.effects)
        if not states or len(states) != len(effects):
            raise InvalidInputError("need equally many (at least one) states and effects")
        for S in states:
            if S.shape != (self.n, self.n) or not is_hermitian(S, tol) or abs(np.trace(S) - 1) > tol:
                raise InvalidInputError("each state must be a unit-trace Hermitian n x n matrix")
            if np.linalg.eigvalsh((S + dagger(S)) / 2)[0] < -tol:
                raise InvalidInputError("state has a negative eigenvalue")
        for G in effects:
            if G.shape != (self.n, self.n) or not is_hermitian(G, tol):
                raise InvalidInputError("each effect must be a Hermitian n x n matrix")
            w = np.linalg.eigvalsh((G + dagger(G)) / 2)
            if w[0] < -tol or w[-1] > 1 + tol:
                raise InvalidInputError("effects must satisfy 0 <= G_i <= I")
        if np.max(np.abs(sum(effects) - np.eye(self.n))) > tol:
            raise InvalidInputError("effects must sum to the identity")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "effects", effects)


def factorizable_superop(F: FactorizableMap) -> Superoperator:
    """Matrix of ``T -> sum_i tr(T S_i) G_i`` (column stacking: ``tr(T S) = vec(S^T) . vec(T)``)."""
    m = sum(np.outer(G.reshape(-1, order="F"), S.T.reshape(-1, order="F")) for S, G in zip(F.states, F.effects))
    return Superoperator(m, F.n, F.n)


def random_factorizable_map(n: int, m: int, rng=None) -> FactorizableMap:
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    states = [random_density_matrix(n, rng) for _ in range(m)]
    # random ranks, bumped so the parts sum to an invertible matrix
    ranks = rng.integers(1, n + 1, size=m)
    ranks[-1] = max(ranks[-1], n - int(ranks[:-1].sum()))
    ranks = np.minimum(ranks, n)
    parts = []
    for r in ranks:
        A = random_matrix(n, int(r), rng)
        parts.append(A @ dagger(A))
    total = sum(parts)
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ dagger(v)
    effects = [inv_sqrt @ A @ inv_sqrt for A in parts]
    effects = [(G + dagger(G)) / 2 for G in effects]
    # absorb rounding so the effects sum to I exactly
    effects[-1] = np.eye(n) - sum(effects[:-1])
    return FactorizableMap(n, tuple(states), tuple(effects))


def pinching_as_factorizable(n: int) -> FactorizableMap:
    P = [np.diag(np.eye(n)[i]).astype(complex) for i in range(n)]
    return FactorizableMap(n, tuple(P), tuple(P))


@dataclass(frozen=True)
class DeviationReport:
    norm_2to2: float
    chain_value: float
    norm_inf_lower: float
    bound: float
    witness: np.ndarray = field(default=None, repr=False)

    @property
    def holds(self) -> bool:
        return self.chain_value >= self.bound - 1e-9 and self.norm_inf_lower >= self.bound - 1e-9


def key_estimate_bound(n: int) -> float:
    """``n^{-1/2} (1 - 1/n)``."""
    return float((1.0 - 1.0 / n) / np.sqrt(n))


def identity_deviation(F: FactorizableMap, trials: int = 64, seed: int = 0) -> DeviationReport:
    """``||id - F||`` in the 2->2 norm (exact) and the inf->inf norm (sampled lower bound).

    The top right singular vector ``T`` of ``id - F`` is always a candidate; it
    satisfies ``||(id-F)T||_inf >= ||id-F||_{2->2} ||T||_inf / sqrt(n)``, so the
    sampled value never falls below the 2->2 chain.
    """
    n = F.n
    D = Superoperator.identity(n) - factorizable_superop(F)
    norm22 = D.norm_2to2()
    chain = norm22 / np.sqrt(n)
    rng = _rng_for(seed, 0)
    cands = _witness_operators(AbelianAlgebra.diagonal(n)) + _top_singular_operator(D)
    cands += [random_unitary(n, rng) for _ in range(trials)]
    lower, witness = sampled_inf_norm(D, cands)
    return DeviationReport(float(norm22), float(chain), float(lower), key_estimate_bound(n), witness)


# -- phase scans -----------------------------------------------------------

def _mixture_with_depolarizing(q: float, dim: int) -> KrausChannel:
    if not 0 <= q <= 1:
        raise InvalidInputError(f"mixing weight must lie in [0, 1], got {q}")
    ops = [np.sqrt(1 - q) * np.eye(dim)] + [np.sqrt(q) * K for K in completely_depolarizing(dim).kraus]
    return KrausChannel(tuple(ops))


def _amplitude_damping(g: float, dim: int = 2) -> KrausChannel:
    if not 0 <= g <= 1:
        raise InvalidInputError(f"damping probability must lie in [0, 1], got {g}")
    return KrausChannel((np.array([[1, 0], [0, np.sqrt(1 - g)]]), np.array([[0, np.sqrt(g)], [0, 0]])))


def _lindblad_dephasing(kappa: float, dim: int = 2, duration: float = 1.0) -> KrausChannel:
    from .lindblad import LindbladGenerator, evolve_product

    if kappa < 0:
        raise InvalidInputError("kappa must be non-negative")
    Z = np.diag([1.0, -1.0]).astype(complex)
    gen = LindbladGenerator(2, np.zeros((2, 2)), (np.sqrt(kappa) * Z,), (0.0, duration))
    return evolve_product(gen, 0.0, duration, 1).channel


FAMILIES: dict = {
    "dephasing": lambda p, dim=2, **_: dephasing(p),
    "depolarizing": lambda q, dim=2, **_: _mixture_with_depolarizing(q, dim),
    "amplitude-damping": lambda g, dim=2, **_: _amplitude_damping(g),
    "lindblad-dephasing": lambda k, dim=2, duration=1.0, **_: _lindblad_dephasing(k, duration=duration),
}


@dataclass(frozen=True)
class ChannelFamily:
    """One-parameter family of factory channels, e.g. ``ChannelFamily("dephasing")``."""

    name: str
    dim: int = 2
    options: tuple = ()

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise InvalidInputError(f"unknown channel family {self.name!r}; known: {sorted(FAMILIES)}")

    def __call__(self, param: float) -> KrausChannel:
        return FAMILIES[self.name](float(param), dim=self.dim, **dict(self.options))


@dataclass(frozen=True)
class ScanRow:
    param: float
    alpha: float
    gamma_cert: float | None
    gamma_lower: float | None
    two_gamma_plus_alpha: float | None
    verdict: str
    error: str | None = None


def nogo_scan(
    family: ChannelFamily | str | Callable[[float], KrausChannel],
    algebra: AbelianAlgebra,
    alpha_grid: Sequence[float],
    param_grid: Sequence[float],
    trials: int = 64,
    seed: int = 0,
    threads: int = 1,
) -> list:
    """Damping report and verdict for every ``(param, alpha)`` grid point.

    Rows come back in grid order (param major, alpha minor). A family that
    fails at some parameter yields error rows for that parameter; the scan
    continues.
    """
    if isinstance(family, str):
        family = ChannelFamily(family)
    alpha_grid = [float(a) for a in alpha_grid]
    param_grid = [float(p) for p in param_grid]
    if not alpha_grid or not param_grid:
        raise InvalidInputError("scan grids must be non-empty")

    def point(idx):
        p = param_grid[idx]
        try:
            return gamma_certified(family(p), algebra, trials, seed=_seed_pair(seed, idx)), None
        except (QccLabError, ValueError, np.linalg.LinAlgError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(point, range(len(param_grid))))
    else:
        reports = [point(i) for i in range(len(param_grid))]

    rows = []
    for p, (rep, err) in zip(param_grid, reports):
        for a in alpha_grid:
            if rep is None:
                rows.append(ScanRow(p, a, None, None, None, "error", err))
                continue
            v = nogo_verdict(rep, a)
            rows.append(ScanRow(p, a, rep.gamma_cert, rep.gamma_lower, v.two_gamma_plus_alpha, v.verdict))
    return rows


def _seed_pair(seed, idx):
    return int(np.random.SeedSequence([int(seed), int(idx)]).generate_state(1)[0])


def boundary_cells(rows: Sequence[ScanRow]) -> list:
    """Rows whose verdict differs from an alpha-neighbour in the same param row."""
    out = []
    by_param: dict = {}
    for r in rows:
        by_param.setdefault(r.param, []).append(r)
    for group in by_param.values():
        group = sorted(group, key=lambda r: r.alpha)
        for k, r in enumerate(group):
            neighbours = group[max(k - 1, 0) : k] + group[k + 1 : k + 2]
            if r.verdict != "error" and any(o.verdict not in (r.verdict, "error") for o in neighbours):
                out.append(r)
    return out


def _fmt(x):
    return "" if x is None else repr(float(x))


def scan_to_csv(rows: Sequence[ScanRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCAN_HEADER)
    for r in rows:
        w.writerow([_fmt(r.param), _fmt(r.alpha), _fmt(r.gamma_cert), _fmt(r.gamma_lower), _fmt(r.two_gamma_plus_alpha), r.verdict])
    return buf.getvalue()
