"""Quantum Computer Condition: implementation inaccuracy and verdicts.

For a target unitary ``U`` on the logical space and a device channel ``P``
with encoding/decoding channels, the deviation map is

    Delta(rho) = dec(P(enc(rho))) - U rho U^dag

and the condition holds at tolerance ``alpha`` iff ``||Delta(rho)||_1 <= alpha``
for every density matrix ``rho``. ``Delta`` is linear and the trace norm is
convex, so the supremum over density matrices is reached on pure states.

The supremum is bracketed: a multistart ascent over pure states gives a
lower value with an explicit witness, and ``sqrt(N) ||Delta||_{2->2}`` gives a
certified upper value.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    KrausChannel,
    Superoperator,
    identity_channel,
    to_superop,
    unitary_channel,
    validate_cptp,
)
from .errors import InvalidInputError
from .linalg import (
    as_matrix,
    dagger,
    is_unitary,
    partial_trace,
    projector,
    random_state_vector,
    trace_norm,
)

HOLDS = "holds-certified"
FAILS = "fails-certified"
UNDETERMINED = "undetermined"

# rounding guard for comparisons against alpha
_GUARD = 1e-12


@dataclass(frozen=True)
class QccScenario:
    U: np.ndarray
    P: KrausChannel
    enc: KrausChannel | None = None
    dec: KrausChannel | None = None
    alpha: float = 0.0

    def __post_init__(self):
        U = as_matrix(self.U, "U")
        if not is_unitary(U, 1e-10):
            raise InvalidInputError("U must be unitary")
        N = U.shape[0]
        enc = identity_channel(N) if self.enc is None else self.enc
        dec = identity_channel(N) if self.dec is None else self.dec
        if enc.dim_in != N or dec.dim_out != N:
            raise InvalidInputError("encoding must start and decoding must end on the logical space")
        if enc.dim_out != self.P.dim_in or self.P.dim_out != dec.dim_in:
            raise InvalidInputError(
                f"dimensions do not chain: enc {N}->{enc.dim_out}, P {self.P.dim_in}->{self.P.dim_out}, "
                f"dec {dec.dim_in}->{N}"
            )
        if self.alpha < 0:
            raise InvalidInputError("alpha must be non-negative")
        for name, ch in (("P", self.P), ("enc", enc), ("dec", dec)):
            if not validate_cptp(ch, 1e-9).passed:
                raise InvalidInputError(f"{name} is not CPTP at tolerance 1e-9")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "enc", enc)
        object.__setattr__(self, "dec", dec)

    @property
    def N(self) -> int:
        return self.U.shape[0]


@dataclass(frozen=True)
class QccReport:
    lower: float
    upper: float
    witness: np.ndarray
    verdict: str
    alpha: float
    options: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "verdict": self.verdict,
            "alpha": self.alpha,
            "witness": self.witness,
            "options": dict(self.options),
        }


def deviation_superop(scenario: QccScenario) -> Superoperator:
    """Matrix of ``rho -> dec(P(enc(rho))) - U rho U^dag``."""
    S = to_superop(scenario.dec) @ to_superop(scenario.P) @ to_superop(scenario.enc)
    return S - to_superop(unitary_channel(scenario.U))


def deviation_value(delta: Superoperator, rho) -> float:
    """``||Delta(rho)||_1``."""
    return trace_norm(delta.apply(rho))


def _structured_starts(N: int) -> list:
    starts = [np.eye(N, dtype=complex)[:, j] for j in range(N)]
    for j in range(1, N):
        for phase in (1, 1j):
            v = np.zeros(N, dtype=complex)
            v[0], v[j] = 1, phase
            starts.append(v / np.sqrt(2))
    return starts


def _ascend(delta: Superoperator, dual: Superoperator, psi, max_iters: int, tol: float):
    """Alternating maximization of ``psi -> ||Delta(psi psi^dag)||_1``.

    With ``S = sign(Delta(psi psi^dag))`` fixed the objective is bounded below by
    ``<psi| Delta^t(S) |psi>``, maximized by the top eigenvector of
    ``Delta^t(S)``; the value never decreases between iterations.
    """
    psi = psi / np.linalg.norm(psi)
    val = deviation_value(delta, projector(psi))
    it = 0
    for it in range(1, max_iters + 1):
        X = delta.apply(projector(psi))
        w, v = np.linalg.eigh((X + dagger(X)) / 2)
        S = (v * np.sign(w)) @ dagger(v)
        Y = dual.apply(S)
        _, vecs = np.linalg.eigh((Y + dagger(Y)) / 2)
        cand = vecs[:, -1]
        cand_val = deviation_value(delta, projector(cand))
        if cand_val <= val + tol:
            break
        psi, val = cand, cand_val
    return val, psi, it


def _rng_for(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(index)])


def maximize_deviation(
    delta: Superoperator,
    restarts: int = 32,
    seed: int = 0,
    max_iters: int = 200,
    tol: float = 1e-12,
    threads: int = 1,
):
    """Best pure-state value of ``||Delta(rho)||_1``; returns ``(value, witness_vector)``."""
    if restarts < 1:
        raise InvalidInputError("restarts must be >= 1")
    N = delta.dim_in
    dual = delta.dual()
    starts = _structured_starts(N) + [random_state_vector(N, _rng_for(seed, i)) for i in range(restarts)]

    def run(psi):
        return _ascend(delta, dual, psi, max_iters, tol)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(psi) for psi in starts]
    # first maximum in start order keeps the witness deterministic
    best = max(range(len(results)), key=lambda k: (results[k][0], -k))
    return results[best][0], results[best][1]


def implementation_inaccuracy(
    scenario: QccScenario,
    restarts: int = 32,
    seed: int = 0,
    max_iters: int = 200,
    tol: float = 1e-12,
    threads: int = 1,
) -> QccReport:
    """Bracket ``sup_rho ||dec(P(enc(rho))) - U rho U^dag||_1`` and decide the QCC.

    Returns a report whose ``verdict`` is ``holds-certified`` when the upper
    bound is within ``alpha``, ``fails-certified`` when the witness already
    exceeds ``alpha``, and ``undetermined`` otherwise.
    """
    delta = deviation_superop(scenario)
    lower, psi = maximize_deviation(delta, restarts, seed, max_iters, tol, threads)
    witness = projector(psi)
    lower = deviation_value(delta, witness)
    upper = float(np.sqrt(scenario.N) * delta.norm_2to2())
    alpha = float(scenario.alpha)
    if upper <= alpha + _GUARD:
        verdict = HOLDS
    elif lower > alpha + _GUARD:
        verdict = FAILS
    else:
        verdict = UNDETERMINED
    options = {"restarts": restarts, "seed": seed, "max_iters": max_iters, "tol": tol}
    return QccReport(float(lower), upper, witness, verdict, alpha, options)


def qcc_holds(scenario: QccScenario, **options):
    """Verdict string and full report for ``scenario``."""
    report = implementation_inaccuracy(scenario, **options)
    return report.verdict, report


def max_entropy_distance(N: int):
    """``(||I/N - psi psi^dag||_1, ||I/N - psi psi^dag||_inf)`` for any pure state: ``(2 - 2/N, 1 - 1/N)``."""
    if int(N) != N or N < 1:
        raise InvalidInputError("N must be a positive integer")
    return 2.0 - 2.0 / N, 1.0 - 1.0 / N


# -- operator quantum error correction ----------------------------------------

@dataclass(frozen=True)
class OqecScenario:
    """Noisy/noiseless subsystem split ``H_comp = (H^A (x) H^B) (+) K``.

    Basis ordering: the first ``dA*dB`` indices span ``H^A (x) H^B`` with ``A``
    as the leading factor, the last ``dK`` span ``K``.
    """

    dA: int
    dB: int
    dK: int
    error: KrausChannel
    recovery: KrausChannel
    w_enc: np.ndarray = None

    def __post_init__(self):
        n = self.dA * self.dB + self.dK
        if self.dA < 1 or self.dB < 1 or self.dK < 0:
            raise InvalidInputError("need dA, dB >= 1 and dK >= 0")
        W = np.eye(self.dB, dtype=complex) if self.w_enc is None else as_matrix(self.w_enc, "w_enc")
        if W.shape != (self.dB, self.dB) or not is_unitary(W, 1e-10):
            raise InvalidInputError("w_enc must be a unitary on H^B")
        for name, ch in (("error", self.error), ("recovery", self.recovery)):
            if (ch.dim_in, ch.dim_out) != (n, n):
                raise InvalidInputError(f"{name} channel must act on the {n}-dimensional H_comp")
            if not validate_cptp(ch, 1e-9).passed:
                raise InvalidInputError(f"{name} channel is not CPTP at tolerance 1e-9")
        object.__setattr__(self, "w_enc", W)

    @property
    def n(self) -> int:
        return self.dA * self.dB + self.dK

    def embed(self, sigma) -> np.ndarray:
        """Pad an operator on ``H^A (x) H^B`` with zeros on ``K``."""
        out = np.zeros((self.n, self.n), dtype=complex)
        m = self.dA * self.dB
        out[:m, :m] = sigma
        return out

    def project(self, X) -> np.ndarray:
        """``P_S``: compress to the ``H^A (x) H^B`` block."""
        m = self.dA * self.dB
        return np.asarray(X)[:m, :m]


def correctability_defect(oqec: OqecScenario, sigma_A, sigma_B) -> float:
    """``||Tr_A P_S R E (sigma_A (x) sigma_B) - sigma_B||_1`` (``sigma_A`` unit trace)."""
    dims = [oqec.dA, oqec.dB]
    prod = np.kron(sigma_A, sigma_B)
    out = oqec.project(oqec.recovery(oqec.error(oqec.embed(prod))))
    return trace_norm(partial_trace(out, dims, [1]) - partial_trace(prod, dims, [1]))


@dataclass(frozen=True)
class CorrectabilityResult:
    correctable: bool
    max_defect: float
    worst_sigma_A: np.ndarray
    worst_sigma_B: np.ndarray
    samples: int


def oqec_correctable(oqec: OqecScenario, trials: int = 200, seed: int = 0, tol: float = 1e-9) -> CorrectabilityResult:
    """Sample product states and report the largest correctability defect.

    Structured product states (basis and ``|0> + e^{i phi}|j>`` type on each
    factor) are always included; ``trials`` Haar-random pairs are added.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    pairs = list(itertools.product(_structured_starts(oqec.dA), _structured_starts(oqec.dB)))
    for i in range(trials):
        rng = _rng_for(seed, i)
        pairs.append((random_state_vector(oqec.dA, rng), random_state_vector(oqec.dB, rng)))
    worst = (-1.0, None, None)
    for a, b in pairs:
        sA, sB = projector(a), projector(b)
        d = correctability_defect(oqec, sA, sB)
        if d > worst[0]:
            worst = (d, sA, sB)
    return CorrectabilityResult(bool(worst[0] <= tol), float(worst[0]), worst[1], worst[2], len(pairs))


def oqec_to_qcc(oqec: OqecScenario, sigma_A) -> QccScenario:
    """QCC scenario with ``U = I``, ``alpha = 0`` realizing the correctability condition.

    ``enc = W_adj(sigma_A) o W_enc``, ``P = R o E``,
    ``dec = W_enc^{-1} o Tr_A o P_S``. Weight that leaks into ``K`` is sent to
    the maximally mixed logical state so that ``dec`` is trace preserving.
    """
    sigma_A = as_matrix(sigma_A, "sigma_A")
    if sigma_A.shape != (oqec.dA, oqec.dA):
        raise InvalidInputError("sigma_A must act on H^A")
    N, dA, dB, n = oqec.dB, oqec.dA, oqec.dB, oqec.n
    W = oqec.w_enc
    lam, vecs = np.linalg.eigh((sigma_A + dagger(sigma_A)) / 2)
    if lam[0] < -1e-10 or abs(np.sum(lam) - 1) > 1e-10:
        raise InvalidInputError("sigma_A must be a density matrix")
    enc_ops = []
    for l, a in zip(lam, vecs.T):
        if l > 1e-14:
            block = np.kron(a.reshape(dA, 1), W)  # (dA*dB) x N
            K = np.zeros((n, N), dtype=complex)
            K[: dA * dB, :] = np.sqrt(l) * block
            enc_ops.append(K)
    dec_ops = []
    for i in range(dA):
        bra = np.kron(np.eye(dA)[i].reshape(1, dA), np.eye(dB))  # dB x (dA*dB)
        K = np.zeros((N, n), dtype=complex)
        K[:, : dA * dB] = dagger(W) @ bra
        dec_ops.append(K)
    for k in range(oqec.dK):
        for j in range(N):
            K = np.zeros((N, n), dtype=complex)
            K[j, dA * dB + k] = 1 / np.sqrt(N)
            dec_ops.append(K)
    P = KrausChannel(tuple(Y @ X for Y in oqec.recovery.kraus for X in oqec.error.kraus))
    if len(P.kraus) > n * n:
        P = P.simplified()
    return QccScenario(np.eye(N), P, KrausChannel(tuple(enc_ops)), KrausChannel(tuple(dec_ops)), 0.0)
