"""Compilers from computing paradigms to channels, plus threshold arithmetic.

* circuits: gate embedding, the ordered circuit product, per-gate error
  models and the whole-circuit decomposition
  ``P = (1 - eps_f) Ad(V_circuit) + eps_f Q_f``;
* NMR: tensor powers of a circuit unitary or channel;
* graph states: the edge-product entangler and measurement trees;
* adiabatic schedules: endpoint propagators of the interpolating generator;
* thresholds: ``eps_th = sum(B) / sum(A)`` and the level-ratio estimator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import brentq, minimize

from .channel import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    KrausChannel,
    Superoperator,
    depolarizing,
    embed_channel,
    from_choi,
    superop_to_choi,
    tensor_channels,
    to_superop,
    unitary_channel,
    validate_cptp,
)
from .errors import CapacityError, InvalidInputError, QccLabError, UndefinedRatioError
from .linalg import as_matrix, dagger, embed_operator, is_hermitian, is_unitary, operator_norm, projector, tensor
from .qcc import QccScenario, _structured_starts, deviation_superop, deviation_value

MAX_CIRCUIT_DIM = 32
MAX_NMR_DIM = 64
MAX_GRAPH_NODES = 4

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
GATES = {
    "I": np.eye(2, dtype=complex),
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "H": _H,
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    # control on the first support wire
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


def gate_matrix(name_or_matrix) -> np.ndarray:
    if isinstance(name_or_matrix, str):
        try:
            return GATES[name_or_matrix.upper()]
        except KeyError:
            raise InvalidInputError(f"unknown gate {name_or_matrix!r}; known: {sorted(GATES)}") from None
    return as_matrix(name_or_matrix, "gate unitary")


# -- circuits --------------------------------------------------------------

@dataclass(frozen=True)
class GateSpec:
    """One gate: a unitary on ``support`` that fails with probability ``epsilon``.

    A failed gate applies ``error`` to the support instead of the unitary;
    ``"depolarizing"`` means the uniform Pauli twirl on the whole support.
    """

    support: tuple
    unitary: np.ndarray
    epsilon: float = 0.0
    error: Union[str, KrausChannel] = "depolarizing"

    def __post_init__(self):
        support = tuple(int(s) for s in np.atleast_1d(self.support))
        if len(support) not in (1, 2) or len(set(support)) != len(support):
            raise InvalidInputError(f"gate support must be 1 or 2 distinct wires, got {support}")
        U = gate_matrix(self.unitary)
        if not is_unitary(U, 1e-9):
            raise InvalidInputError("gate matrix is not unitary")
        if not 0.0 <= float(self.epsilon) <= 1.0:
            raise InvalidInputError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if isinstance(self.error, str):
            if self.error != "depolarizing":
                raise InvalidInputError(f"unknown error model {self.error!r}")
        elif not isinstance(self.error, KrausChannel):
            raise InvalidInputError("error must be 'depolarizing' or a KrausChannel")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "unitary", U)
        object.__setattr__(self, "epsilon", float(self.epsilon))


@dataclass(frozen=True)
class CircuitSpec:
    n_wires: int
    gates: tuple = ()
    wire_dim: int = 2

    def __post_init__(self):
        if self.n_wires < 1 or self.wire_dim < 2:
            raise InvalidInputError("need n_wires >= 1 and wire_dim >= 2")
        gates = tuple(self.gates)
        for k, g in enumerate(gates):
            if any(s >= self.n_wires for s in g.support):
                raise InvalidInputError(f"gate {k} support {g.support} out of range for {self.n_wires} wires")
            if g.unitary.shape[0] != self.wire_dim ** len(g.support):
                raise InvalidInputError(f"gate {k} has size {g.unitary.shape[0]}, expected {self.wire_dim ** len(g.support)}")
        object.__setattr__(self, "gates", gates)

    @property
    def dim(self) -> int:
        return self.wire_dim**self.n_wires


def embed_gate(g: GateSpec, n_wires: int, wire_dim: int = 2) -> np.ndarray:
    """``V_mu`` on its support tensored with identities on the other wires."""
    if any(s < 0 or s >= n_wires for s in g.support):
        raise InvalidInputError(f"support {g.support} out of range for {n_wires} wires")
    return embed_operator(g.unitary, [wire_dim] * n_wires, g.support)


def circuit_unitary(spec: CircuitSpec) -> np.ndarray:
    """Ordered product with the first gate rightmost."""
    V = np.eye(spec.dim, dtype=complex)
    for g in spec.gates:
        V = embed_gate(g, spec.n_wires, spec.wire_dim) @ V
    return V


def _error_on_support(g: GateSpec, wire_dim: int) -> KrausChannel:
    d = wire_dim ** len(g.support)
    if isinstance(g.error, KrausChannel):
        if g.error.dim_in != d or g.error.dim_out != d:
            raise InvalidInputError(f"error channel acts on dim {g.error.dim_in}, support has dim {d}")
        return g.error
    return depolarizing(d)


def noisy_gate_channel(g: GateSpec, n_wires: int, wire_dim: int = 2) -> KrausChannel:
    """``rho -> (1 - eps) V rho V^dag + eps Q(rho)`` on the full register."""
    V = embed_gate(g, n_wires, wire_dim)
    if g.epsilon == 0.0:
        return KrausChannel((V,))
    Q = embed_channel(_error_on_support(g, wire_dim), [wire_dim] * n_wires, g.support)
    ops = [np.sqrt(g.epsilon) * X for X in Q.kraus]
    if g.epsilon < 1.0:
        ops.insert(0, np.sqrt(1.0 - g.epsilon) * V)
    return KrausChannel(tuple(ops))


@dataclass(frozen=True)
class CircuitChannel:
    channel: KrausChannel
    epsilon_f: float
    V_circuit: np.ndarray
    Q_f: KrausChannel | None
    residual: float = 0.0
    superop: Superoperator = field(default=None, repr=False)


def circuit_failure_probability(epsilons: Sequence[float]) -> float:
    """``1 - prod(1 - eps_mu)``."""
    return float(1.0 - np.prod([1.0 - float(e) for e in epsilons]))


def sample_circuit_failure(spec: CircuitSpec, samples: int, rng=None) -> float:
    """Monte-Carlo frequency of "at least one gate failed"."""
    rng = np.random.default_rng(rng)
    eps = np.array([g.epsilon for g in spec.gates])
    if eps.size == 0:
        return 0.0
    fails = rng.random((int(samples), eps.size)) < eps
    return float(np.mean(fails.any(axis=1)))


def circuit_channel(spec: CircuitSpec, tol: float = 1e-8) -> CircuitChannel:
    """Compose the noisy gates and split off the error-free branch.

    ``Q_f`` is the normalized residual ``(P - (1 - eps_f) Ad(V)) / eps_f``;
    it is ``None`` when ``eps_f = 0``.
    """
    if spec.dim > MAX_CIRCUIT_DIM:
        raise CapacityError(f"circuit dimension {spec.dim} exceeds cap {MAX_CIRCUIT_DIM}")
    n = spec.dim
    S = Superoperator.identity(n)
    for g in spec.gates:
        S = to_superop(noisy_gate_channel(g, spec.n_wires, spec.wire_dim)) @ S
    V = circuit_unitary(spec)
    eps_f = circuit_failure_probability([g.epsilon for g in spec.gates])
    SV = to_superop(unitary_channel(V))
    channel = from_choi(superop_to_choi(S), n, n, tol=tol)
    if eps_f == 0.0:
        return CircuitChannel(channel, 0.0, V, None, float(np.max(np.abs(S.matrix - SV.matrix))), S)
    SQ = (S - SV.scale(1.0 - eps_f)).scale(1.0 / eps_f)
    Q = from_choi(superop_to_choi(SQ), n, n, tol=tol)
    report = validate_cptp(Q, tol)
    if not report.passed:
        raise QccLabError(f"extracted Q_f failed CPTP validation: {report.as_dict()}")
    rebuilt = SV.scale(1.0 - eps_f) + to_superop(Q).scale(eps_f)
    residual = float(np.max(np.abs(rebuilt.matrix - S.matrix)))
    return CircuitChannel(channel, eps_f, V, Q, residual, S)


def nmr_lift(obj, copies: int, cap: int = MAX_NMR_DIM):
    """``copies``-fold tensor power of a unitary matrix or a channel."""
    copies = int(copies)
    if copies < 1:
        raise InvalidInputError("copies must be >= 1")
    if isinstance(obj, KrausChannel):
        if obj.dim_in**copies > cap or obj.dim_out**copies > cap:
            raise CapacityError(f"lifted dimension exceeds cap {cap}")
        return tensor_channels(*([obj] * copies))
    V = as_matrix(obj, "V")
    if V.shape[0] ** copies > cap:
        raise CapacityError(f"lifted dimension {V.shape[0] ** copies} exceeds cap {cap}")
    return tensor(*([V] * copies))


# -- adiabatic -------------------------------------------------------------

def adiabatic_channel(schedule, unitary_error=None, dissipators=(), tol: float = 1e-8, method: str = "product"):
    """Propagator ``P_{T,0}`` of the adiabatic generator, refined to ``tol``."""
    from .lindblad import adiabatic_generator, evolve_adaptive

    gen = adiabatic_generator(schedule, unitary_error, dissipators)
    return evolve_adaptive(gen, 0.0, schedule.T, tol, method=method)


# -- graph states ----------------------------------------------------------

@dataclass(frozen=True)
class GraphSpec:
    """Qubit graph; ``entangler`` is ``"cz-product"`` or an explicit partial isometry."""

    nodes: int
    edges: tuple = ()
    entangler: Union[str, np.ndarray] = "cz-product"

    def __post_init__(self):
        if self.nodes < 1:
            raise InvalidInputError("graph needs at least one node")
        if self.nodes > MAX_GRAPH_NODES:
            raise CapacityError(f"graph node count {self.nodes} exceeds cap {MAX_GRAPH_NODES}")
        edges = []
        for e in self.edges:
            a, b = (int(x) for x in e)
            if a == b or not (0 <= a < self.nodes and 0 <= b < self.nodes):
                raise InvalidInputError(f"invalid edge {e!r}")
            if (a, b) in edges or (b, a) in edges:
                raise InvalidInputError(f"duplicate edge {e!r}")
            edges.append((a, b))
        object.__setattr__(self, "edges", tuple(edges))
        if isinstance(self.entangler, str):
            if self.entangler != "cz-product":
                raise InvalidInputError(f"unknown entangler {self.entangler!r}")
        else:
            V = as_matrix(self.entangler, "entangler")
            D = 2**self.nodes
            if V.shape != (D, D):
                raise InvalidInputError(f"entangler must be {D}x{D}")
            if not is_partial_isometry(V):
                raise InvalidInputError("entangler is not a partial isometry")
            object.__setattr__(self, "entangler", V)

    @property
    def dim(self) -> int:
        return 2**self.nodes


def is_partial_isometry(V, tol: float = 1e-9) -> bool:
    G = dagger(V) @ V
    return bool(np.max(np.abs(G @ G - G), initial=0.0) <= tol and is_hermitian(G, tol))


def edge_factor(a: int, b: int, nodes: int) -> np.ndarray:
    """``(I + Z_a + Z_b - Z_a Z_b) / 2`` on ``nodes`` qubits.

    This is controlled-Z on the edge: it squares to the identity but is not
    idempotent, so the product over edges is unitary rather than a projection.
    """
    dims = [2] * nodes
    I = np.eye(2**nodes)
    Za = embed_operator(PAULI_Z, dims, [a])
    Zb = embed_operator(PAULI_Z, dims, [b])
    return (I + Za + Zb - Za @ Zb) / 2


def graph_entangler(g: GraphSpec) -> np.ndarray:
    """Product of the edge factors, or the explicit partial isometry."""
    if not isinstance(g.entangler, str):
        return g.entangler
    F = np.eye(g.dim, dtype=complex)
    for a, b in g.edges:
        F = edge_factor(a, b, g.nodes) @ F
    return F


def entangler_diagnostics(g: GraphSpec) -> dict:
    """Largest pairwise commutator of edge factors and ``||F^2 - I||``."""
    factors = [edge_factor(a, b, g.nodes) for a, b in g.edges]
    comm = 0.0
    for i in range(len(factors)):
        for j in range(i + 1, len(factors)):
            A, B = factors[i], factors[j]
            comm = max(comm, operator_norm(A @ B - B @ A))
    F = graph_entangler(g)
    return {"max_commutator": comm, "involution_defect": operator_norm(F @ F - np.eye(g.dim))}


@dataclass(frozen=True)
class MeasurementNode:
    """Two-outcome measurement of ``observable`` on ``site``.

    ``plus`` / ``minus`` are the follow-up measurements for each outcome;
    ``None`` ends the path on that branch.
    """

    site: int
    observable: np.ndarray
    plus: "MeasurementNode | None" = None
    minus: "MeasurementNode | None" = None

    def __post_init__(self):
        O = gate_matrix(self.observable) if isinstance(self.observable, str) else as_matrix(self.observable, "observable")
        if O.shape != (2, 2) or not is_hermitian(O, 1e-10):
            raise InvalidInputError("observable must be a Hermitian 2x2 matrix")
        object.__setattr__(self, "observable", O)
        object.__setattr__(self, "site", int(self.site))

    def projections(self):
        """Spectral projections ``(E+, E-)``; ``E+`` belongs to the larger eigenvalue."""
        w, v = np.linalg.eigh((self.observable + dagger(self.observable)) / 2)
        if abs(w[1] - w[0]) <= 1e-10:
            full = np.eye(2, dtype=complex)
            zero = np.zeros((2, 2), dtype=complex)
            return (full, zero) if w[1] >= 0 else (zero, full)
        return projector(v[:, 1]), projector(v[:, 0])


def tree_paths(tree: MeasurementNode, n_sites: int) -> list:
    """``(outcome_string, Kraus)`` for every root-to-leaf path, lexicographic with ``+`` first.

    Zero-projector paths are pruned. Projectors along a path must commute.
    """
    dims = [2] * n_sites
    out = []

    def walk(node, prefix, ops):
        if node is None:
            K = np.eye(2**n_sites, dtype=complex)
            for E in ops:
                K = E @ K
            if np.max(np.abs(K)) > 1e-14:
                out.append((prefix, K))
            return
        if not 0 <= node.site < n_sites:
            raise InvalidInputError(f"tree site {node.site} out of range for {n_sites} sites")
        for sign, E, child in zip("+-", node.projections(), (node.plus, node.minus)):
            Ef = embed_operator(E, dims, [node.site])
            for prev in ops:
                if np.max(np.abs(prev @ Ef - Ef @ prev)) > 1e-10:
                    raise InvalidInputError(f"non-commuting projectors on path {prefix + sign}")
            walk(child, prefix + sign, ops + [Ef])

    walk(tree, "", [])
    return out


def measurement_tree_channel(tree: MeasurementNode, n_sites: int) -> KrausChannel:
    paths = tree_paths(tree, n_sites)
    return KrausChannel(tuple(K for _, K in paths))


def random_measurement_tree(n_sites: int, depth: int, rng=None, p_stop: float = 0.3) -> MeasurementNode:
    """Random complete tree; sites do not repeat along a path."""
    rng = np.random.default_rng(rng)
    from .linalg import random_unitary

    def build(level, used):
        free = [s for s in range(n_sites) if s not in used]
        if level >= depth or not free or (level > 0 and rng.random() < p_stop):
            return None
        site = int(rng.choice(free))
        U = random_unitary(2, rng)
        obs = U @ PAULI_Z @ dagger(U)
        return MeasurementNode(site, obs, build(level + 1, used | {site}), build(level + 1, used | {site}))

    return build(0, frozenset())


@dataclass(frozen=True)
class GraphComponent:
    channel: KrausChannel
    entangler: np.ndarray
    trace_deficient: bool
    max_trace_loss: float


def graph_component_channel(g: GraphSpec, tree: MeasurementNode) -> GraphComponent:
    """Entangle with ``V`` then measure along ``tree``: Kraus ``{E_path V}``."""
    V = graph_entangler(g)
    ops = tuple(K @ V for _, K in tree_paths(tree, g.nodes))
    channel = KrausChannel(ops)
    gram = sum(dagger(K) @ K for K in ops)
    loss = float(1.0 - np.linalg.eigvalsh((gram + dagger(gram)) / 2)[0])
    return GraphComponent(channel, V, loss > 1e-9, max(loss, 0.0))


# -- thresholds ------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdModel:
    """``eps_f`` to second order: linear weights ``B_mu`` and quadratic ``A_{mu nu}``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_1d(np.asarray(self.B, dtype=float))
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise InvalidInputError("threshold coefficients must be finite")
        if np.any(A < 0) or np.any(B < 0):
            raise InvalidInputError("threshold coefficients must be non-negative")
        if A.sum() <= 0:
            raise InvalidInputError("sum of A must be positive")
        if B.sum() <= 0:
            raise InvalidInputError("sum of B must be positive")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)


def threshold_estimate(model: ThresholdModel) -> float:
    return float(model.B.sum() / model.A.sum())


def first_order_ratio(model: ThresholdModel, eps: float) -> float:
    """``eps_f^(1) / eps_f^(0)`` at uniform ``eps`` to leading order."""
    return float(model.A.sum() / model.B.sum() * eps)


def repetition_toy(eps: float, locations: int = 8):
    """Failure probabilities of the toy two-level construction.

    Level 0: two gates, ``1 - (1 - eps)^2``. Level 1: a 3-qubit repetition
    code where each code block has ``locations`` fault locations and the
    logical gate fails once two blocks fail.
    """
    f0 = 1.0 - (1.0 - eps) ** 2
    c = 1.0 - (1.0 - eps) ** locations
    f1 = 3 * c**2 - 2 * c**3
    return f0, f1


def repetition_toy_model(locations: int = 8) -> ThresholdModel:
    """Leading-order coefficients of :func:`repetition_toy`."""
    q = 3.0 * locations**2
    return ThresholdModel(np.full((2, 2), q / 4), np.ones(2))


def repetition_toy_crossing(locations: int = 8) -> float:
    """Exact ``eps`` where the level-1 failure probability equals level 0."""

    def gap(e):
        f0, f1 = repetition_toy(e, locations)
        return f1 - f0

    return float(brentq(gap, 1e-9, 0.5))


@dataclass(frozen=True)
class LevelRatio:
    estimate: float
    witness: np.ndarray
    numerator: float
    denominator: float


def level_ratio(
    P0: QccScenario,
    P1: QccScenario,
    restarts: int = 16,
    seed: int = 0,
    floor: float = 1e-12,
) -> LevelRatio:
    """Estimate ``sup ||Delta_1(rho)||_1 / ||Delta_0(rho)||_1`` over pure ``rho``.

    Pure states with ``||Delta_0(rho)||_1 < floor`` are skipped.
    """
    if P0.N != P1.N or np.max(np.abs(P0.U - P1.U)) > 1e-12:
        raise InvalidInputError("level scenarios must share the target unitary")
    d0, d1 = deviation_superop(P0), deviation_superop(P1)
    if d0.norm_2to2() < floor:
        raise UndefinedRatioError("level-0 deviation vanishes identically")
    N = P0.N

    def ratio(psi):
        psi = psi / np.linalg.norm(psi)
        rho = projector(psi)
        den = deviation_value(d0, rho)
        if den < floor:
            return None, den
        return deviation_value(d1, rho) / den, den

    def objective(x):
        psi = x[:N] + 1j * x[N:]
        if np.linalg.norm(psi) < 1e-12:
            return 0.0
        r, _ = ratio(psi)
        return 0.0 if r is None else -r

    rng = np.random.default_rng(seed)
    starts = _structured_starts(N) + [rng.standard_normal(N) + 1j * rng.standard_normal(N) for _ in range(restarts)]
    best, best_psi = None, None
    for psi in starts:
        r0, _ = ratio(psi)
        if r0 is None:
            continue
        res = minimize(objective, np.concatenate([psi.real, psi.imag]), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 400 * N})
        cand = res.x[:N] + 1j * res.x[N:]
        r, _ = ratio(cand) if np.linalg.norm(cand) > 1e-12 else (None, 0.0)
        if r is None or r < r0:
            r, cand = r0, psi
        if best is None or r > best + 1e-15:
            best, best_psi = r, cand / np.linalg.norm(cand)
    if best is None:
        raise UndefinedRatioError("no sampled state has a non-vanishing level-0 deviation")
    rho = projector(best_psi)
    return LevelRatio(float(best), rho, deviation_value(d1, rho), deviation_value(d0, rho))
