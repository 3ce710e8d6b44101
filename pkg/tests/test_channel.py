import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcclab.channel import (
    PAULI_X,
    PAULI_Z,
    AbelianAlgebra,
    KrausChannel,
    Superoperator,
    adjoint,
    apply,
    choi_to_superop,
    completely_depolarizing,
    compose,
    conditional_expectation,
    dephasing,
    depolarizing,
    embed_channel,
    from_choi,
    identity_channel,
    random_channel,
    tensor_channels,
    to_choi,
    to_superop,
    unitary_channel,
    unvec,
    validate_cptp,
    vec,
)
from qcclab.errors import InvalidInputError, NotCompletelyPositiveError
from qcclab.linalg import operator_norm, random_density_matrix, random_matrix, random_unitary, von_neumann_entropy

PLUS = np.full((2, 2), 0.5, dtype=complex)
MINUS = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)


def _superop_close(P, Q, tol=1e-12):
    return np.max(np.abs(to_superop(P).matrix - to_superop(Q).matrix)) <= tol


def test_vec_convention():
    rng = np.random.default_rng(0)
    A, Xm, B = (random_matrix(3, 3, rng) for _ in range(3))
    assert np.allclose(vec(A @ Xm @ B), np.kron(B.T, A) @ vec(Xm))
    assert np.allclose(unvec(vec(Xm), 3), Xm)


def test_apply_examples():
    U = random_unitary(3, 1)
    rho = random_density_matrix(3, 2)
    assert np.allclose(apply(unitary_channel(U), rho), U @ rho @ U.conj().T)
    assert np.allclose(apply(depolarizing(2), random_density_matrix(2, 3)), np.eye(2) / 2)
    assert np.allclose(apply(KrausChannel((PAULI_Z,)), PLUS), MINUS)
    with pytest.raises(InvalidInputError):
        apply(depolarizing(2), np.eye(3) / 3)


def test_adjoint_examples():
    rng = np.random.default_rng(4)
    U = random_unitary(2, rng)
    T = random_matrix(2, 2, rng)
    assert np.allclose(adjoint(unitary_channel(U)).apply(T), U.conj().T @ T @ U)
    P = random_channel(3, 3, 2, rng)
    T, rho = random_matrix(3, 3, rng), random_density_matrix(3, rng)
    assert abs(np.trace(adjoint(P).apply(T) @ rho) - np.trace(T @ P(rho))) <= 1e-10
    E = conditional_expectation(AbelianAlgebra(3, ((0,), (1, 2))))
    assert np.allclose(adjoint(E).matrix, to_superop(E).matrix, atol=1e-12)


def test_compose_examples():
    P = random_channel(2, 2, 3, 5)
    assert _superop_close(compose(P, identity_channel(2)), P)
    assert _superop_close(compose(KrausChannel((PAULI_X,)), KrausChannel((PAULI_X,))), identity_channel(2))
    p, q = 0.1, 0.3
    out = compose(dephasing(p), dephasing(q))(PLUS)
    assert out[0, 1] == pytest.approx(0.5 * (1 - 2 * p) * (1 - 2 * q))
    with pytest.raises(InvalidInputError):
        compose(identity_channel(3), identity_channel(2))


def test_choi_examples():
    phi = np.array([1, 0, 0, 1], dtype=complex)
    assert np.allclose(to_choi(identity_channel(2)), np.outer(phi, phi))
    assert np.linalg.matrix_rank(to_choi(identity_channel(2))) == 1
    assert np.allclose(to_choi(depolarizing(2)), np.eye(4) / 2)
    # transpose map: Choi is the swap operator with eigenvalue -1
    swap = np.eye(4)[[0, 2, 1, 3]]
    with pytest.raises(NotCompletelyPositiveError):
        from_choi(swap, 2, 2)


def test_choi_from_definition_oracle():
    # C = sum_ij E_ij (x) P(E_ij), built by hand
    P = random_channel(2, 3, 2, 8)
    C = np.zeros((6, 6), dtype=complex)
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2))
            E[i, j] = 1
            C += np.kron(E, P(E))
    assert np.allclose(to_choi(P), C)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_choi_kraus_superop_round_trips(dim):
    rng = np.random.default_rng(dim)
    for _ in range(100):
        P = random_channel(dim, dim, int(rng.integers(1, dim * dim + 1)), rng)
        Q = from_choi(to_choi(P), dim, dim)
        assert np.max(np.abs(to_superop(Q).matrix - to_superop(P).matrix)) <= 1e-9
        S = choi_to_superop(to_choi(P), dim, dim)
        assert np.max(np.abs(S.matrix - to_superop(P).matrix)) <= 1e-12
        rho = random_density_matrix(dim, rng)
        assert np.allclose(to_superop(P).apply(rho), P(rho), atol=1e-10)


def test_validate_examples():
    rep = validate_cptp(unitary_channel(random_unitary(3, 0)))
    assert rep.passed and rep.trace_defect <= 1e-14
    rep = validate_cptp(KrausChannel((np.eye(2) / 2,)))
    assert not rep.passed and rep.trace_defect == pytest.approx(0.75)
    assert validate_cptp(depolarizing(2)).passed
    assert validate_cptp(to_superop(dephasing(0.2))).passed


def test_factories_are_cptp_and_unital_dual():
    alg = AbelianAlgebra(4, ((0, 3), (1,), (2,)), random_unitary(4, 2))
    chans = [
        depolarizing(2),
        depolarizing(3),
        depolarizing(4),
        completely_depolarizing(3),
        dephasing(0.3),
        conditional_expectation(alg),
        unitary_channel(random_unitary(3, 1)),
        tensor_channels(dephasing(0.1), depolarizing(2)),
        embed_channel(dephasing(0.2), [2, 2, 2], [1]),
    ]
    chans.append(compose(chans[0], chans[4]))
    for P in chans:
        assert validate_cptp(P, 1e-9).passed
        # Heisenberg picture is unital
        assert operator_norm(adjoint(P).apply(np.eye(P.dim_out)) - np.eye(P.dim_in)) <= 1e-9


def test_conditional_expectation_examples():
    E = conditional_expectation(AbelianAlgebra.diagonal(2))
    assert np.allclose(E(PAULI_X), 0)
    assert np.allclose(E(np.diag([0.3, -2.0])), np.diag([0.3, -2.0]))
    T = random_matrix(2, 2, 0)
    assert np.allclose(conditional_expectation(AbelianAlgebra(2, ((0, 1),)))(T), np.trace(T) / 2 * np.eye(2))
    with pytest.raises(InvalidInputError):
        AbelianAlgebra(2, ((0,), ()))
    with pytest.raises(InvalidInputError):
        AbelianAlgebra(3, ((0, 1),))


def test_conditional_expectation_is_idempotent_projection():
    alg = AbelianAlgebra(4, ((0, 2), (1, 3)), random_unitary(4, 6))
    S = to_superop(conditional_expectation(alg)).matrix
    assert np.allclose(S @ S, S, atol=1e-12)


def test_dephasing_examples():
    assert _superop_close(dephasing(0.0), identity_channel(2))
    rho = random_density_matrix(2, 3)
    out = dephasing(0.2)(rho)
    assert np.allclose(np.diag(out), np.diag(rho))
    assert out[0, 1] == pytest.approx(0.6 * rho[0, 1])
    with pytest.raises(InvalidInputError):
        dephasing(1.5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4))
def test_entropy_monotone_under_pinching_and_unitary(seed, n):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(n, rng)
    E = conditional_expectation(AbelianAlgebra.diagonal(n, random_unitary(n, rng)))
    assert von_neumann_entropy(E(rho)) >= von_neumann_entropy(rho) - 1e-8
    U = random_unitary(n, rng)
    assert abs(von_neumann_entropy(U @ rho @ U.conj().T) - von_neumann_entropy(rho)) <= 1e-8


def test_superoperator_dual_and_identity():
    S = to_superop(random_channel(2, 3, 2, 1))
    rng = np.random.default_rng(2)
    A, B = random_matrix(3, 3, rng), random_matrix(2, 2, rng)
    lhs = np.trace(A.conj().T @ S.apply(B))
    rhs = np.trace(S.dual().apply(A).conj().T @ B)
    assert lhs == pytest.approx(rhs)
    assert np.allclose(Superoperator.identity(3).matrix, np.eye(9))
