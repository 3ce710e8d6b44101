import numpy as np
import pytest

from qcclab.channel import (
    KrausChannel,
    completely_depolarizing,
    dephasing,
    depolarizing,
    embed_channel,
    identity_channel,
    random_channel,
    unitary_channel,
)
from qcclab.errors import InvalidInputError
from qcclab.linalg import operator_norm, projector, random_density_matrix, random_state_vector, random_unitary, trace_norm
from qcclab.qcc import (
    FAILS,
    HOLDS,
    UNDETERMINED,
    OqecScenario,
    QccScenario,
    correctability_defect,
    deviation_superop,
    deviation_value,
    implementation_inaccuracy,
    max_entropy_distance,
    oqec_correctable,
    oqec_to_qcc,
    qcc_holds,
)

PLUS = np.full((2, 2), 0.5, dtype=complex)


def test_deviation_superop_examples():
    U = random_unitary(3, 0)
    assert np.allclose(deviation_superop(QccScenario(U, unitary_channel(U))).matrix, 0, atol=1e-12)
    assert np.allclose(deviation_superop(QccScenario(np.eye(2), identity_channel(2))).matrix, 0)
    d = deviation_superop(QccScenario(np.eye(2), completely_depolarizing(2)))
    rho = random_density_matrix(2, 1)
    assert np.allclose(d.apply(rho), np.eye(2) / 2 - rho)


def test_scenario_validation():
    with pytest.raises(InvalidInputError):
        QccScenario(np.eye(2), KrausChannel((np.eye(2) / 2,)))
    with pytest.raises(InvalidInputError):
        QccScenario(np.eye(2), identity_channel(3))
    with pytest.raises(InvalidInputError):
        QccScenario(np.eye(2), identity_channel(2), alpha=-0.1)


def test_inaccuracy_examples():
    U = random_unitary(2, 3)
    rep = implementation_inaccuracy(QccScenario(U, unitary_channel(U), alpha=0.0))
    assert rep.lower <= 1e-12 and rep.upper <= 1e-12 and rep.verdict == HOLDS
    rep = implementation_inaccuracy(QccScenario(np.eye(2), completely_depolarizing(2)))
    assert rep.lower == pytest.approx(1.0, abs=1e-6)
    rep = implementation_inaccuracy(QccScenario(np.eye(2), dephasing(0.1)))
    assert rep.lower == pytest.approx(0.2, abs=1e-6)


def test_verdict_examples():
    U = random_unitary(2, 1)
    assert qcc_holds(QccScenario(U, unitary_channel(U), alpha=0.01))[0] == HOLDS
    assert qcc_holds(QccScenario(np.eye(2), depolarizing(2), alpha=0.5))[0] == FAILS
    verdict, rep = qcc_holds(QccScenario(np.eye(2), dephasing(0.1), alpha=0.25))
    # upper is sqrt(2) * 0.2 for this map
    assert rep.upper == pytest.approx(np.sqrt(2) * 0.2)
    assert verdict == (HOLDS if rep.upper <= 0.25 else UNDETERMINED) == UNDETERMINED


def test_witness_reproduces_lower_and_bracket():
    rng = np.random.default_rng(12)
    for N in (2, 3):
        P = random_channel(N, N, 2, rng)
        sc = QccScenario(random_unitary(N, rng), P, alpha=0.1)
        rep = implementation_inaccuracy(sc, restarts=16, seed=5)
        d = deviation_superop(sc)
        assert deviation_value(d, rep.witness) == pytest.approx(rep.lower, abs=1e-9)
        assert rep.lower <= rep.upper + 1e-9
        brute = max(deviation_value(d, projector(random_state_vector(N, rng))) for _ in range(2000))
        assert brute <= rep.upper + 1e-9
        assert brute <= rep.lower + 1e-9


def test_pure_states_dominate_mixed():
    # convexity: mixed inputs never beat the pure-state optimum
    rng = np.random.default_rng(2)
    sc = QccScenario(np.eye(3), random_channel(3, 3, 3, rng))
    rep = implementation_inaccuracy(sc)
    d = deviation_superop(sc)
    for _ in range(500):
        assert deviation_value(d, random_density_matrix(3, rng)) <= rep.lower + 1e-9


def test_unitary_relabelling_invariance():
    rng = np.random.default_rng(8)
    P = random_channel(2, 2, 2, rng)
    U, W = random_unitary(2, rng), random_unitary(2, rng)
    base = implementation_inaccuracy(QccScenario(U, P), seed=1)
    PW = KrausChannel(tuple(W @ X for X in P.kraus))
    moved = implementation_inaccuracy(QccScenario(W @ U, PW), seed=1)
    assert moved.upper == pytest.approx(base.upper, abs=1e-9)
    assert moved.lower == pytest.approx(base.lower, abs=1e-9)


def test_ersatz_iff_zero_deviation():
    U = random_unitary(3, 4)
    assert operator_norm(deviation_superop(QccScenario(U, unitary_channel(U))).matrix) <= 1e-10
    assert operator_norm(deviation_superop(QccScenario(U, depolarizing(3))).matrix) > 1e-3


def test_seeded_runs_are_deterministic():
    sc = QccScenario(np.eye(3), random_channel(3, 3, 2, 0))
    a = implementation_inaccuracy(sc, seed=42, restarts=8)
    b = implementation_inaccuracy(sc, seed=42, restarts=8, threads=4)
    assert a.lower == b.lower and np.array_equal(a.witness, b.witness)


def test_max_entropy_examples():
    assert max_entropy_distance(2) == (1.0, 0.5)
    assert max_entropy_distance(4) == (1.5, 0.75)
    assert max_entropy_distance(1) == (0.0, 0.0)
    with pytest.raises(InvalidInputError):
        max_entropy_distance(0)


# -- OQEC ------------------------------------------------------------------

def _noise_on(factor, channel):
    # dA = dB = 2, no K; A is subsystem 0
    return embed_channel(channel, [2, 2], [factor])


def test_oqec_examples():
    idn = identity_channel(4)
    on_a = OqecScenario(2, 2, 0, _noise_on(0, depolarizing(2)), idn)
    res = oqec_correctable(on_a)
    assert res.correctable and res.max_defect <= 1e-9
    on_b = OqecScenario(2, 2, 0, _noise_on(1, dephasing(0.25)), idn)
    res = oqec_correctable(on_b)
    assert not res.correctable
    assert correctability_defect(on_b, np.eye(2) / 2, PLUS) >= 0.2
    assert oqec_correctable(OqecScenario(2, 2, 1, identity_channel(5), identity_channel(5))).correctable


def test_oqec_reduction_examples():
    idn = identity_channel(4)
    sigma_A = random_density_matrix(2, 3)
    on_a = OqecScenario(2, 2, 0, _noise_on(0, depolarizing(2)), idn)
    assert implementation_inaccuracy(oqec_to_qcc(on_a, sigma_A)).lower <= 1e-8
    on_b = OqecScenario(2, 2, 0, _noise_on(1, dephasing(0.25)), idn)
    direct = oqec_correctable(on_b).max_defect
    lower = implementation_inaccuracy(oqec_to_qcc(on_b, sigma_A)).lower
    assert lower >= 0.19 and abs(lower - direct) <= 0.01
    trivial = OqecScenario(2, 2, 0, idn, idn)
    rep = implementation_inaccuracy(oqec_to_qcc(trivial, np.diag([1.0, 0.0])))
    assert rep.lower == 0.0 and rep.upper == 0.0
    # a generic sigma_A goes through an eigendecomposition: zero up to rounding
    rep = implementation_inaccuracy(oqec_to_qcc(trivial, sigma_A))
    assert rep.lower <= 1e-15 and rep.verdict == HOLDS


def test_oqec_leakage_keeps_dec_trace_preserving():
    # error moves everything into K; the reduction still yields CPTP maps
    n = 5
    leak = np.zeros((n, n), dtype=complex)
    leak[4, :] = 1.0
    ops = [np.outer(np.eye(n)[4], np.eye(n)[j]) for j in range(n)]
    sc = oqec_to_qcc(OqecScenario(2, 2, 1, KrausChannel(tuple(ops)), identity_channel(n)), np.eye(2) / 2)
    out = sc.dec(sc.P(sc.enc(PLUS)))
    assert np.trace(out) == pytest.approx(1.0)
    assert trace_norm(out - np.eye(2) / 2) <= 1e-12
