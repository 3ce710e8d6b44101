"""Propagators of the time-dependent Lindblad equation.

The generator is

    A(t) rho = -i [H(t), rho] + sum_j ( L_j rho L_j^dag - 1/2 {L_j^dag L_j, rho} )

(hbar = 1). Propagators are built as time-ordered products of exponentials
over a uniform mesh with the generator frozen at the left endpoint of each
interval, or with the Lie-Trotter split of each factor into its dissipative
and Hamiltonian parts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as spl

from .channel import KrausChannel, Superoperator, from_choi, validate_cptp
from .errors import CapacityError, ConvergenceError, InvalidInputError, PropagatorDefectError
from .linalg import as_matrix, dagger, is_hermitian

MAX_ADAPTIVE_DIM = 16
MAX_ADAPTIVE_STEPS = 2**20
PROPAGATOR_TOL = 1e-7
_DOMAIN_SLACK = 1e-12


# -- schedules -------------------------------------------------------------

@dataclass(frozen=True)
class ScalarProfile:
    """Real coefficient ``c(t)`` of one of the declarative kinds.

    ``constant``: ``value``.
    ``linear``: straight line through ``(t0, start)`` and ``(t1, end)``.
    ``table``: piecewise-linear through ``(times[k], values[k])``, held constant outside.
    ``sin``: ``offset + amplitude * sin(omega * t + phase)``.
    """

    kind: str
    params: tuple = ()

    KINDS = ("constant", "linear", "table", "sin")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")
        p = dict(self.params)
        if self.kind == "table":
            times = np.asarray(p.get("times", ()), dtype=float)
            values = np.asarray(p.get("values", ()), dtype=float)
            if times.size == 0 or times.shape != values.shape or np.any(np.diff(times) <= 0):
                raise InvalidInputError("table schedule needs matching, strictly increasing times and values")
        if self.kind == "linear" and float(p.get("t1", 1.0)) == float(p.get("t0", 0.0)):
            raise InvalidInputError("linear schedule needs t1 != t0")

    @classmethod
    def constant(cls, value: float = 1.0) -> "ScalarProfile":
        return cls("constant", (("value", float(value)),))

    @classmethod
    def linear(cls, start: float, end: float, t0: float, t1: float) -> "ScalarProfile":
        return cls("linear", (("start", float(start)), ("end", float(end)), ("t0", float(t0)), ("t1", float(t1))))

    @classmethod
    def table(cls, times: Sequence[float], values: Sequence[float]) -> "ScalarProfile":
        return cls("table", (("times", tuple(float(x) for x in times)), ("values", tuple(float(x) for x in values))))

    @classmethod
    def sin(cls, amplitude: float = 1.0, omega: float = 1.0, phase: float = 0.0, offset: float = 0.0) -> "ScalarProfile":
        return cls(
            "sin",
            (("amplitude", float(amplitude)), ("omega", float(omega)), ("phase", float(phase)), ("offset", float(offset))),
        )

    def __call__(self, t: float) -> float:
        p = dict(self.params)
        if self.kind == "constant":
            return p.get("value", 1.0)
        if self.kind == "linear":
            t0, t1 = p.get("t0", 0.0), p.get("t1", 1.0)
            return p["start"] + (p["end"] - p["start"]) * (t - t0) / (t1 - t0)
        if self.kind == "table":
            return float(np.interp(t, p["times"], p["values"]))
        return p.get("offset", 0.0) + p.get("amplitude", 1.0) * np.sin(p.get("omega", 1.0) * t + p.get("phase", 0.0))

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def as_dict(self) -> dict:
        return {"kind": self.kind, **{k: list(v) if isinstance(v, tuple) else v for k, v in self.params}}


@dataclass(frozen=True)
class MatrixSchedule:
    """Time-indexed matrix ``M(t) = sum_k c_k(t) M_k``."""

    terms: tuple

    def __post_init__(self):
        terms = []
        for prof, M in self.terms:
            if not isinstance(prof, ScalarProfile):
                raise InvalidInputError("schedule terms must pair a ScalarProfile with a matrix")
            M = np.array(as_matrix(M), dtype=complex)
            M.setflags(write=False)
            terms.append((prof, M))
        shapes = {M.shape for _, M in terms}
        if len(shapes) > 1 or any(s[0] != s[1] for s in shapes):
            raise InvalidInputError("schedule matrices must be square with a common shape")
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def constant(cls, M) -> "MatrixSchedule":
        return cls(((ScalarProfile.constant(1.0), M),))

    @classmethod
    def zero(cls, dim: int) -> "MatrixSchedule":
        return cls(())._with_dim(dim)

    def _with_dim(self, dim):
        object.__setattr__(self, "_dim", dim)
        return self

    @property
    def dim(self) -> int | None:
        if self.terms:
            return self.terms[0][1].shape[0]
        return getattr(self, "_dim", None)

    @property
    def is_constant(self) -> bool:
        return all(prof.is_constant for prof, _ in self.terms)

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for prof, M in self.terms:
            out = out + prof(t) * M
        return out

    def __add__(self, other: "MatrixSchedule") -> "MatrixSchedule":
        return MatrixSchedule(self.terms + other.terms)._with_dim(self.dim or other.dim)


# -- generator -------------------------------------------------------------

@dataclass(frozen=True)
class LindbladGenerator:
    dim: int
    hamiltonian: MatrixSchedule
    dissipators: tuple = ()
    domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        if isinstance(self.hamiltonian, np.ndarray) or isinstance(self.hamiltonian, (list, tuple)):
            object.__setattr__(self, "hamiltonian", MatrixSchedule.constant(self.hamiltonian))
        diss = tuple(
            d if isinstance(d, MatrixSchedule) else MatrixSchedule.constant(d) for d in self.dissipators
        )
        object.__setattr__(self, "dissipators", diss)
        for sched in (self.hamiltonian,) + diss:
            if sched.dim is not None and sched.dim != self.dim:
                raise InvalidInputError(f"schedule dimension {sched.dim} != generator dim {self.dim}")
        s, t = (float(x) for x in self.domain)
        if not s <= t:
            raise InvalidInputError(f"time domain {self.domain} is not ordered")
        object.__setattr__(self, "domain", (s, t))

    @property
    def is_time_independent(self) -> bool:
        return self.hamiltonian.is_constant and all(d.is_constant for d in self.dissipators)

    def _check_time(self, t):
        s, e = self.domain
        if not (s - _DOMAIN_SLACK <= t <= e + _DOMAIN_SLACK):
            raise InvalidInputError(f"time {t} outside generator domain {self.domain}")

    def H(self, t: float) -> np.ndarray:
        self._check_time(t)
        if self.hamiltonian.dim is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        H = self.hamiltonian(t)
        if not is_hermitian(H, 1e-10):
            raise InvalidInputError(f"H({t}) is not Hermitian")
        return H

    def L(self, t: float) -> list:
        self._check_time(t)
        return [d(t) for d in self.dissipators]


def hamiltonian_superop(gen: LindbladGenerator, t: float) -> Superoperator:
    """Matrix of ``rho -> -i [H(t), rho]``."""
    H = gen.H(t)
    eye = np.eye(gen.dim)
    return Superoperator(-1j * (np.kron(eye, H) - np.kron(H.T, eye)), gen.dim, gen.dim)


def dissipator_superop(gen: LindbladGenerator, t: float) -> Superoperator:
    """Matrix of ``rho -> sum_j L_j rho L_j^dag - 1/2 {L_j^dag L_j, rho}``."""
    eye = np.eye(gen.dim)
    m = np.zeros((gen.dim**2, gen.dim**2), dtype=complex)
    for L in gen.L(t):
        LdL = dagger(L) @ L
        m += np.kron(np.conj(L), L) - 0.5 * np.kron(eye, LdL) - 0.5 * np.kron(LdL.T, eye)
    return Superoperator(m, gen.dim, gen.dim)


def generator_superop(gen: LindbladGenerator, t: float) -> Superoperator:
    return hamiltonian_superop(gen, t) + dissipator_superop(gen, t)


# -- propagators -----------------------------------------------------------

@dataclass(frozen=True)
class Propagator:
    superop: Superoperator
    s: float
    t: float
    steps_used: int
    defect: dict = field(default_factory=dict)

    def __call__(self, rho) -> np.ndarray:
        return self.superop.apply(rho)

    @property
    def channel(self) -> KrausChannel:
        return from_choi(self.superop.choi(), self.superop.dim_in, tol=PROPAGATOR_TOL)


def _mesh(gen, s, t, n_steps):
    if n_steps < 1 or int(n_steps) != n_steps:
        raise InvalidInputError(f"n_steps must be a positive integer, got {n_steps}")
    if s > t:
        raise InvalidInputError(f"need s <= t, got s={s}, t={t}")
    gen._check_time(s)
    gen._check_time(t)
    return np.linspace(s, t, int(n_steps) + 1)


def _finish(matrix, gen, s, t, steps, check=True) -> Propagator:
    S = Superoperator(matrix, gen.dim, gen.dim)
    report = validate_cptp(S, PROPAGATOR_TOL)
    defect = {"trace_defect": report.trace_defect, "choi_min_eig": report.choi_min_eig}
    if check and not report.passed:
        raise PropagatorDefectError(
            f"propagator violates CPTP: trace defect {report.trace_defect:.3e}, "
            f"Choi min eigenvalue {report.choi_min_eig:.3e}"
        )
    return Propagator(S, float(s), float(t), int(steps), defect)


def _ordered_product(factors) -> np.ndarray:
    out = None
    for F in factors:  # later factors multiply on the left
        out = F if out is None else F @ out
    return out


def evolve_product(gen: LindbladGenerator, s: float, t: float, n_steps: int, check: bool = True) -> Propagator:
    """``prod_k exp((r_{k+1} - r_k) A(r_k))`` over the uniform mesh, later times on the left."""
    r = _mesh(gen, s, t, n_steps)
    d2 = gen.dim**2
    if s == t:
        return _finish(np.eye(d2, dtype=complex), gen, s, t, n_steps, check)
    if gen.is_time_independent:
        step = spl.expm((r[1] - r[0]) * generator_superop(gen, s).matrix)
        return _finish(np.linalg.matrix_power(step, len(r) - 1), gen, s, t, n_steps, check)
    factors = (spl.expm((r[k + 1] - r[k]) * generator_superop(gen, r[k]).matrix) for k in range(len(r) - 1))
    return _finish(_ordered_product(factors), gen, s, t, n_steps, check)


def evolve_trotter(gen: LindbladGenerator, s: float, t: float, n_steps: int, check: bool = True) -> Propagator:
    """Lie-Trotter variant: each mesh factor is ``exp(dt L(r_k)) exp(dt H(r_k))``."""
    r = _mesh(gen, s, t, n_steps)
    d2 = gen.dim**2
    if s == t:
        return _finish(np.eye(d2, dtype=complex), gen, s, t, n_steps, check)

    def factor(k):
        dt = r[k + 1] - r[k]
        return spl.expm(dt * dissipator_superop(gen, r[k]).matrix) @ spl.expm(dt * hamiltonian_superop(gen, r[k]).matrix)

    if gen.is_time_independent:
        return _finish(np.linalg.matrix_power(factor(0), len(r) - 1), gen, s, t, n_steps, check)
    return _finish(_ordered_product(factor(k) for k in range(len(r) - 1)), gen, s, t, n_steps, check)


def evolve_adaptive(
    gen: LindbladGenerator,
    s: float,
    t: float,
    target_tol: float,
    method: str = "product",
    start_steps: int = 1,
    max_steps: int = MAX_ADAPTIVE_STEPS,
) -> Propagator:
    """Double the mesh until successive propagators agree to ``target_tol`` in the 2->2 norm.

    Raises:
        ConvergenceError: no agreement before ``max_steps``.
        CapacityError: ``gen.dim`` above the dense cap.
    """
    if target_tol <= 0:
        raise InvalidInputError("target_tol must be positive")
    if gen.dim > MAX_ADAPTIVE_DIM:
        raise CapacityError(f"adaptive evolution capped at dim {MAX_ADAPTIVE_DIM}, got {gen.dim}")
    evolve = {"product": evolve_product, "trotter": evolve_trotter}.get(method)
    if evolve is None:
        raise InvalidInputError(f"unknown method {method!r}")
    n = int(start_steps)
    prev = evolve(gen, s, t, n, check=False)
    while n < max_steps:
        n *= 2
        cur = evolve(gen, s, t, n, check=False)
        diff = float(np.linalg.norm(cur.superop.matrix - prev.superop.matrix, 2))
        if diff < target_tol:
            return _finish(cur.superop.matrix, gen, s, t, n, check=True)
        prev = cur
    raise ConvergenceError(f"no convergence to {target_tol:g} within {max_steps} steps")


# -- adiabatic schedules ---------------------------------------------------

@dataclass(frozen=True)
class AdiabaticSchedule:
    """``H(t) = f(t) H0 + g(t) Hf`` on ``[0, T]`` with ``f: 1 -> 0`` and ``g: 0 -> 1``."""

    H0: np.ndarray
    Hf: np.ndarray
    T: float
    f: ScalarProfile = None
    g: ScalarProfile = None

    def __post_init__(self):
        if self.T <= 0:
            raise InvalidInputError("adiabatic duration T must be positive")
        H0, Hf = as_matrix(self.H0, "H0"), as_matrix(self.Hf, "Hf")
        if H0.shape != Hf.shape or not (is_hermitian(H0) and is_hermitian(Hf)):
            raise InvalidInputError("H0 and Hf must be Hermitian of equal shape")
        f = ScalarProfile.linear(1.0, 0.0, 0.0, self.T) if self.f is None else self.f
        g = ScalarProfile.linear(0.0, 1.0, 0.0, self.T) if self.g is None else self.g
        for name, prof, a, b in (("f", f, 1.0, 0.0), ("g", g, 0.0, 1.0)):
            if abs(prof(0.0) - a) > 1e-12 or abs(prof(self.T) - b) > 1e-12:
                raise InvalidInputError(f"schedule {name} must satisfy {name}(0)={a:g}, {name}(T)={b:g}")
        object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "Hf", Hf)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)


def adiabatic_generator(
    schedule: AdiabaticSchedule,
    unitary_error: MatrixSchedule | None = None,
    dissipators: Sequence = (),
) -> LindbladGenerator:
    """Generator with ``H(t) = f(t) H0 + g(t) Hf + V(t)`` on ``[0, T]``."""
    H = MatrixSchedule(((schedule.f, schedule.H0), (schedule.g, schedule.Hf)))
    if unitary_error is not None:
        H = H + unitary_error
    return LindbladGenerator(schedule.H0.shape[0], H, tuple(dissipators), (0.0, schedule.T))
