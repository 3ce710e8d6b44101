"""JSON encodings of the domain objects.

Matrices are ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` in row-major
order. Wherever a matrix is expected a plain nested list of numbers, a gate
name from :data:`qcclab.paradigms.GATES`, or the name of an entry in the
file's top-level ``"matrices"`` table is accepted too.

Output uses :func:`dumps`, which prints floats with 17 significant digits so
that equal inputs give byte-identical files.
"""
from __future__ import annotations

import json
import math
from typing import Any, Mapping

import numpy as np

from . import channel as ch
from .errors import InvalidInputError
from .lindblad import LindbladGenerator, MatrixSchedule, ScalarProfile

# -- encoding --------------------------------------------------------------


def matrix_to_json(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in M.reshape(-1)],
    }


def _to_plain(obj):
    if isinstance(obj, Mapping):
        return {str(k): _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return matrix_to_json(obj)
        return [_to_plain(x) for x in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_to_plain(x) for x in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return _to_plain(obj.as_dict())
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _emit(obj, indent, level, out):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(k) + ": ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        # flat lists of scalars stay on one line
        if all(not isinstance(v, (dict, list)) for v in obj) or all(
            isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v) for v in obj
        ):
            out.append("[" + ", ".join(_scalar_or_pair(v) for v in obj) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, bool) or v is None or isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    return _fmt_float(float(v))


def _scalar_or_pair(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    return _scalar(v)


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text; non-finite floats become ``null``."""
    out: list = []
    _emit(_to_plain(obj), indent, 0, out)
    return "".join(out) + "\n"


# -- decoding --------------------------------------------------------------


class Context:
    """Named matrices visible while decoding one file."""

    def __init__(self, matrices: Mapping | None = None):
        self.named: dict = {}
        for name, m in (matrices or {}).items():
            self.named[name] = matrix_from_json(m, self, f"matrices.{name}")

    @classmethod
    def of(cls, doc: Mapping) -> "Context":
        return cls(doc.get("matrices") if isinstance(doc, Mapping) else None)


def _require(doc, key, where):
    if not isinstance(doc, Mapping) or key not in doc:
        raise InvalidInputError(f"{where}: missing key {key!r}")
    return doc[key]


def matrix_from_json(obj, ctx: Context | None = None, where: str = "matrix") -> np.ndarray:
    from .paradigms import GATES

    if isinstance(obj, str):
        if ctx is not None and obj in ctx.named:
            return ctx.named[obj]
        if obj.upper() in GATES:
            return GATES[obj.upper()]
        raise InvalidInputError(f"{where}: unknown matrix name {obj!r}")
    if isinstance(obj, Mapping):
        rows, cols, data = (_require(obj, k, where) for k in ("rows", "cols", "data"))
        if len(data) != rows * cols:
            raise InvalidInputError(f"{where}: expected {rows * cols} entries, got {len(data)}")
        try:
            vals = [complex(float(re), float(im)) for re, im in data]
        except (TypeError, ValueError):
            raise InvalidInputError(f"{where}: data entries must be [re, im] pairs") from None
        return np.array(vals, dtype=complex).reshape(rows, cols)
    if isinstance(obj, list):
        try:
            arr = np.array([[complex(*x) if isinstance(x, list) else complex(x) for x in row] for row in obj])
        except (TypeError, ValueError):
            raise InvalidInputError(f"{where}: not a numeric matrix") from None
        if arr.ndim != 2:
            raise InvalidInputError(f"{where}: nested list must be rectangular")
        return arr
    raise InvalidInputError(f"{where}: cannot read a matrix from {type(obj).__name__}")


def channel_from_json(obj, ctx: Context | None = None, where: str = "channel") -> ch.KrausChannel:
    """``{"kraus": [...]}`` or ``{"factory": name, ...}``."""
    ctx = ctx or Context()
    if not isinstance(obj, Mapping):
        raise InvalidInputError(f"{where}: channel must be an object")
    if "kraus" in obj:
        ops = obj["kraus"]
        if not isinstance(ops, list) or not ops:
            raise InvalidInputError(f"{where}.kraus: need a non-empty list")
        return ch.KrausChannel(tuple(matrix_from_json(m, ctx, f"{where}.kraus[{i}]") for i, m in enumerate(ops)))
    name = _require(obj, "factory", where)
    dim = int(obj.get("dim", 2))
    if name == "identity":
        return ch.identity_channel(dim)
    if name == "unitary":
        return ch.unitary_channel(matrix_from_json(_require(obj, "U", where), ctx, f"{where}.U"))
    if name == "depolarizing":
        return ch.depolarizing(dim)
    if name == "completely-depolarizing":
        return ch.completely_depolarizing(dim)
    if name == "dephasing":
        return ch.dephasing(float(_require(obj, "p", where)))
    if name == "pinching":
        return ch.conditional_expectation(algebra_from_json(obj.get("algebra", {"dim": dim}), ctx, f"{where}.algebra"))
    from .nogo import FAMILIES

    if name in FAMILIES:
        return FAMILIES[name](float(_require(obj, "param", where)), dim=dim)
    raise InvalidInputError(f"{where}: unknown channel factory {name!r}")


def channel_to_json(P: ch.KrausChannel) -> dict:
    return {"kraus": [matrix_to_json(X) for X in P.kraus]}


def algebra_from_json(obj, ctx: Context | None = None, where: str = "algebra") -> ch.AbelianAlgebra:
    """``{"dim": n, "blocks": [[0], [1, 2]], "basis": matrix}``; blocks default to singletons."""
    if not isinstance(obj, Mapping):
        raise InvalidInputError(f"{where}: algebra must be an object")
    dim = int(_require(obj, "dim", where))
    basis = matrix_from_json(obj["basis"], ctx, f"{where}.basis") if "basis" in obj else None
    blocks = obj.get("blocks")
    if blocks is None:
        return ch.AbelianAlgebra.diagonal(dim, basis)
    return ch.AbelianAlgebra(dim, tuple(tuple(b) for b in blocks), basis)


def profile_from_json(obj, where: str = "profile") -> ScalarProfile:
    if isinstance(obj, (int, float)):
        return ScalarProfile.constant(float(obj))
    kind = _require(obj, "kind", where)
    params = {k: v for k, v in obj.items() if k != "kind"}
    try:
        if kind == "constant":
            return ScalarProfile.constant(**params)
        if kind == "linear":
            return ScalarProfile.linear(**params)
        if kind == "table":
            return ScalarProfile.table(**params)
        if kind == "sin":
            return ScalarProfile.sin(**params)
    except TypeError as exc:
        raise InvalidInputError(f"{where}: {exc}") from None
    raise InvalidInputError(f"{where}: unknown profile kind {kind!r}")


def schedule_from_json(obj, ctx: Context | None = None, where: str = "schedule") -> MatrixSchedule:
    """A matrix (constant in time) or ``{"sum": [{"profile": ..., "matrix": ...}, ...]}``."""
    if isinstance(obj, Mapping) and "sum" in obj:
        terms = []
        for i, term in enumerate(obj["sum"]):
            w = f"{where}.sum[{i}]"
            prof = profile_from_json(term.get("profile", 1.0), f"{w}.profile")
            terms.append((prof, matrix_from_json(_require(term, "matrix", w), ctx, f"{w}.matrix")))
        return MatrixSchedule(tuple(terms))
    return MatrixSchedule.constant(matrix_from_json(obj, ctx, where))


def generator_from_json(obj, ctx: Context | None = None, where: str = "generator") -> LindbladGenerator:
    """``{"dim": n, "hamiltonian": schedule, "dissipators": [schedule, ...], "domain": [s, t]}``."""
    ctx = ctx or Context.of(obj)
    dim = int(_require(obj, "dim", where))
    H = obj.get("hamiltonian")
    H = MatrixSchedule.zero(dim) if H is None else schedule_from_json(H, ctx, f"{where}.hamiltonian")
    diss = tuple(schedule_from_json(d, ctx, f"{where}.dissipators[{i}]") for i, d in enumerate(obj.get("dissipators", [])))
    domain = tuple(obj.get("domain", (0.0, 1.0)))
    if len(domain) != 2:
        raise InvalidInputError(f"{where}.domain: need [s, t]")
    return LindbladGenerator(dim, H, diss, domain)


def scenario_from_json(obj, ctx: Context | None = None):
    """``{"U": matrix, "P": channel, "enc": channel?, "dec": channel?, "alpha": a}``."""
    from .qcc import QccScenario

    ctx = ctx or Context.of(obj)
    U = matrix_from_json(_require(obj, "U", "scenario"), ctx, "U")
    P = channel_from_json(_require(obj, "P", "scenario"), ctx, "P")
    enc = channel_from_json(obj["enc"], ctx, "enc") if obj.get("enc") is not None else None
    dec = channel_from_json(obj["dec"], ctx, "dec") if obj.get("dec") is not None else None
    return QccScenario(U, P, enc, dec, float(obj.get("alpha", 0.0)))


def circuit_from_json(obj, ctx: Context | None = None):
    from .paradigms import CircuitSpec, GateSpec

    ctx = ctx or Context.of(obj)
    gates = []
    for i, g in enumerate(_require(obj, "gates", "circuit")):
        w = f"gates[{i}]"
        err = g.get("error", "depolarizing")
        if not isinstance(err, str):
            err = channel_from_json(err, ctx, f"{w}.error")
        U = matrix_from_json(_require(g, "unitary", w), ctx, f"{w}.unitary")
        gates.append(GateSpec(tuple(_require(g, "support", w)), U, float(g.get("epsilon", 0.0)), err))
    return CircuitSpec(int(_require(obj, "n_wires", "circuit")), tuple(gates), int(obj.get("wire_dim", 2)))


def graph_from_json(obj, ctx: Context | None = None):
    from .paradigms import GraphSpec

    ctx = ctx or Context.of(obj)
    ent = obj.get("entangler", "cz-product")
    if ent != "cz-product":
        ent = matrix_from_json(ent, ctx, "entangler")
    return GraphSpec(int(_require(obj, "nodes", "graph")), tuple(tuple(e) for e in obj.get("edges", [])), ent)


def tree_from_json(obj, ctx: Context | None = None, where: str = "tree"):
    """Nested ``{"site", "observable", "plus", "minus"}``; both branch keys are mandatory, ``null`` ends a path."""
    from .paradigms import MeasurementNode

    if obj is None:
        return None
    if not isinstance(obj, Mapping):
        raise InvalidInputError(f"{where}: tree node must be an object or null")
    for key in ("site", "observable", "plus", "minus"):
        if key not in obj:
            raise InvalidInputError(f"{where}: incomplete tree, missing {key!r}")
    obs = matrix_from_json(obj["observable"], ctx, f"{where}.observable")
    return MeasurementNode(
        int(obj["site"]),
        obs,
        tree_from_json(obj["plus"], ctx, f"{where}.plus"),
        tree_from_json(obj["minus"], ctx, f"{where}.minus"),
    )


def grid_from_json(obj, where: str = "grid") -> list:
    """A list of numbers or ``{"start", "stop", "step"}`` with ``stop`` included."""
    if isinstance(obj, list):
        return [float(x) for x in obj]
    if isinstance(obj, Mapping):
        start, stop, step = (float(_require(obj, k, where)) for k in ("start", "stop", "step"))
        if step <= 0:
            raise InvalidInputError(f"{where}: step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(max(n, 0))]
    raise InvalidInputError(f"{where}: grid must be a list or a range object")


def load_json(path: str) -> Any:
    """Parse ``path``; syntax errors raise :class:`json.JSONDecodeError` with line/column."""
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
