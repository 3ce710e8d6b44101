"""``qcclab`` command-line front end.

Exit codes: 0 success (for ``qcc-check``: holds-certified), 1 fails-certified
or a failed validation, 2 undetermined, 64 malformed input, 65 capacity
exceeded, 70 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import jsonio
from .errors import CapacityError, InvalidInputError, QccLabError

EXIT_OK = 0
EXIT_FAILS = 1
EXIT_UNDETERMINED = 2
EXIT_INPUT = 64
EXIT_CAPACITY = 65
EXIT_SOFTWARE = 70

_BUILTIN = {"seed": 0, "tol": 1e-9, "restarts": 32, "threads": 1}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    tol: float = 1e-9
    restarts: int = 32
    out_path: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.tol <= 0:
            raise InvalidInputError("tol must be positive")
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise InvalidInputError("threads must be >= 1")

    def as_dict(self) -> dict:
        return asdict(self)


def _parse_threads(value) -> int:
    if value in (None, ""):
        return None
    if str(value).lower() == "auto":
        return os.cpu_count() or 1
    try:
        return int(value)
    except ValueError:
        raise InvalidInputError(f"threads must be an integer or 'auto', got {value!r}") from None


def resolve_config(args, defaults: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Flags beat ``QCCLAB_THREADS`` (threads only), which beats the file's defaults block."""
    base = dict(_BUILTIN)
    base.update(overrides or {})
    defaults = dict(defaults or {})
    unknown = set(defaults) - set(_BUILTIN)
    if unknown:
        raise InvalidInputError(f"defaults: unknown keys {sorted(unknown)}")
    base.update(defaults)
    env_threads = _parse_threads(os.environ.get("QCCLAB_THREADS"))
    if env_threads is not None:
        base["threads"] = env_threads
    for key in ("seed", "tol", "restarts"):
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    flag_threads = _parse_threads(getattr(args, "threads", None))
    if flag_threads is not None:
        base["threads"] = flag_threads
    return RunConfig(int(base["seed"]), float(base["tol"]), int(base["restarts"]), getattr(args, "out", None), int(base["threads"]))


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    return jsonio.load_json(path)


# -- subcommands -----------------------------------------------------------

def cmd_qcc_check(args) -> int:
    from .qcc import FAILS, HOLDS, implementation_inaccuracy

    doc = _load(args.scenario)
    cfg = resolve_config(args, doc.get("defaults"))
    scenario = jsonio.scenario_from_json(doc)
    report = implementation_inaccuracy(scenario, restarts=cfg.restarts, seed=cfg.seed, threads=cfg.threads)
    _emit(jsonio.dumps({"config": cfg, "report": report}), cfg.out_path)
    return {HOLDS: EXIT_OK, FAILS: EXIT_FAILS}.get(report.verdict, EXIT_UNDETERMINED)


def cmd_nogo_scan(args) -> int:
    from .nogo import ChannelFamily, boundary_cells, nogo_scan, scan_to_csv

    doc = _load(args.family)
    cfg = resolve_config(args, doc.get("defaults"))
    ctx = jsonio.Context.of(doc)
    fam = ChannelFamily(str(doc.get("family", "dephasing")), int(doc.get("dim", 2)), tuple(sorted(doc.get("options", {}).items())))
    algebra = jsonio.algebra_from_json(doc.get("algebra", {"dim": fam.dim}), ctx)
    alphas = jsonio.grid_from_json(doc.get("alpha_grid"), "alpha_grid")
    params = jsonio.grid_from_json(doc.get("param_grid"), "param_grid")
    rows = nogo_scan(fam, algebra, alphas, params, int(doc.get("trials", 64)), cfg.seed, cfg.threads)
    summary = {
        "config": cfg,
        "family": fam.name,
        "points": len(rows),
        "errors": [{"param": r.param, "alpha": r.alpha, "error": r.error} for r in rows if r.error],
        "boundary": [
            {"param": r.param, "alpha": r.alpha, "two_gamma_plus_alpha": r.two_gamma_plus_alpha, "verdict": r.verdict}
            for r in boundary_cells(rows)
        ],
    }
    csv_text = scan_to_csv(rows)
    if cfg.out_path:
        summary_path = str(Path(cfg.out_path).with_suffix(".summary.json"))
        atomic_write(summary_path, jsonio.dumps(summary))
        atomic_write(cfg.out_path, csv_text)
    else:
        sys.stdout.write(csv_text)
        sys.stderr.write(jsonio.dumps(summary))
    return EXIT_OK


def cmd_evolve(args) -> int:
    from .lindblad import evolve_adaptive

    doc = _load(args.generator)
    cfg = resolve_config(args, doc.get("defaults"), {"tol": 1e-8})
    gen = jsonio.generator_from_json(doc)
    s = args.start if args.start is not None else float(doc.get("s", gen.domain[0]))
    t = args.stop if args.stop is not None else float(doc.get("t", gen.domain[1]))
    prop = evolve_adaptive(gen, s, t, cfg.tol, method=args.method)
    out = {
        "config": cfg,
        "s": prop.s,
        "t": prop.t,
        "method": args.method,
        "steps_used": prop.steps_used,
        "defect": prop.defect,
        "superop": prop.superop.matrix,
        "choi": prop.superop.choi(),
    }
    _emit(jsonio.dumps(out), cfg.out_path)
    return EXIT_OK


def cmd_channel_validate(args) -> int:
    from .channel import validate_cptp

    doc = _load(args.channel)
    cfg = resolve_config(args, doc.get("defaults"))
    P = jsonio.channel_from_json(doc.get("channel", doc), jsonio.Context.of(doc))
    rep = validate_cptp(P, cfg.tol)
    _emit(jsonio.dumps({"config": cfg, "dim_in": P.dim_in, "dim_out": P.dim_out, "report": rep}), cfg.out_path)
    return EXIT_OK if rep.passed else EXIT_FAILS


def cmd_commutant(args) -> int:
    from .fixedpoint import eqcc_commutant

    doc = _load(args.channel)
    cfg = resolve_config(args, doc.get("defaults"))
    ctx = jsonio.Context.of(doc)
    P = jsonio.channel_from_json(doc.get("channel", doc), ctx)
    if args.unitary:
        udoc = _load(args.unitary)
        raw = udoc["U"] if isinstance(udoc, dict) and "U" in udoc else udoc
        U = jsonio.matrix_from_json(raw, jsonio.Context.of(udoc), "U")
    elif "U" in doc:
        U = jsonio.matrix_from_json(doc["U"], ctx, "U")
    else:
        U = np.eye(P.dim_in)
    basis = eqcc_commutant(P, U)
    _emit(jsonio.dumps({"config": cfg, **basis.as_dict()}), cfg.out_path)
    return EXIT_OK


def cmd_threshold(args) -> int:
    from .paradigms import ThresholdModel, threshold_estimate

    doc = _load(args.model)
    cfg = resolve_config(args, doc.get("defaults"))
    model = ThresholdModel(jsonio._require(doc, "A", "model"), jsonio._require(doc, "B", "model"))
    value = threshold_estimate(model)
    sys.stdout.write(f"{value!r}\n")
    if cfg.out_path:
        atomic_write(cfg.out_path, jsonio.dumps({"config": cfg, "epsilon_th": value}))
    return EXIT_OK


def cmd_graph(args) -> int:
    from .paradigms import entangler_diagnostics, graph_component_channel, graph_entangler

    doc = _load(args.graph)
    cfg = resolve_config(args, doc.get("defaults"))
    ctx = jsonio.Context.of(doc)
    g = jsonio.graph_from_json(doc, ctx)
    out = {"config": cfg, "nodes": g.nodes, "edges": [list(e) for e in g.edges], "entangler": graph_entangler(g)}
    if isinstance(g.entangler, str):
        out["diagnostics"] = entangler_diagnostics(g)
    if args.tree:
        tdoc = _load(args.tree)
        tree = jsonio.tree_from_json(tdoc.get("tree", tdoc), jsonio.Context.of(tdoc))
        comp = graph_component_channel(g, tree)
        out["channel"] = jsonio.channel_to_json(comp.channel)
        out["trace_deficient"] = comp.trace_deficient
        out["max_trace_loss"] = comp.max_trace_loss
    _emit(jsonio.dumps(out), cfg.out_path)
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance")
    common.add_argument("--restarts", type=int, default=None, help="optimizer restarts")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--threads", default=None, help="worker threads or 'auto' (env QCCLAB_THREADS)")

    parser = argparse.ArgumentParser(prog="qcclab", description="Quantum computer condition toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("qcc-check", parents=[common], help="bracket the implementation inaccuracy")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_qcc_check)

    p = sub.add_parser("nogo-scan", parents=[common], help="no-go phase scan over a channel family")
    p.add_argument("family")
    p.set_defaults(func=cmd_nogo_scan)

    p = sub.add_parser("evolve", parents=[common], help="Lindblad propagator between two times")
    p.add_argument("generator")
    p.add_argument("--start", type=float, default=None, help="initial time s")
    p.add_argument("--stop", type=float, default=None, help="final time t")
    p.add_argument("--method", choices=("product", "trotter"), default="product")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("channel-validate", parents=[common], help="CPTP diagnostics of a channel")
    p.add_argument("channel")
    p.set_defaults(func=cmd_channel_validate)

    p = sub.add_parser("commutant", parents=[common], help="exact ersatz-condition solution algebra")
    p.add_argument("channel")
    p.add_argument("unitary", nargs="?", default=None)
    p.set_defaults(func=cmd_commutant)

    p = sub.add_parser("threshold", parents=[common], help="threshold estimate sum(B)/sum(A)")
    p.add_argument("model")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("graph", parents=[common], help="graph-state component channel")
    p.add_argument("graph")
    p.add_argument("tree", nargs="?", default=None)
    p.set_defaults(func=cmd_graph)
    return parser


def _input_path(args) -> str:
    for key in ("scenario", "family", "generator", "channel", "model", "graph"):
        if getattr(args, key, None):
            return getattr(args, key)
    return "<input>"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    path = _input_path(args)
    try:
        return args.func(args)
    except json.JSONDecodeError as exc:
        print(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"{path}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"{path}: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (InvalidInputError, KeyError, TypeError, ValueError, AttributeError) as exc:
        print(f"{path}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QccLabError as exc:
        print(f"{path}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE


if __name__ == "__main__":
    sys.exit(main())
