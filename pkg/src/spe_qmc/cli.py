"""Command-line entry point: ``spe-qmc <command> ...`` or ``python3 -m spe_qmc``.

Reports go to stdout (or ``--out``) as JSON unless ``--format csv`` is given;
diagnostics go to stderr. Exit status: 0 success, 1 invalid model or input,
2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import __version__, analysis, oracle
from .chain import ChainParams, chain_seeds, observable_columns, run_chunks
from .estimators import batch_means, estimate_energy, estimate_neel
from .hamiltonian import ModelFileError, load_model, required_B, validate

JSON_INDENT = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(value):
    """Non-finite floats become strings so the output stays strict JSON."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return str(float(value))
    return value


def dumps(doc) -> str:
    return json.dumps(_clean(json.loads(json.dumps(doc, default=_jsonable))), sort_keys=True, indent=JSON_INDENT)


def _flatten(doc, prefix=""):
    if isinstance(doc, dict):
        for k, v in doc.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(doc, list):
        for i, v in enumerate(doc):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix[:-1], doc


def _model_digest(path) -> str | None:
    if path is None:
        return None
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


class _Output:
    """stdout or the ``--out`` file, written as results arrive."""

    def __init__(self, args):
        path = getattr(args, "out", None)
        self.fmt = getattr(args, "format", "json")
        self.fh = open(path, "w", newline="") if path else sys.stdout
        self.owned = bool(path)

    def write(self, text: str):
        self.fh.write(text)

    def close(self):
        if self.owned:
            self.fh.close()
        else:
            self.fh.flush()


def _header(args, argv, started) -> dict:
    return {
        "command": list(argv),
        "model_sha256": _model_digest(getattr(args, "model", None)),
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "timing": {"seconds": round(time.perf_counter() - started, 6)},
    }


def _emit_report(args, argv, started, results: dict):
    out = _Output(args)
    report = _header(args, argv, started)
    report["results"] = results
    if out.fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["key", "value"])
        for key, value in _flatten(json.loads(dumps(report))):
            writer.writerow([key, value])
    else:
        out.write(dumps(report) + "\n")
    out.close()


def _load(args):
    model = load_model(args.model)
    problems = validate(model)
    if problems:
        raise ModelFileError("; ".join(problems))
    return model


def _resolve_B(model, text: str) -> int:
    if text.startswith("auto:"):
        try:
            eps = float(text[5:])
        except ValueError:
            raise UsageError(f"--B: cannot parse epsilon in {text!r}") from None
        return required_B(model, eps)
    try:
        value = int(text)
    except ValueError:
        raise UsageError(f"--B expects an integer or auto:<epsilon>, got {text!r}") from None
    if value < 1:
        raise UsageError("--B must be >= 1")
    return value


def _chain_params(args, B, seed):
    return ChainParams(B=B, steps=args.steps, burn_in=args.burn_in, thinning=args.thin, seed=seed,
                       alpha=args.alpha, lazy=args.lazy)


def _seeds(args) -> list[int]:
    return [args.seed] if args.chains == 1 else chain_seeds(args.seed, args.chains)


# ---------------------------------------------------------------- commands


def cmd_validate(args, argv, started):
    try:
        model = load_model(args.model)
    except (ModelFileError, ValueError) as exc:
        _emit_report(args, argv, started, {"valid": False, "violations": [str(exc)]})
        return 1
    problems = validate(model)
    _emit_report(args, argv, started, {"valid": not problems, "violations": problems,
                                       "relabeled": model.relabeled})
    return 1 if problems else 0


def cmd_sample(args, argv, started):
    model = _load(args)
    B = _resolve_B(model, args.B)
    names = [slot.label for slot in observable_columns(model)]
    out = _Output(args)
    header = _header(args, argv, started)
    header["B"] = B
    if args.format == "csv":
        print(dumps(header), file=sys.stderr)
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["chain", "step", "loop_count", "acceptance"] + [f"w[{n}]" for n in names])
    else:
        out.write(json.dumps({"header": header}, sort_keys=True, default=_jsonable) + "\n")
    for c, seed in enumerate(_seeds(args)):
        for chunk in run_chunks(model, _chain_params(args, B, seed), keep_configs=False):
            for r in range(len(chunk["step"])):
                meas = chunk["measurements"][r]
                if args.format == "csv":
                    writer.writerow([c, int(chunk["step"][r]), int(chunk["loop_count"][r]),
                                     repr(float(chunk["acceptance"]))] + [repr(float(v)) for v in meas])
                else:
                    out.write(json.dumps({
                        "chain": c, "step": int(chunk["step"][r]), "loop_count": int(chunk["loop_count"][r]),
                        "acceptance": float(chunk["acceptance"]),
                        "measurements": {n: float(v) for n, v in zip(names, meas)}}, sort_keys=True) + "\n")
    out.close()
    return 0


def cmd_energy(args, argv, started):
    model = _load(args)
    B = _resolve_B(model, args.B)
    chains, loops, acceptance = [], [], []
    for c, seed in enumerate(_seeds(args)):
        params = _chain_params(args, B, seed)
        print(f"chain {c}: B={B} steps={args.steps} seed={seed}", file=sys.stderr)
        parts = list(run_chunks(model, params, keep_configs=False))
        if not parts:
            raise UsageError("no records: steps - burn_in must be at least --thin")
        chains.append(np.concatenate([p["measurements"] for p in parts]))
        loops.append(np.concatenate([p["loop_count"] for p in parts]).astype(float))
        acceptance.append(parts[-1]["acceptance"])
    energy = estimate_energy(model, chains, alpha=args.alpha)
    neel = estimate_neel(model, chains, alpha=args.alpha)
    results = {
        "estimate": energy.mean, "stderr": energy.stderr, "tau_int": energy.tau_int,
        "n_batches": energy.n_batches, "B": B, "steps": args.steps, "burn_in": args.burn_in,
        "thin": args.thin, "chains": args.chains, "acceptance_rate": float(np.mean(acceptance)),
        "terms": {k: v.to_dict() for k, v in energy.terms.items()},
        "neel": {"estimate": neel.mean, "stderr": neel.stderr},
        "loop_count": batch_means(loops).to_dict(),
    }
    _emit_report(args, argv, started, results)
    return 0


def cmd_oracle(args, argv, started):
    model = _load(args)
    if args.what == "ground-energy":
        if args.sector_lm:
            results = {"method": "lieb-mattis sector", "ground_energy": oracle.lieb_mattis_ground_energy(model),
                       "sector_dimension": oracle.sector_dimension(model)}
        else:
            energy, _ = oracle.exact_ground_energy(model)
            results = {"method": "full diagonalisation", "ground_energy": energy}
    else:
        if args.B is None or args.epsilon is None:
            raise UsageError("oracle leakage needs --B and --epsilon")
        B = _resolve_B(model, args.B)
        results = {"B": B, "epsilon": args.epsilon,
                   "leakage": oracle.low_energy_leakage(model, B, args.epsilon),
                   "bound": oracle.leakage_bound(model, B, args.epsilon)}
    _emit_report(args, argv, started, results)
    return 0


def _needs(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"analyze {args.what} needs {', '.join(missing)}")


def cmd_analyze(args, argv, started):
    what = args.what
    if what == "potts":
        _needs(args, "N", "B")
        results = analysis.potts_cross_check(args.N, int(args.B), args.alpha)
    elif what == "counterexample":
        _needs(args, "N")
        results = analysis.cycle_counterexample(args.N, None if args.B is None else int(args.B), args.alpha)
    else:
        _needs(args, "model")
        model = _load(args)
        if what == "topology":
            rng = np.random.default_rng(args.seed)
            results = analysis.topology_sweep(model, args.n_configs, rng, length=args.length)
        else:
            _needs(args, "B")
            B = _resolve_B(model, args.B)
            cm = analysis.build_chain_matrix(model, B, args.alpha, lazy=args.lazy or what == "congestion")
            if what == "gap":
                results = {"n_states": cm.n_states, "lazy": cm.lazy, **analysis.spectral_report(cm).to_dict(),
                           **analysis.chain_checks(cm)}
            elif what == "congestion":
                results = {"n_states": cm.n_states, **analysis.congestion(cm)}
            else:
                results = {"n_states": cm.n_states, **analysis.encoding_inequality_max(cm)}
    _emit_report(args, argv, started, results)
    return 0 if not (what == "topology" and results["violations"]) else 1


def cmd_potts(args, argv, started):
    _emit_report(args, argv, started, analysis.potts_cross_check(args.N, args.B, args.alpha))
    return 0


def cmd_counterexample(args, argv, started):
    _emit_report(args, argv, started, analysis.cycle_counterexample(args.N, args.B, args.alpha))
    return 0


# ---------------------------------------------------------------- parser


def _common(p, model_required=True):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    if model_required is not None:
        p.add_argument("--model", required=model_required, help="model JSON file")


def _sampling(p):
    p.add_argument("--B", required=True, help="integer or auto:<epsilon>")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=0)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--lazy", action="store_true")
    p.add_argument("--chains", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spe-qmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check a model file")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample", help="stream chain records")
    _common(p)
    _sampling(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("energy", help="estimate <H> from a chain run")
    _common(p)
    _sampling(p)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("oracle", help="exact reference values")
    p.add_argument("what", choices=("ground-energy", "leakage"))
    _common(p)
    p.add_argument("--sector-lm", action="store_true", help="diagonalise only the Lieb-Mattis sector")
    p.add_argument("--B")
    p.add_argument("--epsilon", type=float)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("analyze", help="exact chain analysis on enumerable instances")
    p.add_argument("what", choices=("gap", "congestion", "encoding", "topology", "potts", "counterexample"))
    _common(p, model_required=False)
    p.add_argument("--B")
    p.add_argument("--N", type=int)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--lazy", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-configs", type=int, default=10_000)
    p.add_argument("--length", type=int, default=8)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("potts", help="star-graph Potts duality check")
    _common(p, model_required=None)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--alpha", type=float, default=2.0)
    p.set_defaults(func=cmd_potts)

    p = sub.add_parser("counterexample", help="dimer strings on the even cycle")
    _common(p, model_required=None)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--B", type=int)
    p.add_argument("--alpha", type=float, default=2.0)
    p.set_defaults(func=cmd_counterexample)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = time.perf_counter()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.func(args, argv, started)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except (ModelFileError, ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
