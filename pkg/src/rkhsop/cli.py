"""Command-line front end: ``verify``, ``embed`` and ``fit``.

Exit codes: 0 success, 1 usage error, 2 Diverged or hypothesis not met,
3 Inconclusive, 4 singular system, 5 quadrature did not converge.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .embedding import CONVERGED, DIVERGED, abs_condition, mean_embedding, parse_density, standard_variation
from .errors import (
    DomainError,
    GrammarError,
    HypothesisNotMet,
    KernelMismatch,
    NegativeDiagonal,
    NoConvergence,
    RegularityError,
    SingularSystem,
)
from .expansions import eval_expansion
from .kernels import parse_kernel
from .operators import DerivativeDiff, exact_representer, loeve_table, parse_sequence, representer, representer_cauchy_decay
from .regression import fit, parse_problem, predict
from .serialize import dumps17, write_atomic

EXIT_OK, EXIT_USAGE, EXIT_DIVERGED, EXIT_INCONCLUSIVE, EXIT_SINGULAR, EXIT_NOCONV = range(6)

DEFAULTS = {
    "kernel": "gaussian(l=1.0)",
    "density": None,
    "seq": "seq.derivative(base=2)",
    "x": [],
    "window": "4:12",
    "tol": 1e-8,
    "tol_conv": 1e-3,
    "lambda": None,
    "problem": None,
    "out": None,
    "format": "json",
    "seed": 0,
}
CONFIG_KEYS = set(DEFAULTS)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file whose keys mirror the flags; flags take precedence")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), help="report format (default: json)")
    p.add_argument("--seed", type=int, help="seed for sampled diagnostics (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rkhsop", description="RKHS operator representers, mean embeddings and regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("verify", help="Loeve table and convergence verdict for an operator sequence")
    v.add_argument("--kernel", help="e.g. 'gaussian(l=1.0)', 'brownian'")
    v.add_argument("--seq", help="e.g. 'seq.derivative(base=2)', 'seq.averaging'")
    v.add_argument("--density", help="density for seq.quadrature when not given inline")
    v.add_argument("--x", nargs="+", help="evaluation points (space or comma separated)")
    v.add_argument("--window", help="index window LO:HI (default 4:12)")
    v.add_argument("--tol", type=float, help="tolerance for embedding-based exact representers")
    v.add_argument("--tol-conv", dest="tol_conv", type=float, help="oscillation threshold (default 1e-3)")
    _common(v)

    e = sub.add_parser("embed", help="integrability diagnostics and the mean embedding of a density")
    e.add_argument("--kernel")
    e.add_argument("--density", help="e.g. 'uniform(0,1)', 'inv_square'")
    e.add_argument("--tol", type=float, help="improper-integral tolerance (default 1e-8)")
    e.add_argument("--x", nargs="+", help="points at which to report mu_p(x)")
    _common(e)

    f = sub.add_parser("fit", help="penalized regression on a JSON problem file")
    f.add_argument("problem", nargs="?", help="problem file {kernel, lambda, observations, queries}")
    f.add_argument("--lambda", dest="lambda", type=float, help="override the problem's lambda")
    _common(f)
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(cfg) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    resolved = dict(DEFAULTS)
    resolved.update(cfg)
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    resolved["x"] = _points(resolved["x"])
    return resolved


def _points(value) -> list[float]:
    if value is None:
        return []
    if isinstance(value, (int, float)):
        return [float(value)]
    out = []
    for item in value:
        for part in str(item).split(","):
            if part.strip():
                try:
                    out.append(float(part))
                except ValueError as exc:
                    raise UsageError(f"bad point {part!r}") from exc
    return out


def _window(text) -> tuple[int, int]:
    try:
        lo, hi = (int(s) for s in str(text).split(":"))
    except ValueError as exc:
        raise UsageError(f"window must be LO:HI, got {text!r}") from exc
    if lo < 1 or hi < lo + 4:
        raise UsageError("window needs 1 <= LO and HI >= LO + 4")
    return lo, hi


def _header(command: str, cfg: dict) -> dict:
    shown = {k: cfg[k] for k in sorted(cfg) if k != "out"}
    return {"tool": "rkhsop", "version": __version__, "command": command, "config": shown}


def _csv(rows, header) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(cfg: dict, doc: dict, csv_text: str) -> None:
    text = dumps17(doc) + "\n" if cfg["format"] == "json" else csv_text
    if cfg["out"]:
        write_atomic(cfg["out"], text)
    else:
        sys.stdout.write(text)


def cmd_verify(cfg: dict) -> int:
    k = parse_kernel(cfg["kernel"])
    dens = parse_density(cfg["density"]) if cfg["density"] else None
    seq = parse_sequence(cfg["seq"], dens)
    lo, hi = _window(cfg["window"])
    if not cfg["x"]:
        raise UsageError("verify needs at least one --x")
    rng = np.random.default_rng(cfg["seed"])
    reports, rows, verdicts = [], [], []
    for x in cfg["x"]:
        rep = loeve_table(seq, k, x, lo, hi, tol_conv=float(cfg["tol_conv"]))
        doc = rep.to_dict()
        doc["cauchy_decay"] = representer_cauchy_decay(seq, k, x, rep.indices)
        if isinstance(seq, DerivativeDiff) and k.regularity.cross_derivative_on_diagonal:
            # pointwise check of the last representer against dK/dx1(x, .) at sampled points
            exact = exact_representer("derivative", k, x)
            last = representer(seq.at(rep.indices[-1]), k, x)
            ys = np.sort(rng.uniform(k.domain.lo if np.isfinite(k.domain.lo) else x - 2, x + 2, 5))
            ys = ys[k.domain.contains(ys)]
            doc["exact_norm2"] = float(k.d12(x, x))
            doc["pointwise"] = {
                "y": ys.tolist(),
                "approx": eval_expansion(last, ys).tolist(),
                "exact": eval_expansion(exact, ys).tolist(),
            }
        reports.append(doc)
        verdicts.append(rep.verdict)
        for i, n in enumerate(rep.indices):
            for j, m in enumerate(rep.indices):
                rows.append((x, n, m, float(rep.table[i, j])))
    out = _header("verify", cfg)
    out["reports"] = reports
    _emit(cfg, out, _csv(rows, ("x", "n", "m", "u")))
    if all(v == CONVERGED for v in verdicts):
        return EXIT_OK
    return EXIT_DIVERGED if DIVERGED in verdicts else EXIT_INCONCLUSIVE


def cmd_embed(cfg: dict) -> int:
    k = parse_kernel(cfg["kernel"])
    if not cfg["density"]:
        raise UsageError("embed needs --density")
    p = parse_density(cfg["density"])
    tol = float(cfg["tol"])
    out = _header("embed", cfg)
    try:
        std = standard_variation(k, p, tol)
        out["standard_variation"] = std.to_dict()
    except NegativeDiagonal as exc:
        std = None
        out["standard_variation"] = {"verdict": "undefined", "note": str(exc)}
    absr = abs_condition(k, p, tol)
    out["abs_condition"] = absr.to_dict()
    rows = []
    for name, rep in (("standard_variation", std), ("abs_condition", absr)):
        if rep is not None:
            rows.extend((name, st.index, a, b) for st, a, b in zip(rep.stages, rep.partials, rep.abs_partials))
    code = EXIT_OK
    try:
        emb = mean_embedding(k, p, tol, abs_report=absr)
        out["embedding"] = {"norm2": emb.norm2, "x": cfg["x"], "mu": [emb(x) for x in cfg["x"]]}
    except HypothesisNotMet as exc:
        out["embedding"] = None
        out["error"] = {"type": "HypothesisNotMet", "message": str(exc)}
        code = EXIT_DIVERGED
    _emit(cfg, out, _csv(rows, ("diagnostic", "stage", "I_s", "abs_I_s")))
    return code


def cmd_fit(cfg: dict) -> int:
    if not cfg["problem"]:
        raise UsageError("fit needs a problem file")
    try:
        with open(cfg["problem"], encoding="utf-8") as fh:
            problem = parse_problem(fh.read())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read problem: {exc}") from exc
    lam = problem.lam if cfg["lambda"] is None else float(cfg["lambda"])
    model = fit(problem.observations, problem.kernel, lam)
    fitted = [predict(model, o) for o in problem.observations]
    preds = [predict(model, q) for q in problem.queries]
    out = _header("fit", cfg)
    out["model"] = model.to_dict()
    out["training"] = {
        "fitted": fitted,
        "residuals": [f - o.y for f, o in zip(fitted, problem.observations)],
    }
    out["predictions"] = []
    for q, v in zip(problem.queries, preds):
        doc = q.to_dict()
        del doc["y"]
        doc["prediction"] = v
        out["predictions"].append(doc)
    rows = [("train", i, o.kind, o.x if o.x is not None else "", v) for i, (o, v) in enumerate(zip(problem.observations, fitted))]
    rows += [("query", i, q.kind, q.x if q.x is not None else "", v) for i, (q, v) in enumerate(zip(problem.queries, preds))]
    _emit(cfg, out, _csv(rows, ("set", "index", "type", "x", "value")))
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "embed": cmd_embed, "fit": cmd_fit}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        return COMMANDS[args.command](cfg)
    except (UsageError, GrammarError, DomainError, RegularityError, KernelMismatch, ValueError) as exc:
        print(f"rkhsop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HypothesisNotMet as exc:
        print(f"rkhsop: hypothesis not met: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except SingularSystem as exc:
        print(f"rkhsop: singular system: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except NoConvergence as exc:
        print(f"rkhsop: no convergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV


if __name__ == "__main__":
    sys.exit(main())
