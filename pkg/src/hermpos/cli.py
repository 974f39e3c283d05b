"""Command-line entry point.

    hermpos certify --input p.json --m 3
    hermpos search --input p.json --m-max 10
    hermpos asymptotics --input p.json --m-list 8,16,32
    hermpos lemmas

Every flag can also be set by an environment variable HERMPOS_<FLAG>
(for example HERMPOS_SEED=7); command-line flags take precedence.
Exit codes: 0 success, 1 parse/validation error, 2 not positive definite,
3 search exhausted, 4 numeric failure or failed gate.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .certifier import DEFAULT_TOL, extract_certificate, minimal_m_search, polynomial_id
from .errors import HermposError, NotPositiveDefinite, ParseError
from .geometry import fs_samples
from .lemmas import run_lemma_suite
from .operator import abc_decomposition, asymptotic_ratio
from .polyalg import HermitianBihomPoly, HoloPoly
from . import polyio

ENV_PREFIX = "HERMPOS_"
EXIT_OK, EXIT_INPUT, EXIT_NOT_PD, EXIT_EXHAUSTED, EXIT_NUMERIC = 0, 1, 2, 3, 4


@dataclass
class RunConfig:
    seed: int = 0
    samples: int = 20000
    tol: float = DEFAULT_TOL
    m_max: int = 10
    shards: int = 1
    output_path: str | None = None

    def validate(self):
        for name in ("samples", "shards"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.m_max < 0:
            raise ValueError("m_max must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if not 0 < self.tol < 1:
            raise ValueError("tol must lie in (0, 1)")
        return self


def _env(name, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=_env("seed", 0))
    common.add_argument("--samples", type=int, default=_env("samples", 20000),
                        help="Monte Carlo points per integration variable")
    common.add_argument("--tol", type=float, default=_env("tol", DEFAULT_TOL))
    common.add_argument("--shards", type=int, default=_env("shards", 1))
    common.add_argument("--out", default=_env("out", None), help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "table"), default=_env("format", "json"))
    common.add_argument("--allow-large", action="store_true",
                        default=str(_env("allow_large", "")).lower() in ("1", "true", "yes"))

    parser = argparse.ArgumentParser(prog="hermpos", description="Sum-of-squares certificates and "
                                     "Monte Carlo checks for Hermitian polynomials on projective space.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common], help="certificate for r^m p at one m")
    p.add_argument("--input", required=True)
    p.add_argument("--m", type=int, required=True)

    p = sub.add_parser("search", parents=[common], help="smallest m with r^m p positive definite")
    p.add_argument("--input", required=True)
    p.add_argument("--m-max", type=int, default=_env("m_max", 10))

    p = sub.add_parser("asymptotics", parents=[common], help="normalized ratio and A/B/C terms over m")
    p.add_argument("--input", required=True)
    p.add_argument("--m-list", default=_env("m_list", ""), help="comma separated, e.g. 8,16,32")
    p.add_argument("--section", help="section JSON file (default: a balanced monomial)")
    p.add_argument("--pair-samples", type=int, default=_env("pair_samples", 2000),
                   help="points per variable for the pairwise A/B/C estimate")

    sub.add_parser("lemmas", parents=[common], help="run the lemma verification suite")
    return parser


def _config(args) -> RunConfig:
    return RunConfig(seed=int(args.seed), samples=int(args.samples), tol=float(args.tol),
                     m_max=int(getattr(args, "m_max", 10)), shards=int(args.shards),
                     output_path=args.out).validate()


def parse_m_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        out = [int(t) for t in text.split(",")]
    except ValueError:
        raise ValueError(f"--m-list must be comma separated integers, got {text!r}") from None
    if any(m < 0 for m in out):
        raise ValueError("--m-list entries must be nonnegative")
    return out


def balanced_monomial(n: int, k: int) -> HoloPoly:
    """Z^alpha with the k exponents spread as evenly as possible."""
    base, extra = divmod(k, n + 1)
    return HoloPoly.monomial(tuple(base + (1 if i < extra else 0) for i in range(n + 1)))


def _envelope(command, config, result, extra=None) -> dict:
    doc = {"tool": "hermpos", "version": __version__, "command": command, "config": asdict(config),
           "result": result}
    if extra:
        doc.update(extra)
    return doc


# -- commands ---------------------------------------------------------------------
def cmd_certify(p: HermitianBihomPoly, m: int, config: RunConfig, allow_large=False):
    if m < 0:
        raise ValueError("--m must be nonnegative")
    try:
        cert = extract_certificate(p, m, config.tol, allow_large)
    except NotPositiveDefinite as exc:
        diag = {"error": "not_positive_definite", "m": m, "min_eigenvalue": exc.min_eigenvalue}
        return EXIT_NOT_PD, diag
    return EXIT_OK, cert.to_dict()


def cmd_search(p: HermitianBihomPoly, config: RunConfig, allow_large=False):
    rep = minimal_m_search(p, config.m_max, config.tol, allow_large, screen_seed=config.seed)
    return (EXIT_OK if rep.found else EXIT_EXHAUSTED), rep.to_dict()


def cmd_asymptotics(p: HermitianBihomPoly, m_list, config: RunConfig, section=None, pair_samples=2000):
    rows = []
    if m_list:
        X = fs_samples(p.n, config.samples, config.seed, config.shards, "asymptotics.x")
        Y = fs_samples(p.n, config.samples, config.seed, config.shards, "asymptotics.y")
        npair = min(pair_samples, config.samples)
        Xp = fs_samples(p.n, npair, config.seed, config.shards, "asymptotics.pairs.x")
        Yp = fs_samples(p.n, npair, config.seed, config.shards, "asymptotics.pairs.y")
    for m in m_list:
        k = m + p.d
        s = section if section is not None else balanced_monomial(p.n, k)
        if s.k != k:
            raise ValueError(f"section has degree {s.k}, m={m} needs degree {k}")
        est = asymptotic_ratio(s, p, m, X, Y)
        row = {"m": m, "ratio": est.ratio.real, "ratio_stderr": est.ratio.stderr,
               "k_value": est.k_value.to_dict(), "norm_sq": est.norm_sq.to_dict(), "decomposition": None}
        if m >= 2:
            row["decomposition"] = abc_decomposition(s, p, m, Xp, Yp).to_dict()
        rows.append(row)
    return EXIT_OK, {"reports": rows}


def cmd_lemmas(config: RunConfig, tol=None):
    rep = run_lemma_suite(tol=config.tol if tol is None else tol, seed=config.seed)
    return (EXIT_OK if rep.passed else EXIT_NUMERIC), rep.to_dict()


# -- output ---------------------------------------------------------------------------
def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _table(headers, rows) -> str:
    cells = [[_fmt(c) for c in r] for r in rows]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(headers)]
    line = lambda r: "  ".join(c.rjust(w) for c, w in zip(r, widths))
    return "\n".join([line(headers), line(["-" * w for w in widths])] + [line(r) for r in cells]) + "\n"


def render_table(command, result) -> str:
    if command == "asymptotics":
        rows = []
        for r in result["reports"]:
            dec = r["decomposition"] or {}
            rows.append([r["m"], r["ratio"], r["ratio_stderr"], dec.get("A", {}).get("re"),
                         dec.get("B", {}).get("re"), dec.get("C", {}).get("re"), dec.get("R_used")])
        return _table(["m", "ratio", "stderr", "A", "B", "C", "R"], rows)
    if command == "search":
        rows = [[t["m"], t["min_eigenvalue"], t["psd"], t["pd"]] for t in result.get("trace", [])]
        return f"minimal_m: {result['minimal_m']}\n" + _table(["m", "min_eigenvalue", "psd", "pd"], rows)
    if command == "lemmas":
        rows = [[g["name"], "pass" if g["passed"] else "FAIL"] for g in result["gates"]]
        return _table(["gate", "result"], rows)
    if command == "certify":
        if "error" in result:
            return f"not positive definite at m={result['m']}: min eigenvalue {result['min_eigenvalue']:.6g}\n"
        rows = [[i, lam] for i, lam in enumerate(result["eigenvalues"])]
        return f"m: {result['m']}  residual: {result['residual']:.3e}\n" + _table(["eta", "eigenvalue"], rows)
    return json.dumps(result, indent=2) + "\n"


def _jsonable(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def emit(doc, fmt, out_path, stdout):
    text = render_table(doc["command"], doc["result"]) if fmt == "table" else \
        json.dumps(doc, sort_keys=True, indent=2, default=_jsonable) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        config = _config(args)
        extra = {}
        if args.command == "lemmas":
            code, result = cmd_lemmas(config)
        else:
            p = polyio.load(args.input)
            extra["input"] = {"p_id": polynomial_id(p), "n": p.n, "d": p.d}
            if args.command == "certify":
                code, result = cmd_certify(p, args.m, config, args.allow_large)
            elif args.command == "search":
                code, result = cmd_search(p, config, args.allow_large)
            else:
                section = None
                if args.section:
                    with open(args.section) as fh:
                        section = polyio.holo_from_dict(json.load(fh))
                code, result = cmd_asymptotics(p, parse_m_list(args.m_list), config, section, args.pair_samples)
    except ParseError as exc:
        stderr.write(f"hermpos: input error: {exc}\n")
        return EXIT_INPUT
    except HermposError as exc:
        stderr.write(f"hermpos: {exc}\n")
        return exc.exit_code
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        stderr.write(f"hermpos: {exc}\n")
        return EXIT_INPUT
    except (ArithmeticError, FloatingPointError, MemoryError) as exc:
        stderr.write(f"hermpos: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    emit(_envelope(args.command, config, result, extra), args.format, config.output_path, stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
