"""Command-line front end.

Every command writes one report (JSON by default, keys sorted, canonical
number strings) and exits with

    0  the check passed / the computation succeeded
    1  the check failed (report carries ``first_failure``)
    2  unreadable or invalid input, including insufficient truncation depth
    3  internal invariant violation
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .akns import (ConstantVector, Inconclusive, Infeasible, InternalInvariantError, compute_fg,
                   solve_constants, stationary_residual)
from .algebra import GaussRat, ParseError
from .frobenius import local_solution, meromorphy_verdict
from .gapcheck import PotentialPoleData, finite_gap_check, gap_pipeline
from .poles import PoleData, classify_pole
from .series import DepthError, EllipticParams, LaurentSeries, csc_series, example2_pq

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__all__ = ["RunConfig", "InputError", "parse_inputs", "run", "main"]

COMMANDS = ("recursion", "stationary", "solve-constants", "pole-check", "frobenius",
            "finite-gap", "pipeline", "example")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_BAD_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(ValueError):
    """Input could not be parsed or validated; message carries the location."""


@dataclass
class RunConfig:
    command: str
    K: int | None = None
    constants: list[str] | None = None
    input_path: str | None = None
    output_format: str = "json"
    example_name: str | None = None
    example_params: dict = field(default_factory=dict)
    m: int | None = None
    k: int | None = None
    branch_bound: int = 16
    timing: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.K is not None and self.K < 1:
            raise ValueError("K must be >= 1")

    def echo(self) -> dict:
        out: dict[str, Any] = {"name": self.command}
        for key in ("K", "m", "k", "constants", "input_path", "example_name"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        if self.example_params:
            out["example_params"] = {k: str(v) for k, v in sorted(self.example_params.items())}
        if self.command == "solve-constants":
            out["branch_bound"] = self.branch_bound
        return out


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------


def _locate(raw: str, needle: str) -> tuple[int, int] | None:
    pos = raw.find(f'"{needle}"')
    if pos < 0:
        pos = raw.find(needle)
        if pos < 0:
            return None
    else:
        pos += 1
    line = raw.count("\n", 0, pos) + 1
    col = pos - (raw.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _load_document(path: str | None) -> tuple[dict, str, str]:
    name = path or "<stdin>"
    if path in (None, "-"):
        raw = sys.stdin.read()
        name = "<stdin>"
    else:
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"{name}: cannot read: {exc.strerror}") from exc
    use_toml = path is not None and path.endswith(".toml")
    if not use_toml:
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            if path is not None and path.endswith(".json"):
                raise InputError(f"{name}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
            use_toml = True
            json_error = exc
    if use_toml:
        try:
            doc = tomllib.loads(raw)
        except tomllib.TOMLDecodeError as exc:
            if path is None or not path.endswith(".toml"):
                exc = json_error
                raise InputError(f"{name}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
            raise InputError(f"{name}: invalid TOML: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{name}: top-level value must be an object")
    return doc, raw, name


class _Ctx:
    def __init__(self, raw: str, name: str):
        self.raw, self.name = raw, name

    def coeff(self, value, where: str):
        try:
            if isinstance(value, bool):
                raise ParseError("expected a Gaussian-rational string")
            if isinstance(value, int):
                return GaussRat(value)
            if not isinstance(value, str):
                raise ParseError(f"expected a Gaussian-rational string, got {type(value).__name__}")
            return GaussRat.parse(value)
        except ParseError as exc:
            loc = _locate(self.raw, value) if isinstance(value, str) else None
            if loc is not None:
                line, col = loc
                col += max(exc.column - 1, 0)
                raise InputError(f"{self.name}:{line}:{col}: {where}: {exc}") from exc
            raise InputError(f"{self.name}: {where}: {exc}") from exc

    def coeff_list(self, values, where: str) -> list[GaussRat]:
        if not isinstance(values, list):
            raise InputError(f"{self.name}: {where}: expected a list")
        return [self.coeff(v, f"{where}[{k}]") for k, v in enumerate(values)]

    def series(self, doc, where: str) -> LaurentSeries:
        if not isinstance(doc, dict) or "min_order" not in doc or "coeffs" not in doc:
            raise InputError(f"{self.name}: {where}: expected a series object with min_order and coeffs")
        try:
            min_order = int(doc["min_order"])
            max_order = doc.get("max_order")
            max_order = None if max_order is None else int(max_order)
        except (TypeError, ValueError) as exc:
            raise InputError(f"{self.name}: {where}: min_order/max_order must be integers") from exc
        coeffs = self.coeff_list(doc["coeffs"], f"{where}.coeffs")
        if max_order is None and not coeffs:
            raise InputError(f"{self.name}: {where}: empty series needs max_order")
        return LaurentSeries(min_order, coeffs, max_order)


def parse_inputs(path: str | None):
    """Load a pole file, a (p, q) series pair, a single series, or potential data.

    * ``{phi: [...], psi: [...]}``              -> ``PoleData``
    * ``{p: series, q: series}``                -> ``(LaurentSeries, LaurentSeries)``
    * ``{a: [...]}`` or ``{u: series}``         -> ``PotentialPoleData``
    * ``{min_order, coeffs, ...}``              -> ``LaurentSeries``
    """
    doc, raw, name = _load_document(path)
    ctx = _Ctx(raw, name)
    if "phi" in doc or "psi" in doc:
        phi = ctx.coeff_list(doc.get("phi", []), "phi")
        psi = ctx.coeff_list(doc.get("psi", []), "psi")
        try:
            return PoleData(tuple(phi), tuple(psi))
        except ValueError as exc:
            raise InputError(f"{name}: {exc}") from exc
    if "p" in doc and "q" in doc:
        return ctx.series(doc["p"], "p"), ctx.series(doc["q"], "q")
    if "a" in doc:
        try:
            return PotentialPoleData(tuple(ctx.coeff_list(doc["a"], "a")))
        except ValueError as exc:
            raise InputError(f"{name}: {exc}") from exc
    if "u" in doc:
        return ctx.series(doc["u"], "u")
    if "min_order" in doc:
        return ctx.series(doc, "series")
    raise InputError(f"{name}: unrecognised document; expected phi/psi, p/q, a, u or a series")


def _as_pair(obj, name: str) -> tuple[LaurentSeries, LaurentSeries]:
    if isinstance(obj, tuple):
        return obj
    if isinstance(obj, PoleData):
        return obj.to_series()
    raise InputError(f"{name}: expected p/q series or phi/psi pole data")


def _as_pole(obj, name: str) -> PoleData:
    if isinstance(obj, PoleData):
        return obj
    if isinstance(obj, tuple):
        try:
            return PoleData.from_series(*obj)
        except ValueError as exc:
            raise InputError(f"{name}: {exc}") from exc
    raise InputError(f"{name}: expected phi/psi pole data or p/q series")


def _as_potential(obj, name: str) -> PotentialPoleData:
    try:
        if isinstance(obj, PotentialPoleData):
            return obj
        if isinstance(obj, LaurentSeries):
            return PotentialPoleData.from_series(obj)
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from exc
    raise InputError(f"{name}: expected potential data (a list or a series with min_order -2)")


def _constants(config: RunConfig) -> ConstantVector:
    try:
        return ConstantVector(tuple(GaussRat.parse(c) for c in (config.constants or [])))
    except ParseError as exc:
        raise InputError(f"--constants: {exc}") from exc


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _series_payload(s: LaurentSeries) -> dict:
    return s.to_dict()


def _cmd_recursion(config: RunConfig):
    if config.k is None or config.k < 1:
        raise InputError("recursion needs --k >= 1")
    pair = compute_fg(config.k)
    return EXIT_OK, {"k": pair.k, "f": str(pair.f), "g": str(pair.g),
                     "constants_used": list(pair.constants_used)}


def _need_m(config: RunConfig) -> int:
    if config.m is None or config.m < 1:
        raise InputError(f"{config.command} needs --m >= 1")
    return config.m


def _cmd_stationary(config: RunConfig):
    m = _need_m(config)
    p, q = _as_pair(parse_inputs(config.input_path), config.input_path or "<stdin>")
    v = stationary_residual(p, q, m, _constants(config).extended(m), config.K)
    result = {"m": v.m, "is_zero": v.is_zero, "checked_through": v.checked_through,
              "first_nonzero": v.first_nonzero}
    return (EXIT_OK if v.is_zero else EXIT_CHECK_FAILED), result


def _cmd_solve(config: RunConfig):
    m = _need_m(config)
    p, q = _as_pair(parse_inputs(config.input_path), config.input_path or "<stdin>")
    try:
        c = solve_constants(p, q, m, config.K, config.branch_bound)
    except Infeasible as exc:
        return EXIT_CHECK_FAILED, {"m": m, "status": "infeasible",
                                   "first_failure": {"reason": "infeasible", "detail": str(exc)}}
    except Inconclusive as exc:
        return EXIT_CHECK_FAILED, {"m": m, "status": "inconclusive",
                                   "first_failure": {"reason": "inconclusive", "detail": str(exc)}}
    v = stationary_residual(p, q, m, c, config.K)
    return EXIT_OK, {"m": m, "status": "solved", "constants": c.to_strings(),
                     "checked_through": v.checked_through, "is_zero": v.is_zero}


def _cmd_pole_check(config: RunConfig):
    d = _as_pole(parse_inputs(config.input_path), config.input_path or "<stdin>")
    report = classify_pole(d)
    return (EXIT_OK if report.passes else EXIT_CHECK_FAILED), report.to_dict()


def _cmd_frobenius(config: RunConfig):
    d = _as_pole(parse_inputs(config.input_path), config.input_path or "<stdin>")
    verdict = meromorphy_verdict(d, config.K)
    result = verdict.to_dict()
    if verdict.meromorphic:
        K = config.K if config.K is not None else 2 * verdict.n
        branches = {}
        for sigma in (verdict.n, -verdict.n):
            sol = local_solution(d, sigma, K)
            branches[str(sigma)] = {"alpha": [str(a) for a in sol.alpha], "beta": [str(b) for b in sol.beta],
                                    "resonance_free_choice": sol.resonance_free_choice}
        result["solutions"] = branches
    return (EXIT_OK if verdict.meromorphic else EXIT_CHECK_FAILED), result


def _cmd_finite_gap(config: RunConfig):
    u = _as_potential(parse_inputs(config.input_path), config.input_path or "<stdin>")
    report = finite_gap_check(u)
    return (EXIT_OK if report.finite_gap else EXIT_CHECK_FAILED), report.to_dict()


def _cmd_pipeline(config: RunConfig):
    m = _need_m(config)
    p, q = _as_pair(parse_inputs(config.input_path), config.input_path or "<stdin>")
    report = gap_pipeline(p, q, m, _constants(config).extended(m), config.K,
                               attestations={"global_hypotheses": "caller-attested"})
    return (EXIT_OK if report.finite_gap else EXIT_CHECK_FAILED), report.to_dict()


def _param(config: RunConfig, key: str, default):
    value = config.example_params.get(key, default)
    try:
        return GaussRat.coerce(value)
    except ParseError as exc:
        raise InputError(f"--{key}: {exc}") from exc


def default_truncation(n: int) -> int:
    env = os.environ.get("AKNS_DEFAULT_K")
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise InputError(f"AKNS_DEFAULT_K={env!r} is not an integer") from exc
        if value < 1:
            raise InputError("AKNS_DEFAULT_K must be >= 1")
        return value
    return 2 * n + 10


def _cmd_example(config: RunConfig):
    n = int(config.example_params.get("n", 1))
    if n < 1:
        raise InputError("--n must be >= 1")
    K = config.K if config.K is not None else default_truncation(n)
    if config.example_name == "csc":
        alpha = _param(config, "alpha", n)
        beta = _param(config, "beta", GaussRat(n * n) / alpha if alpha else 0)
        p, q = csc_series(alpha, K), csc_series(beta, K)
    elif config.example_name == "elliptic":
        try:
            params = EllipticParams(_param(config, "g2", 4), _param(config, "g3", 0), _param(config, "e2", 1))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        alpha = _param(config, "alpha", n)
        beta = _param(config, "beta", GaussRat(n * n) / alpha if alpha else 0)
        try:
            p, q = example2_pq(params, alpha, beta, K)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    else:
        raise InputError(f"unknown example {config.example_name!r}; choose csc or elliptic")
    return EXIT_OK, {"p": _series_payload(p), "q": _series_payload(q)}


_DISPATCH = {
    "recursion": _cmd_recursion,
    "stationary": _cmd_stationary,
    "solve-constants": _cmd_solve,
    "pole-check": _cmd_pole_check,
    "frobenius": _cmd_frobenius,
    "finite-gap": _cmd_finite_gap,
    "pipeline": _cmd_pipeline,
    "example": _cmd_example,
}


def run(config: RunConfig) -> tuple[dict, int]:
    """Execute one command; returns the report and the process exit code."""
    start = time.perf_counter()
    report: dict[str, Any] = {"tool": {"name": "aknsgap", "version": __version__}, "command": config.echo()}
    try:
        code, result = _DISPATCH[config.command](config)
        report["result"] = result
    except (InputError, DepthError, ParseError) as exc:
        code = EXIT_BAD_INPUT
        report["error"] = {"kind": "input", "message": str(exc)}
    except InternalInvariantError as exc:
        code = EXIT_INTERNAL
        report["error"] = {"kind": "internal", "message": str(exc)}
    report["status"] = {EXIT_OK: "pass", EXIT_CHECK_FAILED: "fail"}.get(code, "error")
    report["exit_code"] = code
    if config.timing:
        report["timing_seconds"] = round(time.perf_counter() - start, 6)
    return report, code


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        if report["command"]["name"] == "example" and "result" in report:
            # the example payload is itself a valid input document
            return json.dumps(report["result"], sort_keys=True, indent=2, ensure_ascii=False) + "\n"
        return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    lines = []

    def walk(prefix: str, value):
        if isinstance(value, dict):
            for k in sorted(value):
                walk(f"{prefix}.{k}" if prefix else k, value[k])
        elif isinstance(value, list) and value and any(isinstance(v, (dict, list)) for v in value):
            for i, v in enumerate(value):
                walk(f"{prefix}[{i}]", v)
        else:
            lines.append(f"{prefix}: {json.dumps(value, ensure_ascii=False) if not isinstance(value, str) else value}")

    walk("", report)
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aknsgap", description="Stationary AKNS checks and finite-gap certification")
    parser.add_argument("--format", dest="output_format", choices=("json", "text"), default="json")
    parser.add_argument("--timing", action="store_true", help="include wall-clock timing (breaks byte-determinism)")
    # the same flags after the subcommand; SUPPRESS keeps the top-level defaults
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output_format", choices=("json", "text"), default=argparse.SUPPRESS)
    common.add_argument("--timing", action="store_true", default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    def with_input(p):
        p.add_argument("input", nargs="?", default=None, help="input file (.json or .toml); stdin if omitted")

    def with_K(p):
        p.add_argument("--K", type=int, default=None, help="truncation order")

    p = sub.add_parser("recursion", help="print f_k and g_k")
    p.add_argument("--k", type=int, required=True)

    for name in ("stationary", "pipeline"):
        p = sub.add_parser(name)
        with_input(p)
        with_K(p)
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--constants", type=str, default="", help="comma-separated C_1,...,C_m")

    p = sub.add_parser("solve-constants")
    with_input(p)
    with_K(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--branch-bound", type=int, default=16)

    for name in ("pole-check", "finite-gap"):
        with_input(sub.add_parser(name))

    p = sub.add_parser("frobenius")
    with_input(p)
    with_K(p)

    p = sub.add_parser("example", help="emit p/q series for a built-in example")
    p.add_argument("example_name", choices=("csc", "elliptic"))
    with_K(p)
    p.add_argument("--n", type=int, default=1)
    for key in ("alpha", "beta", "g2", "g3", "e2"):
        p.add_argument(f"--{key}", type=str, default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    params = {}
    if args.command == "example":
        params["n"] = args.n
        for key in ("alpha", "beta", "g2", "g3", "e2"):
            if getattr(args, key) is not None:
                params[key] = getattr(args, key)
    constants = getattr(args, "constants", None)
    return RunConfig(
        command=args.command,
        K=getattr(args, "K", None),
        constants=[c.strip() for c in constants.split(",")] if constants else None,
        input_path=getattr(args, "input", None),
        output_format=args.output_format,
        example_name=getattr(args, "example_name", None),
        example_params=params,
        m=getattr(args, "m", None),
        k=getattr(args, "k", None),
        branch_bound=getattr(args, "branch_bound", 16),
        timing=args.timing,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        sys.stderr.write(f"aknsgap: {exc}\n")
        return EXIT_BAD_INPUT
    report, code = run(config)
    sys.stdout.write(render(report, config.output_format))
    if code == EXIT_BAD_INPUT:
        sys.stderr.write(f"aknsgap: {report['error']['message']}\n")
    elif code == EXIT_INTERNAL:
        sys.stderr.write(f"aknsgap: internal error: {report['error']['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
