"""Command-line interface.

Subcommands: ``density`` (evaluate the matrix log density on a data
file), ``sample`` (write a synthetic batch), ``fit`` (maximum likelihood
for one family), ``compare`` (Kotz power grid against the Gaussian
baseline), and ``validate`` (run the built-in oracle suite).

Options may also come from a JSON config file via ``--config``; explicit
flags win over config values.  All randomness flows from ``--seed``.
Exit codes: 0 success, 1 validation failure, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .density import Convention, logpdf_T
from .errors import DataFormatError, MatrixBsError
from .fit import DEFAULT_S_GRID, FitSpec, fit_mle, profile_s_grid
from .kernels import GAUSSIAN, KOTZ, KernelSpec, gaussian_kernel, kotz_kernel
from .sampling import sample_batch
from .transform import GbsParams
from .validate import format_report, run_validation

__all__ = ["main"]

CONVENTIONS = {
    "as-published": Convention.AS_PUBLISHED,
    "branch": Convention.BRANCH_NORMALIZED,
}


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matrixbs",
        description="Matrix-variate generalised Birnbaum-Saunders toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file with defaults for these flags")
        p.add_argument("--out", help="output file (.json for JSON, else text)")
        p.add_argument("--seed", type=int, help="seed for all randomness (default 0)")

    def add_model(p):
        p.add_argument("--family", choices=[GAUSSIAN, KOTZ], help="kernel family")
        p.add_argument("--q", type=float, help="Kotz power of the radial term")
        p.add_argument("--r", type=float, help="Kotz exponential rate")
        p.add_argument("--s", type=float, help="Kotz exponent inside the exponential")
        p.add_argument("--n", type=int, help="degrees parameter of the model")
        p.add_argument("--convention", choices=sorted(CONVENTIONS),
                       help="density normalisation convention (default branch)")

    p = sub.add_parser("density", help="evaluate the matrix log density per data row")
    add_common(p)
    add_model(p)
    p.add_argument("--data", help="CSV or JSON batch file")
    p.add_argument("--beta", help="scale: one value for beta*I or m(m+1)/2"
                                  " upper-triangle values, comma separated")
    p.add_argument("--xi", help="shape: one value for xi*I or m(m+1)/2"
                                " upper-triangle values, comma separated")

    p = sub.add_parser("sample", help="draw a batch and write it to a file")
    add_common(p)
    add_model(p)
    p.add_argument("--m", type=int, help="matrix order of each draw")
    p.add_argument("--count", type=int, help="number of draws")
    p.add_argument("--beta", help="scale parameter(s), as in density")
    p.add_argument("--xi", help="shape parameter(s), as in density")

    p = sub.add_parser("fit", help="maximum-likelihood fit of one family")
    add_common(p)
    add_model(p)
    p.add_argument("--data", help="CSV or JSON batch file")
    p.add_argument("--restarts", type=int, help="number of optimiser starts (default 5)")
    p.add_argument("--max-iter", type=int, help="iteration budget per start (default 5000)")

    p = sub.add_parser("compare", help="profile Kotz powers against the Gaussian baseline")
    add_common(p)
    add_model(p)
    p.add_argument("--data", help="CSV or JSON batch file")
    p.add_argument("--s-grid", help="comma-separated Kotz powers"
                                    " (default 0.5,0.75,1,1.25,1.5,1.75,2,3,4,5)")
    p.add_argument("--restarts", type=int, help="number of optimiser starts per row")
    p.add_argument("--max-iter", type=int, help="iteration budget per start")
    p.add_argument("--jobs", type=int, help="parallel workers for grid rows (default 1)")

    p = sub.add_parser("validate", help="run the oracle cross-check suite")
    add_common(p)
    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as bad:
            raise UsageError(f"cannot read config {args.config}: {bad}")
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in cfg.items():
            attr = key.replace("-", "_")
            if hasattr(args, attr) and getattr(args, attr) is None:
                setattr(args, attr, value)
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for"
                             f" the {args.command} command")


def _parse_triangle(text, m: int, what: str) -> np.ndarray:
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise UsageError(f"--{what} must be comma-separated numbers")
    if len(vals) == 1:
        return vals[0] * np.eye(m)
    expected = m * (m + 1) // 2
    if len(vals) != expected:
        raise UsageError(f"--{what} needs 1 or {expected} values for m={m},"
                         f" got {len(vals)}")
    M = np.zeros((m, m))
    it = iter(vals)
    for i in range(m):
        for j in range(i, m):
            v = next(it)
            M[i, j] = v
            M[j, i] = v
    return M


def _kernel(args, n: int, m: int) -> KernelSpec:
    family = args.family or GAUSSIAN
    if family == GAUSSIAN:
        return gaussian_kernel(n, m)
    for p in ("q", "r", "s"):
        if getattr(args, p) is None:
            raise UsageError(f"--{p} is required for the kotz family")
    return kotz_kernel(args.q, args.r, args.s, n, m)


def _convention(args) -> Convention:
    return CONVENTIONS[args.convention or "branch"]


def _emit(args, text_payload: str, json_payload) -> None:
    if args.out and args.out.lower().endswith(".json"):
        Path(args.out).write_text(json.dumps(json_payload, indent=2) + "\n",
                                  encoding="utf-8")
    elif args.out:
        Path(args.out).write_text(text_payload, encoding="utf-8")
    else:
        sys.stdout.write(text_payload)


def _cmd_density(args) -> int:
    _require(args, "data", "n")
    batch = dataio.read_batch(args.data)
    m = batch.m
    if args.beta is None or args.xi is None:
        raise UsageError("density needs --beta and --xi")
    params = GbsParams(n=args.n, xi=_parse_triangle(args.xi, m, "xi"),
                       beta=_parse_triangle(args.beta, m, "beta"))
    kernel = _kernel(args, args.n, m)
    conv = _convention(args)
    values = [logpdf_T(T, params, kernel, conv) for T in batch.matrices]
    text = "".join(f"{v:.17g}\n" for v in values)
    _emit(args, text, {"logpdf": values, "convention": conv.value})
    return 0


def _cmd_sample(args) -> int:
    _require(args, "n", "m", "count", "seed", "out")
    m = args.m
    beta = _parse_triangle(args.beta, m, "beta") if args.beta is not None else np.eye(m)
    xi = _parse_triangle(args.xi, m, "xi") if args.xi is not None else np.eye(m)
    params = GbsParams(n=args.n, xi=xi, beta=beta)
    kernel = _kernel(args, args.n, m)
    batch = sample_batch(params, kernel, args.count, args.seed)
    dataio.write_batch(args.out, batch)
    return 0


def _fit_spec(args, family: str, s: float = 1.0) -> FitSpec:
    kwargs = {"family": family, "seed": args.seed if args.seed is not None else 0,
              "convention": _convention(args)}
    if family == KOTZ:
        kwargs["s"] = s
    if getattr(args, "restarts", None) is not None:
        kwargs["restarts"] = args.restarts
    if getattr(args, "max_iter", None) is not None:
        kwargs["max_iter"] = args.max_iter
    return FitSpec(**kwargs)


def _cmd_fit(args) -> int:
    _require(args, "data", "n")
    batch = dataio.read_batch(args.data)
    family = args.family or GAUSSIAN
    if family == KOTZ and args.s is None:
        raise UsageError("--s (fixed Kotz power) is required to fit the kotz family")
    result = fit_mle(batch, _fit_spec(args, family, args.s or 1.0), args.n)
    _emit(args, dataio.format_fit_text(result), dataio.fit_result_to_dict(result))
    return 0


def _cmd_compare(args) -> int:
    _require(args, "data", "n")
    batch = dataio.read_batch(args.data)
    if args.s_grid is not None:
        try:
            grid = [float(v) for v in str(args.s_grid).split(",")]
        except ValueError:
            raise UsageError("--s-grid must be comma-separated numbers")
    else:
        grid = list(DEFAULT_S_GRID)
    profile = profile_s_grid(batch, grid, args.n,
                             spec=_fit_spec(args, KOTZ),
                             jobs=args.jobs or 1)
    _emit(args, dataio.format_profile_table(profile), dataio.profile_to_dict(profile))
    return 0


def _cmd_validate(args) -> int:
    checks = run_validation(seed=args.seed if args.seed is not None else 0)
    report = format_report(checks)
    _emit(args, report, [{"name": c.name, "passed": c.passed, "detail": c.detail}
                         for c in checks])
    if args.out:
        sys.stdout.write(report)
    return 0 if all(c.passed for c in checks) else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"density": _cmd_density, "sample": _cmd_sample, "fit": _cmd_fit,
                "compare": _cmd_compare, "validate": _cmd_validate}
    try:
        args = _merge_config(args)
        return handlers[args.command](args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DataFormatError as err:
        print(f"data error in {getattr(args, 'data', '<input>')}: {err}",
              file=sys.stderr)
        return 2
    except MatrixBsError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
