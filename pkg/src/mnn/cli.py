"""Command-line front end.

Subcommands: gen-data (synthesize datasets), rpca (robust PCA on a stored
tensor), mc (completion on a stored tensor plus mask), phase (success-rate
sweep to CSV), trace (per-iteration convergence CSV on a synthetic
instance).

Flags can come from a `key = value` config file via --config; explicit
flags override file entries. When --seed is absent the MNN_SEED
environment variable is consulted before falling back to 0. Exit codes:
0 success, 2 usage or configuration error, 3 numerical failure,
4 file-format or I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .errors import (
    ConfigError,
    DegenerateInputError,
    DegenerateKernelError,
    DimensionError,
    DivergenceError,
    FormatError,
    InnerSolveError,
    NumericsError,
)
from .experiments import (
    run_phase_diagram,
    run_restoration,
    write_metrics_csv,
    write_phase_csv,
    write_trace_csv,
)
from .operators import ConvOperator, builtin_kernel, kernel_from_csv
from .solvers import SolverConfig, solve_mc, solve_rpca
from .synth import MASK_SCHEMES, gen_mc_instance, gen_rpca_instance
from .tensors import fold3, read_tensor, write_tensor

# CLI operator names describe the stencil family; "diff" is the
# first-order difference along plane rows.
CLI_KERNELS = {
    "identity": "identity",
    "diff": "diff_row",
    "central-diff": "central_diff",
    "sobel": "sobel",
    "laplacian1": "laplacian1",
    "laplacian2": "laplacian2",
}


def _fmt(parser_kwargs):
    parser_kwargs.setdefault("formatter_class", argparse.ArgumentDefaultsHelpFormatter)
    # No prefix abbreviation: a mistyped flag should be a usage error,
    # not silently match another flag (e.g. --kernel -> --kernel-file,
    # which would then fail as a missing taps file).
    parser_kwargs.setdefault("allow_abbrev", False)
    return parser_kwargs


def _add_operator_flags(p):
    p.add_argument(
        "--operator",
        choices=sorted(CLI_KERNELS),
        default="diff",
        help="built-in kernel family",
    )
    p.add_argument(
        "--kernel-file",
        default=None,
        help="CSV file with custom kernel taps (overrides --operator)",
    )
    p.add_argument(
        "--norm",
        choices=("l2", "l1", "none"),
        default="l2",
        help="kernel normalization",
    )


def _add_solver_flags(p, with_lam=True, with_mu=True):
    p.add_argument(
        "--algorithm",
        choices=("subgradient", "admm"),
        default="admm",
        help="solver family",
    )
    if with_lam:
        p.add_argument(
            "--lam",
            type=float,
            default=None,
            help="sparsity weight (default: 1/sqrt(max(n1, n2)))",
        )
    if with_mu:
        p.add_argument(
            "--mu",
            type=float,
            default=None,
            help="completion data weight (default: (sqrt(n1)+sqrt(n2))*sqrt(p)*sigma)",
        )
        p.add_argument(
            "--sigma",
            type=float,
            default=1e-4,
            help="noise scale feeding the default mu",
        )
    p.add_argument("--step", type=float, default=1e-4, help="subgradient step size")
    p.add_argument("--max-iters", type=int, default=5000, help="iteration cap")
    p.add_argument(
        "--rel-tol", type=float, default=1e-7, help="relative stopping tolerance"
    )
    p.add_argument("--rho", type=float, default=1.0, help="ADMM penalty parameter")
    p.add_argument(
        "--cg-tol", type=float, default=1e-8, help="inner conjugate-gradient tolerance"
    )
    p.add_argument(
        "--cg-max-iters", type=int, default=500, help="inner conjugate-gradient cap"
    )


def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="RNG seed (or env MNN_SEED)")
    p.add_argument(
        "--config", default=None, help="key = value file supplying flag defaults"
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mnn",
        description="Matrix recovery under a convolution-modified nuclear norm.",
        **_fmt({}),
    )
    parser.add_argument("--version", action="version", version=f"mnn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    g = sub.add_parser("gen-data", help="synthesize a dataset", **_fmt({}))
    g.add_argument("--task", choices=("rpca", "mc"), required=True)
    g.add_argument("--h", type=int, required=True, help="plane height")
    g.add_argument("--w", type=int, required=True, help="plane width")
    g.add_argument("--b", type=int, required=True, help="band count")
    g.add_argument("--r", type=int, required=True, help="target rank")
    g.add_argument("--c", type=int, default=10, help="regions per factor plane")
    g.add_argument("--rho-s", type=float, default=0.1, help="corruption ratio (rpca)")
    g.add_argument("--p", type=float, default=0.5, help="sampling rate (mc)")
    g.add_argument(
        "--scheme", choices=MASK_SCHEMES, default="bernoulli", help="mask scheme (mc)"
    )
    g.add_argument("--out", required=True, help="output directory")
    _add_common(g)
    g.set_defaults(func=cmd_gen_data)

    rp = sub.add_parser("rpca", help="robust PCA on a tensor file", **_fmt({}))
    rp.add_argument("--input", required=True, help="observed tensor (MNNT)")
    rp.add_argument("--truth", default=None, help="ground-truth tensor for metrics")
    rp.add_argument("--out", required=True, help="output directory")
    rp.add_argument("--h", type=int, default=None, help="plane height (2-D inputs)")
    rp.add_argument("--w", type=int, default=None, help="plane width (2-D inputs)")
    rp.add_argument("--peak", type=float, default=None, help="PSNR peak override")
    _add_operator_flags(rp)
    _add_solver_flags(rp, with_mu=False)
    _add_common(rp)
    rp.set_defaults(func=cmd_rpca)

    mc = sub.add_parser("mc", help="completion on a tensor file", **_fmt({}))
    mc.add_argument("--input", required=True, help="observed tensor (MNNT)")
    mc.add_argument("--mask", required=True, help="sampling mask tensor (MNNT, 0/1)")
    mc.add_argument("--truth", default=None, help="ground-truth tensor for metrics")
    mc.add_argument("--out", required=True, help="output directory")
    mc.add_argument("--h", type=int, default=None, help="plane height (2-D inputs)")
    mc.add_argument("--w", type=int, default=None, help="plane width (2-D inputs)")
    mc.add_argument("--peak", type=float, default=None, help="PSNR peak override")
    _add_operator_flags(mc)
    _add_solver_flags(mc, with_lam=False)
    _add_common(mc)
    mc.set_defaults(func=cmd_mc)

    ph = sub.add_parser("phase", help="success-rate sweep to CSV", **_fmt({}))
    ph.add_argument("--task", choices=("rpca", "mc"), required=True)
    ph.add_argument("--r-list", required=True, help="comma-separated ranks")
    ph.add_argument(
        "--ratio-list",
        required=True,
        help="comma-separated ratios (corruption for rpca, sampling for mc)",
    )
    ph.add_argument("--h", type=int, default=16, help="plane height")
    ph.add_argument("--w", type=int, default=16, help="plane width")
    ph.add_argument("--b", type=int, default=30, help="band count")
    ph.add_argument("--c", type=int, default=10, help="regions per factor plane")
    ph.add_argument("--trials", type=int, default=10, help="trials per cell")
    ph.add_argument(
        "--scheme", choices=MASK_SCHEMES, default="bernoulli", help="mask scheme (mc)"
    )
    ph.add_argument(
        "--jobs",
        type=int,
        default=None,
        help="worker processes (default: logical cores)",
    )
    ph.add_argument("--out", required=True, help="output CSV path")
    _add_operator_flags(ph)
    _add_solver_flags(ph)
    _add_common(ph)
    ph.set_defaults(func=cmd_phase)

    tr = sub.add_parser(
        "trace", help="convergence trace on a synthetic instance", **_fmt({})
    )
    tr.add_argument("--task", choices=("rpca", "mc"), required=True)
    tr.add_argument("--h", type=int, default=16, help="plane height")
    tr.add_argument("--w", type=int, default=16, help="plane width")
    tr.add_argument("--b", type=int, default=30, help="band count")
    tr.add_argument("--r", type=int, required=True, help="target rank")
    tr.add_argument("--c", type=int, default=10, help="regions per factor plane")
    tr.add_argument("--rho-s", type=float, default=0.1, help="corruption ratio (rpca)")
    tr.add_argument("--p", type=float, default=0.5, help="sampling rate (mc)")
    tr.add_argument(
        "--scheme", choices=MASK_SCHEMES, default="bernoulli", help="mask scheme (mc)"
    )
    tr.add_argument("--out", required=True, help="output CSV path")
    _add_operator_flags(tr)
    _add_solver_flags(tr)
    _add_common(tr)
    tr.set_defaults(func=cmd_trace)

    return parser


def _resolve_seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("MNN_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"MNN_SEED must be an integer, got {env!r}") from exc


def _expand_config(argv):
    """Insert config-file entries as flags right after the subcommand."""
    if not argv or argv[0].startswith("-"):
        return argv
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    if path is None:
        return argv
    extra = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected `key = value`")
            key, value = line.split("=", 1)
            key = key.strip().replace("_", "-")
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            extra.append(f"--{key}={value.strip()}")
    # argv[0] is the subcommand; later (explicit) flags win over these
    return argv[:1] + extra + argv[1:]


def _build_kernel(args):
    if args.kernel_file is not None:
        return kernel_from_csv(args.kernel_file), "custom"
    return builtin_kernel(CLI_KERNELS[args.operator]), args.operator


def _solver_cfg(args):
    return SolverConfig(
        lam=getattr(args, "lam", None),
        mu=getattr(args, "mu", None),
        sigma=getattr(args, "sigma", 1e-4),
        step=args.step,
        max_iters=args.max_iters,
        rel_tol=args.rel_tol,
        algorithm=args.algorithm,
        admm_rho=args.rho,
        cg_tol=args.cg_tol,
        cg_max_iters=args.cg_max_iters,
    ).validate()


def _write_provenance(path, args, seed, skip=("func", "config", "seed")):
    lines = [f"tool: mnn {__version__}", f"command: {args.command}", f"seed: {seed}"]
    for key in sorted(vars(args)):
        if key in skip or key == "command":
            continue
        lines.append(f"{key}: {getattr(args, key)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_gen_data(args):
    seed = _resolve_seed(args)
    os.makedirs(args.out, exist_ok=True)
    if args.task == "rpca":
        x0, s0, m = gen_rpca_instance(
            args.h, args.w, args.b, args.r, args.rho_s, seed, c=args.c
        )
        write_tensor(os.path.join(args.out, "s0.mnnt"), fold3(s0, args.h, args.w))
    else:
        x0, mask, m = gen_mc_instance(
            args.h, args.w, args.b, args.r, args.p, seed, c=args.c, scheme=args.scheme
        )
        write_tensor(
            os.path.join(args.out, "mask.mnnt"),
            fold3(mask.astype(float), args.h, args.w),
        )
    write_tensor(os.path.join(args.out, "x0.mnnt"), fold3(x0, args.h, args.w))
    write_tensor(os.path.join(args.out, "m.mnnt"), fold3(m, args.h, args.w))
    _write_provenance(os.path.join(args.out, "provenance.txt"), args, seed)
    return 0


def _plane_dims(args):
    arr = read_tensor(args.input)
    if arr.ndim == 3:
        return arr.shape[0], arr.shape[1], True
    if args.h is None or args.w is None:
        raise ConfigError("2-D input needs --h and --w to define the plane size")
    return args.h, args.w, False


def cmd_rpca(args):
    h, w, was_stack = _plane_dims(args)
    kernel, name = _build_kernel(args)
    op = ConvOperator(kernel, h, w, norm=args.norm, name=name)
    cfg = _solver_cfg(args)
    os.makedirs(args.out, exist_ok=True)
    row, sol = run_restoration(
        args.input,
        args.truth,
        "rpca",
        op,
        cfg,
        os.path.join(args.out, "x_hat.mnnt"),
        peak=args.peak,
    )
    s_hat = sol.s_hat
    write_tensor(
        os.path.join(args.out, "s_hat.mnnt"),
        fold3(s_hat, h, w) if was_stack else s_hat,
    )
    write_metrics_csv([row], os.path.join(args.out, "metrics.csv"))
    print(
        f"rpca {row.dataset}: rel_err={row.rel_err} psnr={row.psnr} "
        f"converged={sol.report.converged} iters={sol.report.iterations_run}"
    )
    return 0


def cmd_mc(args):
    h, w, _ = _plane_dims(args)
    kernel, name = _build_kernel(args)
    op = ConvOperator(kernel, h, w, norm=args.norm, name=name)
    cfg = _solver_cfg(args)
    os.makedirs(args.out, exist_ok=True)
    row, sol = run_restoration(
        args.input,
        args.truth,
        "mc",
        op,
        cfg,
        os.path.join(args.out, "x_hat.mnnt"),
        mask_path=args.mask,
        peak=args.peak,
    )
    write_metrics_csv([row], os.path.join(args.out, "metrics.csv"))
    print(
        f"mc {row.dataset}: rel_err={row.rel_err} psnr={row.psnr} "
        f"converged={sol.report.converged} iters={sol.report.iterations_run}"
    )
    return 0


def _parse_list(text, cast):
    items = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not items:
        raise ConfigError(f"empty list {text!r}")
    return [cast(tok) for tok in items]


def cmd_phase(args):
    seed = _resolve_seed(args)
    kernel, name = _build_kernel(args)
    grid = run_phase_diagram(
        args.task,
        kernel,
        _parse_list(args.r_list, int),
        _parse_list(args.ratio_list, float),
        h=args.h,
        w=args.w,
        b=args.b,
        c=args.c,
        trials=args.trials,
        seed=seed,
        cfg=_solver_cfg(args),
        norm=args.norm,
        mask_scheme=args.scheme,
        jobs=args.jobs,
        operator_name=name,
    )
    write_phase_csv(grid, args.out)
    print(f"phase {args.task}/{name}: mean success {grid.success_rate.mean():.3f}")
    return 0


def cmd_trace(args):
    seed = _resolve_seed(args)
    kernel, name = _build_kernel(args)
    op = ConvOperator(kernel, args.h, args.w, norm=args.norm, name=name)
    cfg = _solver_cfg(args)
    if args.task == "rpca":
        x0, _, m = gen_rpca_instance(
            args.h, args.w, args.b, args.r, args.rho_s, seed, c=args.c
        )
        sol = solve_rpca(m, op, cfg=cfg, truth=x0)
    else:
        x0, mask, m = gen_mc_instance(
            args.h, args.w, args.b, args.r, args.p, seed, c=args.c, scheme=args.scheme
        )
        sol = solve_mc(m, mask, op, cfg=cfg, truth=x0)
    write_trace_csv(sol.report, args.out)
    print(
        f"trace {args.task}/{name}: final objective "
        f"{sol.report.final_objective} after {sol.report.iterations_run} iters"
    )
    return 0


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
        parser = build_parser()
        args = parser.parse_args(argv)
        rc = args.func(args)
        return 0 if rc is None else rc
    except (ConfigError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        DivergenceError,
        InnerSolveError,
        NumericsError,
        DegenerateKernelError,
        DegenerateInputError,
    ) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except FormatError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
