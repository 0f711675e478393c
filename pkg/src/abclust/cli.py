"""Batch front-end.

Subcommands:

    simulate-data   write a synthetic benchmark dataset plus its truth labels
    run-abc         transport-matched ABC-MCMC chains (fixed or adaptive eps)
    run-gibbs       marginal Gibbs baselines (conjugate or Monte Carlo)
    summarize       post-process a stored chain CSV

Every run directory gets a config.json echo and an args.txt replay file, so
`abclust @RUN/args.txt` repeats the run bit for bit (seeds included).
Replications live in rep00/, rep01/, ... subdirectories with rng streams
spawned from the root seed.

Exit codes: 0 success, 2 configuration problems, 3 stalled acceptance loop.
"""

from __future__ import annotations

import sys
import argparse
import numpy as np
from pathlib import Path

from . import __version__, io
from .abc_sampler import (
    AbcConfig,
    EpsilonSchedule,
    StallError,
    abc_mcmc_adaptive,
    abc_mcmc_fixed,
    default_threshold,
    tune_eps_star,
)
from .gibbs import GibbsConfig, gibbs_conjugate, gibbs_mc
from .kernels import make_kernel
from .priors import PitmanYor
from .simulate import simulate_scenario
from .summaries import summarize_chain

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STALL = 3

_KERNELS = ("gaussian", "gk1", "gk2", "ergm")


def _add_shared(p, chain: bool):
    p.add_argument("--theta", type=float, default=1.0, help="prior strength (default 1)")
    p.add_argument("--sigma", type=float, default=0.2, help="prior discount (default 0.2)")
    if chain:
        p.add_argument("--iters", type=int, default=20000)
        p.add_argument("--burnin", type=int, default=10000)
        p.add_argument("--reps", type=int, default=1, help="independent replications")
    p.add_argument("--thin", type=int, default=10, help="point-estimate candidate thinning")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", help="truth labels CSV, scored into the summary")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="abclust",
        description=__doc__,
        fromfile_prefix_chars="@",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    top.add_argument("--version", action="version", version=f"abclust {__version__}")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-data", help="write a synthetic dataset")
    p.add_argument("--scenario", required=True, choices=_KERNELS)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes", type=int, default=30, help="graph scenario node count")
    p.add_argument("--sweeps", type=int, default=20, help="graph sampler sweeps")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run-abc", help="run transport-matched ABC-MCMC")
    p.add_argument("--data", required=True, help="data CSV, or a graph directory")
    p.add_argument("--kernel", default="gaussian", choices=_KERNELS)
    _add_shared(p, chain=True)
    p.add_argument(
        "--solver",
        choices=("sort", "hungarian", "sinkhorn"),
        help="matching solver (default: sort for scalar data, else hungarian)",
    )
    p.add_argument("--q", type=float, default=2.0, help="transport order (default 2)")
    p.add_argument("--sinkhorn-reg", type=float, help="entropic regularization")
    p.add_argument("--eps", type=float, help="fixed threshold; overrides the preset")
    p.add_argument(
        "--eps-fraction",
        type=float,
        default=1.0,
        help="preset scale: eps = fraction * sqrt(n log n) / n^(1/q) (default 1)",
    )
    p.add_argument(
        "--adapt",
        choices=("none", "burnin", "full"),
        default="none",
        help="threshold schedule: none = fixed; burnin = decay during burn-in "
        "then freeze; full = hold eps0 through burn-in, then keep adapting",
    )
    p.add_argument("--eps0", type=float, help="schedule start (default: preset)")
    p.add_argument("--eps-star", type=float, help="schedule target (default: pilot-tuned)")
    p.add_argument(
        "--target-rate", type=float, default=0.1, help="pilot tuner acceptance target"
    )
    p.add_argument("--max-attempts", type=int, default=1_000_000)
    p.add_argument("--sweeps", type=int, default=20, help="graph kernel sampler sweeps")
    p.set_defaults(func=cmd_run_abc)

    p = sub.add_parser("run-gibbs", help="run a marginal Gibbs baseline")
    p.add_argument("--data", required=True)
    p.add_argument("--kernel", default="gaussian", choices=("gaussian", "gk1", "gk2"))
    p.add_argument(
        "--variant",
        choices=("conjugate", "mc"),
        default="conjugate",
        help="conjugate = collapsed closed-form scans; mc = auxiliary draws",
    )
    p.add_argument("--m", type=int, default=10, help="auxiliary draws per reallocation")
    p.add_argument("--param-steps", type=int, default=5)
    p.add_argument("--step-scale", type=float, default=0.25)
    _add_shared(p, chain=True)
    p.set_defaults(func=cmd_run_gibbs)

    p = sub.add_parser("summarize", help="post-process a stored chain")
    p.add_argument("--chain", required=True, help="chain CSV path")
    p.add_argument("--burnin", type=int, default=0, help="iterations to drop")
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--truth", help="truth labels CSV")
    p.add_argument("--out", help="summary JSON path (default: print to stdout)")
    p.set_defaults(func=cmd_summarize)
    return top


# ---------------------------------------------------------------------------
# bookkeeping


def _echo(args, outdir: Path, skip=("func", "command")):
    """config.json echo + args.txt replay file for the run directory."""
    resolved = {
        k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None
    }
    io.write_json(
        outdir / "config.json",
        {"command": args.command, "version": __version__, **resolved},
    )
    lines = [args.command]
    for k, v in resolved.items():
        lines.append("--" + k.replace("_", "-"))
        lines.append(str(v))
    (outdir / "args.txt").write_text("\n".join(lines) + "\n")


def _resolve(path: str | None):
    return str(Path(path).resolve()) if path else None


def _load_truth(args):
    return io.read_labels(args.truth) if args.truth else None


def _rep_dirs(out: Path, reps: int) -> list[Path]:
    if reps == 1:
        return [out]
    return [out / f"rep{r:02d}" for r in range(reps)]


def _rep_rngs(seed: int, reps: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(reps)]


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    kwargs = {"n_nodes": args.nodes, "sweeps": args.sweeps} if args.scenario == "ergm" else {}
    data, truth = simulate_scenario(args.scenario, args.n, rng, **kwargs)
    if args.scenario == "ergm":
        io.write_graph_dir(out / "data", data)
    else:
        io.write_data(out / "data.csv", data)
    io.write_labels(out / "truth.csv", truth)
    _echo(args, out)
    print(f"wrote {args.scenario} dataset (n={args.n}) to {out}")
    return EXIT_OK


def _build_kernel(args, y):
    if args.kernel == "ergm":
        if not isinstance(y, list):
            raise ValueError("the ergm kernel needs a graph directory dataset")
        return make_kernel("ergm", n_nodes=y[0].n_nodes, sweeps=args.sweeps)
    if isinstance(y, list):
        raise ValueError(f"kernel {args.kernel!r} cannot model graph data")
    y = np.asarray(y)
    want = 2 if args.kernel == "gk2" else 1
    got = 1 if y.ndim == 1 else y.shape[1]
    if got != want:
        raise ValueError(f"kernel {args.kernel!r} expects {want}-column data, got {got}")
    return make_kernel(args.kernel)


def _write_run(outdir, run, summary, extra):
    n = len(run.samples[0].partition.labels)
    io.write_chain_csv(outdir / "chain.csv", run.samples, n)
    io.write_attempts_csv(outdir / "attempts.csv", run)
    io.write_json(outdir / "summary.json", {**summary.to_dict(), **extra})


def cmd_run_abc(args) -> int:
    args.data = _resolve(args.data)
    args.truth = _resolve(args.truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    y = io.read_data(args.data)
    truth = _load_truth(args)
    kernel = _build_kernel(args, y)
    solver = args.solver or ("sort" if kernel.is_scalar else "hungarian")
    config = AbcConfig(
        prior=PitmanYor(theta=args.theta, sigma=args.sigma),
        kernel=kernel,
        q=args.q,
        solver=solver,
        iterations=args.iters,
        burnin=args.burnin,
        max_attempts=args.max_attempts,
        sinkhorn_reg=args.sinkhorn_reg,
    )
    n = len(y)
    preset = default_threshold(n, args.q, args.eps_fraction)
    _echo(args, out)

    for rep, (outdir, rng) in enumerate(zip(_rep_dirs(out, args.reps), _rep_rngs(args.seed, args.reps))):
        outdir.mkdir(parents=True, exist_ok=True)
        extra: dict = {"rep": rep, "solver": solver, "n": n}
        if args.adapt == "none":
            eps = args.eps if args.eps is not None else preset
            run = abc_mcmc_fixed(y, config, eps, rng)
            extra["eps"] = eps
        else:
            eps0 = args.eps0 if args.eps0 is not None else preset
            eps_star = args.eps_star
            if eps_star is None:
                eps_star = tune_eps_star(y, config, target_rate=args.target_rate, rng=rng)
            schedule = EpsilonSchedule(
                eps0=eps0,
                eps_star=eps_star,
                mode="always" if args.adapt == "full" else "stop_after_burnin",
            )
            run = abc_mcmc_adaptive(y, config, schedule, rng)
            extra.update(eps0=eps0, eps_star=eps_star, eps_final=run.samples[-1].epsilon)
        summary = summarize_chain(
            run.samples,
            burnin=run.burnin,
            truth=truth,
            acceptance_rate=run.acceptance_rate,
            mean_attempts=run.mean_attempts,
            iter_seconds=run.iter_seconds,
            thin=args.thin,
        )
        extra.update(
            total_attempts=run.total_attempts,
            wall_seconds=float(np.sum(run.iter_seconds)),
        )
        _write_run(outdir, run, summary, extra)
        print(
            f"rep {rep}: accept {run.acceptance_rate:.4f}, "
            f"point estimate k={summary.point_estimate.k}"
            + (f", VI to truth {summary.vi_to_truth:.3f}" if truth is not None else "")
        )
    return EXIT_OK


def cmd_run_gibbs(args) -> int:
    args.data = _resolve(args.data)
    args.truth = _resolve(args.truth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    y = io.read_data(args.data)
    truth = _load_truth(args)
    kernel = _build_kernel(args, y)
    if args.variant == "conjugate" and args.kernel != "gaussian":
        raise ValueError("the conjugate variant needs the gaussian kernel")
    config = GibbsConfig(
        prior=PitmanYor(theta=args.theta, sigma=args.sigma),
        kernel=kernel,
        iterations=args.iters,
        burnin=args.burnin,
        aux_draws=args.m,
        param_steps=args.param_steps,
        step_scale=args.step_scale,
    )
    _echo(args, out)
    sampler = gibbs_conjugate if args.variant == "conjugate" else gibbs_mc

    for rep, (outdir, rng) in enumerate(zip(_rep_dirs(out, args.reps), _rep_rngs(args.seed, args.reps))):
        outdir.mkdir(parents=True, exist_ok=True)
        run = sampler(y, config, rng)
        summary = summarize_chain(
            run.samples,
            burnin=run.burnin,
            truth=truth,
            iter_seconds=run.iter_seconds,
            thin=args.thin,
        )
        extra = {
            "rep": rep,
            "variant": args.variant,
            "n": len(y),
            "wall_seconds": float(np.sum(run.iter_seconds)),
        }
        if args.variant == "mc":
            extra["param_accept_rate"] = run.param_accept_rate
        n = len(run.samples[0].partition.labels)
        io.write_chain_csv(outdir / "chain.csv", run.samples, n)
        io.write_json(outdir / "summary.json", {**summary.to_dict(), **extra})
        print(f"rep {rep}: point estimate k={summary.point_estimate.k}")
    return EXIT_OK


def cmd_summarize(args) -> int:
    samples = io.read_chain_csv(args.chain)
    truth = _load_truth(args)
    kept = [s for s in samples if s.iteration >= args.burnin]
    if not kept:
        raise ValueError("burn-in leaves no samples to summarize")
    attempts = float(np.mean([s.attempts for s in kept]))
    summary = summarize_chain(
        samples,
        burnin=args.burnin,
        truth=truth,
        acceptance_rate=1.0 / attempts,
        mean_attempts=attempts,
        thin=args.thin,
    )
    payload = summary.to_dict()
    if args.out:
        io.write_json(Path(args.out), payload)
        print(f"wrote {args.out}")
    else:
        import json

        print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StallError as err:
        print(f"abclust: stalled: {err}", file=sys.stderr)
        return EXIT_STALL
    except (ValueError, TypeError, KeyError, OSError, NotImplementedError,
            RuntimeError) as err:
        # RuntimeError covers threshold tuning giving up; --eps-star overrides it
        print(f"abclust: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
