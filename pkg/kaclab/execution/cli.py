"""Command-line drivers for kaclab experiments."""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from ..config import DEFAULT_CONFIG, default_threads, oracle_sweep
from ..coupling.nonmarkov import build_nm_coupling, coalesce_attempt, complete_trace
from ..data.records import FLOAT_FORMAT, report_payload, trace_frame, write_json
from ..errors import CouplingNumericsExhausted, DomainError, NumericError
from ..group.so_n import (
    haar_marginal_cdf,
    haar_sample,
    mat_exp_skew,
    orthogonality_error,
    plane_count,
    project_skew,
)
from ..randmat.oracles import (
    InequalityReport,
    determinant_ratio_oracle,
    exponential_approximation_oracle,
    jacobian_formula_oracle,
    lazy_tail_oracle,
    path_closeness_oracle,
    small_ball_sweep,
    sphere_conditional_density_check,
    tangent_closeness_oracle,
    telescoping_oracle,
)
from ..randmat.singular import phi_from_samples, sample_sigma_min
from ..utils.bounds import mixing_bound_report
from ..utils.diagnostics import ks_statistic
from ..walk.chain import WalkState, random_update_sequence, run_walk
from .manifest import MANIFEST_NAME, RunManifest
from .runner import run_replicates
from .streams import replicate_stream

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
        return args.handler(args, parser)
    except SystemExit as exit_request:
        return exit_request.code if isinstance(exit_request.code, int) else EXIT_USAGE
    except DomainError as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as error:
        print(f"numeric failure: {error}", file=sys.stderr)
        return EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    verbosity = argparse.ArgumentParser(add_help=False)
    verbosity.add_argument(
        "--log-level",
        default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity (default: WARNING)",
    )

    shared = argparse.ArgumentParser(add_help=False, parents=[verbosity])
    shared.add_argument("--seed", type=int, default=0, help="Master seed (default: 0)")
    shared.add_argument(
        "--threads",
        type=int,
        default=default_threads(),
        help=f"Worker count (default: ${DEFAULT_CONFIG.threads_env_var} or 1)",
    )
    shared.add_argument("--out", type=Path, default=None, help="Output directory (default: runs/<command>)")

    parser = argparse.ArgumentParser(prog="kaclab", description="Kac's walk on SO(n) simulation lab")
    commands = parser.add_subparsers(dest="command", required=True)

    walk = commands.add_parser("walk", parents=[shared], help="Run walks from the identity")
    walk.add_argument("--n", type=int, default=5)
    walk.add_argument("--steps", type=int, default=1000)
    walk.add_argument("--replicates", type=int, default=200)
    walk.add_argument("--checkpoints", type=int, default=10, help="Number of tv_proxy checkpoints")
    walk.set_defaults(handler=cmd_walk)

    couple = commands.add_parser("couple", parents=[shared], help="Run the scaffolded coalescence coupling")
    couple.add_argument("--n", type=int, default=3)
    couple.add_argument("--flavor", choices=["greedy", "lazy"], default="lazy")
    couple.add_argument("--Q", type=float, default=1.0)
    couple.add_argument("--eps", type=float, default=DEFAULT_CONFIG.default_epsilon)
    couple.add_argument("--replicates", type=int, default=100)
    couple.add_argument("--init-distance", type=float, default=1e-6, help="HS distance between start points")
    couple.add_argument("--identical", action="store_true", help="Start both chains at the same point")
    couple.set_defaults(handler=cmd_couple)

    phi = commands.add_parser("phi", parents=[shared], help="Estimate phi_n and the mixing bounds")
    phi.add_argument("--n", type=int, default=3)
    phi.add_argument("--flavor", choices=["d", "dinf"], default="dinf")
    phi.add_argument("--Q", type=float, default=1.0)
    phi.add_argument("--samples", type=int, default=1000)
    phi.add_argument("--confidence", type=float, default=DEFAULT_CONFIG.confidence)
    phi.add_argument("--dump-samples", action="store_true", help="Also write the sigma_min draws")
    phi.set_defaults(handler=cmd_phi)

    verify = commands.add_parser("verify", parents=[shared], help="Run the inequality oracle suite")
    verify.add_argument("--only", action="append", choices=sorted(ORACLES), default=None)
    verify.add_argument("--trials", type=int, default=None, help="Override each oracle's default trial count")
    verify.set_defaults(handler=cmd_verify)

    clean = commands.add_parser("clean", parents=[verbosity], help="Remove run outputs recorded in manifests")
    clean.add_argument("paths", nargs="*", type=Path, default=[Path("runs")], help="Run directories (default: runs)")
    clean.add_argument("--force", action="store_true", help="Also remove outputs modified since the run")
    clean.set_defaults(handler=cmd_clean)
    return parser


def cmd_walk(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _check_common(args, parser)
    if args.steps < 0:
        parser.error(f"--steps must be non-negative, got {args.steps}")
    if args.replicates < DEFAULT_CONFIG.min_samples:
        parser.error(f"--replicates must be at least {DEFAULT_CONFIG.min_samples}, got {args.replicates}")
    if args.checkpoints < 1:
        parser.error(f"--checkpoints must be positive, got {args.checkpoints}")

    out = _output_dir(args)
    times = np.unique(np.rint(np.linspace(0, args.steps, args.checkpoints + 1)).astype(np.int64))
    rows = run_replicates(
        _walk_replicate, args.replicates, args.seed, "walk", args.threads, n=args.n, times=times.tolist()
    )
    summary = pd.DataFrame([row for replicate in rows for row in replicate])
    summary_path = out / "walk_summary.csv"
    summary.to_csv(summary_path, index=False, float_format=FLOAT_FORMAT)

    N = plane_count(args.n)
    proxy = pd.DataFrame(
        [
            {
                "t": int(t),
                "ks": ks_statistic(group["x11"].to_numpy(), lambda x: haar_marginal_cdf(args.n, x)),
                "rank_deficient": bool(t < N),
            }
            for t, group in summary.groupby("t", sort=True)
        ]
    )
    proxy_path = out / "tv_proxy.csv"
    proxy.to_csv(proxy_path, index=False, float_format=FLOAT_FORMAT)

    final = proxy.iloc[-1]
    print("Walk complete")
    print(f"n={args.n} steps={args.steps} replicates={args.replicates}")
    print(f"KS distance of X[1,1] to the Haar marginal at t={int(final['t'])}: {final['ks']:.4f}")
    print(f"Max orthogonality error: {summary['orthogonality_error'].max():.3e}")
    parameters = {"n": args.n, "T": args.steps, "replicates": args.replicates, "checkpoints": args.checkpoints}
    _finish(args, out, parameters, [summary_path, proxy_path])
    return EXIT_OK


def cmd_couple(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _check_common(args, parser)
    if not 0.0 < args.eps < math.pi:
        parser.error(f"--eps must lie in (0, pi), got {args.eps}")
    if args.Q <= 0:
        parser.error(f"--Q must be positive, got {args.Q}")
    if args.replicates < 1:
        parser.error(f"--replicates must be positive, got {args.replicates}")
    if args.init_distance < 0:
        parser.error(f"--init-distance must be non-negative, got {args.init_distance}")

    out = _output_dir(args)
    results = run_replicates(
        _couple_replicate,
        args.replicates,
        args.seed,
        "couple",
        args.threads,
        n=args.n,
        flavor=args.flavor,
        Q=args.Q,
        epsilon=args.eps,
        distance=0.0 if args.identical else args.init_distance,
    )
    traces = pd.concat([frame for frame, _ in results], ignore_index=True)
    outcomes = pd.DataFrame([row for _, row in results])
    exhausted = outcomes[outcomes["status"] == "exhausted"]
    finished = outcomes[outcomes["status"] != "exhausted"]
    rate = float(finished["coalesced"].mean()) if len(finished) else math.nan
    rates = pd.DataFrame(
        [
            {
                "flavor": args.flavor,
                "n": args.n,
                "Q": args.Q,
                "eps": args.eps,
                "replicates": args.replicates,
                "coalesced": int(finished["coalesced"].sum()),
                "exhausted": len(exhausted),
                "rate": rate,
            }
        ]
    )

    paths = [out / "traces.csv", out / "coalescence.csv", out / "coalescence_rate.csv"]
    for frame, path in zip((traces, outcomes, rates), paths):
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)

    print("Coupling complete")
    print(f"Coalescence rate: {rate:.4f} over {len(finished)} replicates")
    parameters = {
        "n": args.n,
        "flavor": args.flavor,
        "Q": args.Q,
        "eps": args.eps,
        "replicates": args.replicates,
        "init_distance": args.init_distance,
        "identical": args.identical,
    }
    _finish(args, out, parameters, paths)
    if len(exhausted):
        print("Coupling numerics exhausted for replicates:", file=sys.stderr)
        for row in exhausted.itertuples():
            print(
                f" - replicate {row.replicate}: {row.solver_failures} solver failures, {row.proposals} proposals",
                file=sys.stderr,
            )
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_phi(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    _check_common(args, parser)
    if args.samples < DEFAULT_CONFIG.min_samples:
        parser.error(f"--samples must be at least {DEFAULT_CONFIG.min_samples}, got {args.samples}")
    if not 0.0 < args.confidence < 1.0:
        parser.error(f"--confidence must lie in (0, 1), got {args.confidence}")
    if args.flavor == "d" and args.Q <= 0:
        parser.error(f"--Q must be positive, got {args.Q}")

    out = _output_dir(args)
    draws = run_replicates(
        _phi_replicate, args.samples, args.seed, "phi", args.threads, n=args.n, Q=args.Q, flavor=args.flavor
    )
    estimate = phi_from_samples(draws, args.n, args.confidence, args.seed)
    bounds = mixing_bound_report(args.n, estimate)
    report = {
        "schema_version": DEFAULT_CONFIG.schema_version,
        "flavor": args.flavor,
        "phi": report_payload(estimate),
        "bounds": report_payload(bounds),
    }
    paths = [write_json(report, out / "phi_report.json")]
    if args.dump_samples:
        samples_path = out / "sigma_min.csv"
        pd.DataFrame({"sample": np.arange(len(draws)), "sigma_min": draws}).to_csv(
            samples_path, index=False, float_format=FLOAT_FORMAT
        )
        paths.append(samples_path)

    print("phi estimate complete")
    print(f"phi (capped): {estimate.point:.6e}  uncapped: {estimate.uncapped_point:.6e}")
    print(f"{estimate.level:.4f}-quantile interval: [{estimate.uncapped_lower:.6e}, {estimate.uncapped_upper:.6e}]")
    print(f"phi-based upper bound: {bounds.phi_based_upper:.3e} steps")
    parameters = {
        "n": args.n,
        "flavor": args.flavor,
        "Q": args.Q,
        "samples": args.samples,
        "confidence": args.confidence,
    }
    _finish(args, out, parameters, paths)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.threads < 1:
        parser.error(f"--threads must be positive, got {args.threads}")
    if args.trials is not None and args.trials < 1:
        parser.error(f"--trials must be positive, got {args.trials}")

    out = _output_dir(args)
    names = sorted(set(args.only)) if args.only else sorted(ORACLES)
    failing: list[str] = []
    paths: list[Path] = []
    for name in names:
        logger.info("Running oracle '%s'", name)
        report = ORACLES[name](args.trials, replicate_stream(args.seed, f"verify:{name}", 0))
        paths.append(write_json(report_payload(report), out / f"{name}.json"))
        verdict = "ok" if report.passed else "FAIL"
        print(f"{name}: {verdict} ({report.violations}/{report.trials} violations, worst slack {report.worst_slack:.3e})")
        if not report.passed:
            failing.append(name)

    _finish(args, out, {"oracles": names, "trials": args.trials}, paths)
    if failing:
        print(f"Violated: {', '.join(failing)}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def cmd_clean(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    manifests = sorted({path for root in args.paths for path in Path(root).glob(f"**/{MANIFEST_NAME}")})
    removed: list[Path] = []
    kept: list[Path] = []
    for path in manifests:
        gone, left = RunManifest.load(path).purge(path.parent, force=args.force)
        removed.extend(gone)
        kept.extend(left)

    if removed:
        print("Removed the following run outputs:")
        for item in removed:
            print(f" - {item}")
    else:
        print("No run outputs found, nothing to remove.")
    if kept:
        print("Kept outputs modified since their run (pass --force to remove):", file=sys.stderr)
        for item in kept:
            print(f" - {item}", file=sys.stderr)
    return EXIT_OK


def _walk_replicate(index: int, rng: np.random.Generator, n: int, times: list[int]) -> list[dict[str, float]]:
    state = WalkState.identity(n)
    rows = []
    for t in times:
        state = run_walk(state, random_update_sequence(n, t - state.t, rng))
        rows.append(
            {
                "replicate": index,
                "t": t,
                "x11": float(state.X[0, 0]),
                "xnn": float(state.X[-1, -1]),
                "orthogonality_error": orthogonality_error(state.X),
            }
        )
    return rows


def _couple_replicate(
    index: int,
    rng: np.random.Generator,
    n: int,
    flavor: str,
    Q: float,
    epsilon: float,
    distance: float,
) -> tuple[pd.DataFrame, dict[str, object]]:
    X0 = haar_sample(n, rng)
    Y0 = X0.copy()
    if distance > 0:
        direction = project_skew(rng.standard_normal((n, n)))
        Y0 = X0 @ mat_exp_skew(distance * direction / np.linalg.norm(direction))
    spec_a, spec_b, trace = build_nm_coupling(X0, Y0, Q, epsilon, flavor, rng)
    row: dict[str, object] = {"replicate": index, "T": spec_a.T, "scaffold_final": float(trace.dist_scaffold[-1])}
    try:
        result = coalesce_attempt(spec_a, spec_b, rng)
    except CouplingNumericsExhausted as error:
        logger.warning("Replicate %d: %s", index, error)
        row.update(
            status="exhausted",
            coalesced=False,
            proposals=error.diagnostics["proposals"],
            solver_failures=error.diagnostics["failures"],
            final_gap=math.nan,
        )
        return trace_frame(trace, index), row
    trace = complete_trace(trace, spec_a, spec_b, result)
    row.update(
        status="coalesced" if result.coalesced else "separate",
        coalesced=result.coalesced,
        proposals=result.proposals,
        solver_failures=result.solver_failures,
        final_gap=trace.extras["final_gap"],
    )
    return trace_frame(trace, index), row


def _phi_replicate(index: int, rng: np.random.Generator, n: int, Q: float, flavor: str) -> float:
    return sample_sigma_min(n, Q, flavor, rng)


def _verify_telescoping(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    shapes = [(k, n) for k in range(1, 6) for n in range(2, 7)]
    per_shape = max(1, (trials or 1000) // len(shapes))
    return InequalityReport.merge(
        [telescoping_oracle(k, n, rng, per_shape) for k, n in shapes], "telescoping"
    )


def _verify_determinant(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    return InequalityReport.merge(
        [determinant_ratio_oracle(int(N), delta, rng, trials or 1000) for N, delta in oracle_sweep("determinant")],
        "determinant",
    )


def _verify_exponential(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    return InequalityReport.merge(
        [exponential_approximation_oracle(int(n), c, trials or 200, rng) for n, c in oracle_sweep("exponential")],
        "exponential",
    )


def _verify_tangent(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    return InequalityReport.merge(
        [tangent_closeness_oracle(int(n), c, trials or 200, rng) for n, c in oracle_sweep("tangent")],
        "tangent",
    )


def _verify_small_ball(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    return small_ball_sweep((trials or 1000) * 100, rng)


def _verify_sphere_density(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    samples = (trials or 1000) * 10
    return InequalityReport.merge(
        [sphere_conditional_density_check(10, k, samples, rng) for k in (0, 4, 8)], "sphere-density"
    )


def _verify_schedule_tail(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    return InequalityReport.merge(
        [lazy_tail_oracle(n, 1.0, 2.0, trials or 1000, rng) for n in (3, 4)], "schedule-tail"
    )


def _verify_path_closeness(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    return InequalityReport.merge(
        [path_closeness_oracle(n, 50, 1e-3, trials or 200, rng) for n in (3, 5)], "path-closeness"
    )


def _verify_jacobian_formula(trials: int | None, rng: np.random.Generator) -> InequalityReport:
    return InequalityReport.merge(
        [jacobian_formula_oracle(n, trials or 50, rng) for n in (3, 4)], "jacobian-formula"
    )


ORACLES: dict[str, Callable[[int | None, np.random.Generator], InequalityReport]] = {
    "telescoping": _verify_telescoping,
    "determinant": _verify_determinant,
    "exponential": _verify_exponential,
    "tangent": _verify_tangent,
    "small-ball": _verify_small_ball,
    "sphere-density": _verify_sphere_density,
    "schedule-tail": _verify_schedule_tail,
    "path-closeness": _verify_path_closeness,
    "jacobian-formula": _verify_jacobian_formula,
}


def _check_common(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if args.n < 2:
        parser.error(f"--n must be at least 2, got {args.n}")
    if args.threads < 1:
        parser.error(f"--threads must be positive, got {args.threads}")


def _output_dir(args: argparse.Namespace) -> Path:
    out = args.out if args.out is not None else Path("runs") / args.command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _finish(args: argparse.Namespace, out: Path, parameters: dict[str, object], paths: list[Path]) -> None:
    manifest = RunManifest(command=args.command, parameters={**parameters, "threads": args.threads}, seed=args.seed)
    manifest.record_outputs(paths, out)
    manifest.write(out / MANIFEST_NAME)
    print(f"Outputs written to {out}")
