"""Command-line front end.

``bmtomo run --experiment ... `` executes an experiment (the ``run``
word may be omitted); ``bmtomo serve`` starts the HTTP service.  With
``--server URL`` the run command posts the request to a running
service instead of computing in-process and materializes the returned
record locally, so both paths produce the same artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .harness import (
    EXPERIMENTS,
    EstimatorSpec,
    ExperimentConfig,
    ResultRecord,
    emit_plotdata,
    run_experiment,
)
from .measurement import DesignMode
from .qstate import TargetKind


def _parse_int_list(text: str) -> tuple:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _parse_seeds(text: str) -> tuple:
    """Either a seed count ('10' means seeds 0..9) or an explicit
    comma-separated list ('3,7,11')."""
    if "," in text:
        return _parse_int_list(text)
    try:
        count = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a count or list, got {text!r}")
    if count < 1:
        raise argparse.ArgumentTypeError("seed count must be >= 1")
    return tuple(range(count))


def _parse_lambda(text: str):
    if text == "m/2":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'm/2', got {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError("lambda must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmtomo",
        description="Low-rank quantum-state estimation benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    run.add_argument(
        "--n", type=_parse_int_list, default=(2,),
        help="qubit count; a comma list is allowed for timing_table",
    )
    run.add_argument(
        "--target", default="rank2", choices=[k.value for k in TargetKind]
    )
    run.add_argument(
        "--estimator", action="append", dest="estimators", metavar="SPEC",
        help="bm:<r> (r an integer or d) or prob; repeatable",
    )
    run.add_argument("--m", type=int, default=None)
    run.add_argument("--m-grid", type=_parse_int_list, default=None)
    run.add_argument(
        "--seeds", type=_parse_seeds, default=tuple(range(10)),
        help="seed count, or comma-separated explicit seeds",
    )
    run.add_argument("--iterations", type=int, default=10_000)
    run.add_argument("--burnin", type=int, default=2_000)
    run.add_argument("--eta", type=float, default=1e-5)
    run.add_argument("--beta", type=float, default=1e3)
    run.add_argument("--theta", type=float, default=None)
    run.add_argument(
        "--lambda", dest="lam", type=_parse_lambda, default=None,
        help="likelihood weight; a number or the literal m/2 (default)",
    )
    run.add_argument(
        "--design", default=DesignMode.WHOLE_SYSTEM.value,
        choices=[m.value for m in DesignMode],
    )
    run.add_argument(
        "--noise-convention", default="algorithm1", choices=("algorithm1", "eq7")
    )
    run.add_argument("--out", default=None, metavar="DIR")
    run.add_argument("--workers", type=int, default=1, metavar="K")
    run.add_argument(
        "--server", default=None, metavar="URL",
        help="post the run to a bmtomo service instead of computing in-process",
    )

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    if not args.estimators:
        raise ValueError("at least one --estimator is required")
    return ExperimentConfig(
        experiment=args.experiment,
        n=args.n,
        estimators=tuple(EstimatorSpec.parse(e) for e in args.estimators),
        target=args.target,
        m=args.m,
        m_grid=args.m_grid,
        seeds=args.seeds,
        iterations=args.iterations,
        burnin=args.burnin,
        eta=args.eta,
        beta=args.beta,
        theta=args.theta,
        lam=args.lam,
        design=args.design,
        noise_convention=args.noise_convention,
        out=None,  # files are written after the record exists
        workers=args.workers,
    )


def _run_remote(args: argparse.Namespace) -> ResultRecord:
    import httpx

    payload = {
        "experiment": args.experiment,
        "n": list(args.n),
        "estimators": list(args.estimators),
        "target": args.target,
        "m": args.m,
        "m_grid": None if args.m_grid is None else list(args.m_grid),
        "seeds": list(args.seeds),
        "iterations": args.iterations,
        "burnin": args.burnin,
        "eta": args.eta,
        "beta": args.beta,
        "theta": args.theta,
        "lam": args.lam if args.lam is not None else "m/2",
        "design": args.design,
        "noise_convention": args.noise_convention,
        "workers": args.workers,
    }
    url = args.server.rstrip("/") + "/experiments/run"
    response = httpx.post(url, json=payload, timeout=None)
    response.raise_for_status()
    data = response.json()["record"]
    return ResultRecord(
        config=data["config"],
        version=data["version"],
        timestamp=data["timestamp"],
        rows=data["rows"],
        traces=data["traces"],
        timing=data["timing"],
        slopes=data["slopes"],
    )


def _print_summary(record: ResultRecord, paths) -> None:
    print(f"experiment: {record.config['experiment']}")
    print(f"rows: {len(record.rows)}")
    if record.slopes:
        for label, slope in sorted(record.slopes.items()):
            print(f"slope[{label}]: {slope:.4f}")
    if record.timing:
        for row in record.timing:
            print(
                f"timing n={row['n']} {row['estimator']}: "
                f"{row['median_step_seconds'] * 1e6:.1f} us/iter (median)"
            )
    diverged = [r for r in record.rows if r.get("diverged_at") is not None]
    if diverged:
        print(f"diverged runs: {len(diverged)}")
    for path in paths:
        print(f"wrote {path}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in ("run", "serve", "-h", "--help"):
        argv = ["run"] + argv
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    try:
        if args.server is not None:
            record = _run_remote(args)
        else:
            record = run_experiment(_config_from_args(args))
    except ValueError as exc:
        parser.error(str(exc))
    paths = emit_plotdata(record, args.out) if args.out else []
    _print_summary(record, paths)
    return 0


if __name__ == "__main__":
    sys.exit(main())
