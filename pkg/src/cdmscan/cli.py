"""Command-line client for the cdmscan service.

Subcommands mirror the service endpoints one to one.  By default requests
are executed in process against the same operations the HTTP service runs;
pass ``--server http://host:port`` to send them to a running instance
instead (paths are then resolved on the server).

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import sys

from pydantic import BaseModel

from cdmscan import __version__
from cdmscan.calib.model_io import ModelLoadError
from cdmscan.config import ConfigError
from cdmscan.service import ops, schemas


def _parse_tip_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated angles, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdmscan",
        description="Synthetic RFS shape-sensing pipeline: data generation, "
        "calibration training, evaluation, reconstruction.",
    )
    parser.add_argument("--version", action="version", version=f"cdmscan {__version__}")
    parser.add_argument(
        "--server",
        metavar="URL",
        default=None,
        help="send the request to a running service instead of executing in process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="run the trial protocol and write trial CSVs")
    p.add_argument("config", help="key=value config file ('-' for built-in defaults)")
    p.add_argument("out_dir", help="output directory for CSVs and the manifest")
    p.add_argument("--reps", type=int, default=3, help="repetitions per joint and direction")
    p.add_argument("--noise", choices=["on", "off"], default="on", help="sensor noise and drift")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument(
        "--scan-tips",
        type=_parse_tip_list,
        default=None,
        metavar="DEG,DEG,...",
        help="also write quasi-static scan fixtures at these tip angles",
    )

    p = sub.add_parser("train", help="train the calibration network on trial CSVs")
    p.add_argument("data_dir")
    p.add_argument("out_model")
    p.add_argument("--config", default=None, help="config file for geometry and train.* settings")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--val-fraction", type=float, default=None)

    p = sub.add_parser("eval", help="per-joint error table of a model over trial CSVs")
    p.add_argument("model")
    p.add_argument("data_dir")
    p.add_argument("--config", default=None)
    p.add_argument("--out-csv", default=None, help="also export the table as CSV")
    p.add_argument("--trials", default=None, help="comma-separated trial filenames to restrict to")

    p = sub.add_parser("reconstruct", help="reconstruct a shape from one scan CSV")
    p.add_argument("model")
    p.add_argument("scan_csv")
    p.add_argument("out_svg")
    p.add_argument("--config", default=None)

    p = sub.add_parser("bench", help="single-sample inference latency")
    p.add_argument("model")
    p.add_argument("--iterations", type=int, default=10_000)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


_ENDPOINTS = {
    "gen-data": "/datasets/generate",
    "train": "/models/train",
    "eval": "/models/evaluate",
    "reconstruct": "/reconstruction",
    "bench": "/benchmark",
}

_LOCAL_OPS = {
    "gen-data": (ops.generate_data, schemas.GenerateDataResponse),
    "train": (ops.train_model, schemas.TrainResponse),
    "eval": (ops.evaluate_model, schemas.EvaluateResponse),
    "reconstruct": (ops.reconstruct_scan, schemas.ReconstructResponse),
    "bench": (ops.benchmark_model, schemas.BenchResponse),
}


def _build_request(args: argparse.Namespace) -> BaseModel:
    if args.command == "gen-data":
        return schemas.GenerateDataRequest(
            out_dir=args.out_dir,
            config_path=None if args.config == "-" else args.config,
            reps=args.reps,
            noise=args.noise == "on",
            seed=args.seed,
            scan_tips_deg=args.scan_tips,
        )
    if args.command == "train":
        return schemas.TrainRequest(
            data_dir=args.data_dir,
            out_model=args.out_model,
            config_path=args.config,
            epochs=args.epochs,
            seed=args.seed,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            validation_fraction=args.val_fraction,
        )
    if args.command == "eval":
        trials = None
        if args.trials:
            trials = [t.strip() for t in args.trials.split(",") if t.strip()]
        return schemas.EvaluateRequest(
            model_path=args.model,
            data_dir=args.data_dir,
            config_path=args.config,
            trial_ids=trials,
            out_csv=args.out_csv,
        )
    if args.command == "reconstruct":
        return schemas.ReconstructRequest(
            model_path=args.model,
            scan_csv=args.scan_csv,
            out_svg=args.out_svg,
            config_path=args.config,
        )
    if args.command == "bench":
        return schemas.BenchRequest(model_path=args.model, iterations=args.iterations)
    raise AssertionError(f"unhandled command {args.command!r}")


def _dispatch(args: argparse.Namespace, request: BaseModel) -> BaseModel:
    if args.server:
        import httpx

        response = httpx.post(
            args.server.rstrip("/") + _ENDPOINTS[args.command],
            json=request.model_dump(),
            timeout=None,
        )
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise RuntimeError(f"server returned {response.status_code}: {detail}")
        _, response_model = _LOCAL_OPS[args.command]
        return response_model.model_validate(response.json())
    op, _ = _LOCAL_OPS[args.command]
    return op(request)


def _print_result(command: str, result: BaseModel) -> None:
    if command == "gen-data":
        assert isinstance(result, schemas.GenerateDataResponse)
        print(f"wrote {result.trials} trial CSVs ({result.rows_per_trial} rows each)")
        for extra in result.scan_files:
            print(f"scan fixture: {extra}")
        print(f"manifest: {result.manifest_path}")
    elif command == "train":
        assert isinstance(result, schemas.TrainResponse)
        print(f"model: {result.model_path}")
        print(f"history: {result.history_path}")
        print(
            f"trained {result.epochs} epochs on {result.n_train_samples} samples "
            f"({result.n_val_samples} held out in trials {', '.join(result.val_trial_ids) or '-'})"
        )
        if result.final_val_loss is not None:
            print(
                f"final val loss {result.final_val_loss:.6g}, "
                f"val R^2 {result.final_val_r2:.6g}, "
                f"val RMSE {result.final_val_rmse_mm:.4g} mm"
            )
    elif command == "eval":
        assert isinstance(result, schemas.EvaluateResponse)
        print(result.table)
        if result.report_csv:
            print(f"report CSV: {result.report_csv}")
    elif command == "reconstruct":
        assert isinstance(result, schemas.ReconstructResponse)
        print(f"svg: {result.svg_path}")
        print(f"shape CSV: {result.shape_csv_path}")
        print(f"max marker error vs ground truth: {result.max_marker_err_mm:.4g} mm")
    elif command == "bench":
        assert isinstance(result, schemas.BenchResponse)
        print(
            f"forward latency over {result.iterations} iterations: "
            f"mean {result.mean_ms:.4g} ms, median {result.median_ms:.4g} ms, "
            f"p99 {result.p99_ms:.4g} ms"
        )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from cdmscan.service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        request = _build_request(args)
        result = _dispatch(args, request)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ModelLoadError, FileNotFoundError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _print_result(args.command, result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
