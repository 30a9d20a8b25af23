"""Command-line entry point: calibrate, gen-dataset, measure, solve, eval, serve.

Exit codes: 0 success, 1 usage error (bad flags, unknown subcommand), 2 data
error (bad files, unparseable inputs, numerical failure). Progress and
diagnostics go to stderr; results go to files or stdout only, so output is
safely scriptable. Environment variables BODYFORGE_ASSET, BODYFORGE_BINS,
and BODYFORGE_LEXICON override the default artifact paths.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import BodyForgeError, InputError

USAGE_EXIT = 1
DATA_EXIT = 2


class _UsageError(Exception):
    """Flag combinations argparse cannot express (mutually required flags)."""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this contract reserves 2 for data
    errors, so usage failures are remapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _progress(message: str) -> None:
    print(message, file=sys.stderr, flush=True)


def _load_asset(path: str | None):
    from .bodymodel import builtin_asset, load_asset

    path = path or os.environ.get("BODYFORGE_ASSET")
    return load_asset(path) if path else builtin_asset()


def _load_bins(path: str | None):
    from .labeling import default_bins, load_bins

    path = path or os.environ.get("BODYFORGE_BINS")
    return load_bins(path) if path else default_bins()


def _load_lexicon(path: str | None):
    from .textlang import default_lexicon, load_lexicon

    path = path or os.environ.get("BODYFORGE_LEXICON")
    return load_lexicon(path) if path else default_lexicon()


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bodyforge", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("calibrate", parents=[], help="compute quantile bins over sampled avatars")
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quantiles", type=float, nargs=4, default=None)
    p.add_argument("--asset", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-dataset", help="generate description/shape JSONL corpora")
    p.add_argument("--count", type=int, required=True, help="training entries")
    p.add_argument("--eval-count", type=int, default=0, help="evaluation entries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--asset", default=None)
    p.add_argument("--bins", default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--paraphrase-url", default=None)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("measure", help="measure one avatar")
    p.add_argument("--beta", default=None, help='JSON list, e.g. "[0,0,0,0,0,0,0,0,0,0]"')
    p.add_argument("--beta-file", default=None)
    p.add_argument("--asset", default=None)
    p.add_argument("--bins", default=None, help="also print labels using these bins")
    p.add_argument("--labels", action="store_true", help="include labels (default bins)")

    p = sub.add_parser("solve", help="solve a description into a shape vector")
    p.add_argument("text")
    p.add_argument("--asset", default=None)
    p.add_argument("--bins", default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="write beta JSON here")
    p.add_argument("--obj", default=None, help="write Wavefront-style mesh here")

    p = sub.add_parser("eval", help="score a prediction JSONL file")
    p.add_argument("--pred", required=True)
    p.add_argument("--asset", default=None)
    p.add_argument("--bins", default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--report", default=None, help="write the text report here (default stdout)")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--asset", default=None)
    p.add_argument("--bins", default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--solver-seed", type=int, default=0)
    p.add_argument("--cors-origin", action="append", default=[])

    return parser


def _cmd_calibrate(args) -> int:
    from .labeling import DEFAULT_QUANTILES, calibrate_bins, save_bins

    asset = _load_asset(args.asset)
    quantiles = tuple(args.quantiles) if args.quantiles else DEFAULT_QUANTILES
    _progress(f"calibrating over {args.samples} samples (seed {args.seed})")
    bins = calibrate_bins(asset, args.samples, quantiles=quantiles, seed=args.seed)
    save_bins(bins, args.out)
    _progress(f"wrote {args.out}")
    return 0


def _cmd_gen_dataset(args) -> int:
    from .datasetgen import (
        DatasetStats,
        HttpParaphraseProvider,
        generate_dataset,
        write_jsonl,
    )

    asset = _load_asset(args.asset)
    bins = _load_bins(args.bins)
    lexicon = _load_lexicon(args.lexicon)
    provider = (
        HttpParaphraseProvider(args.paraphrase_url) if args.paraphrase_url else None
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    total = args.count + args.eval_count
    stats = DatasetStats()
    stream = generate_dataset(
        asset, bins, lexicon, total, args.seed, paraphrase=provider, stats=stats
    )

    def take(n):
        for _ in range(n):
            entry = next(stream)
            if entry.index is not None and (entry.index + 1) % 2000 == 0:
                _progress(f"  generated {entry.index + 1}/{total}")
            yield entry

    train_path = out_dir / "train.jsonl"
    n_train = write_jsonl(take(args.count), train_path)
    _progress(f"wrote {train_path} ({n_train} entries)")
    if args.eval_count:
        eval_path = out_dir / "eval.jsonl"
        n_eval = write_jsonl(take(args.eval_count), eval_path)
        _progress(f"wrote {eval_path} ({n_eval} entries)")
    if provider is not None:
        _progress(
            "paraphrase: "
            f"{stats.paraphrase_attempts} attempts, "
            f"{stats.paraphrase_rejected} rejected, "
            f"{stats.paraphrase_failures} failures"
        )
    return 0


def _read_beta(args) -> list[float]:
    if (args.beta is None) == (args.beta_file is None):
        raise _UsageError("exactly one of --beta / --beta-file is required")
    if args.beta_file is not None and not Path(args.beta_file).exists():
        raise InputError(f"beta file not found: {args.beta_file}")
    raw = args.beta if args.beta is not None else Path(args.beta_file).read_text()
    try:
        values = json.loads(raw)
    except ValueError as exc:
        raise InputError(f"beta is not valid JSON: {exc}") from exc
    if not isinstance(values, list):
        raise InputError("beta must be a JSON array of 10 numbers")
    return values


def _cmd_measure(args) -> int:
    from .bodymodel import ShapeParams, evaluate_mesh
    from .labeling import assign_labels
    from .measure import measure_all, report_dict

    asset = _load_asset(args.asset)
    sp = ShapeParams(_read_beta(args))
    mv = measure_all(asset, evaluate_mesh(asset, sp))
    out: dict = {"measurements": report_dict(mv)}
    if args.bins or args.labels:
        bins = _load_bins(args.bins)
        out["labels"] = assign_labels(bins, mv)
    print(json.dumps(out, indent=1))
    return 0


def _cmd_solve(args) -> int:
    from .solver import SolveConfig, mesh_to_obj, solve_description
    from .bodymodel import evaluate_mesh

    asset = _load_asset(args.asset)
    bins = _load_bins(args.bins)
    lexicon = _load_lexicon(args.lexicon)
    result, constraints, _ = solve_description(
        asset, bins, lexicon, args.text, SolveConfig(seed=args.seed)
    )
    beta_3 = [round(float(v), 3) for v in result.beta.values]
    _progress(
        f"solved {len(constraints)} constraint(s); satisfied={result.satisfied} "
        f"objective={result.objective:.3e} iterations={result.iterations}"
    )
    if args.out:
        Path(args.out).write_text(json.dumps(beta_3) + "\n", encoding="utf-8")
        _progress(f"wrote {args.out}")
    if args.obj:
        mesh = evaluate_mesh(asset, result.beta)
        Path(args.obj).write_text(
            mesh_to_obj(mesh.vertices, mesh.faces), encoding="utf-8"
        )
        _progress(f"wrote {args.obj}")
    if not args.out and not args.obj:
        print(json.dumps(beta_3))
    return 0


def _cmd_eval(args) -> int:
    from .losseval import evaluate_predictions, read_predictions, render_report

    asset = _load_asset(args.asset)
    bins = _load_bins(args.bins)
    lexicon = _load_lexicon(args.lexicon)
    records = read_predictions(args.pred)
    _progress(f"evaluating {len(records)} records")
    result = evaluate_predictions(asset, bins, lexicon, records)
    text = render_report(result)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
        _progress(f"wrote {args.report}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_serve(args) -> int:
    from .service import ServiceConfig, run_server

    config = ServiceConfig(
        asset_path=args.asset or os.environ.get("BODYFORGE_ASSET"),
        bins_path=args.bins or os.environ.get("BODYFORGE_BINS"),
        lexicon_path=args.lexicon or os.environ.get("BODYFORGE_LEXICON"),
        solver_seed=args.solver_seed,
        cors_origins=tuple(args.cors_origin),
    )
    _progress(f"serving on {args.host}:{args.port}")
    run_server(config, host=args.host, port=args.port)
    return 0


_COMMANDS = {
    "calibrate": _cmd_calibrate,
    "gen-dataset": _cmd_gen_dataset,
    "measure": _cmd_measure,
    "solve": _cmd_solve,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"bodyforge {args.command}: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except BodyForgeError as exc:
        print(f"bodyforge {args.command}: {exc}", file=sys.stderr)
        return DATA_EXIT


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
