"""Command-line entry point: ``malseq {ingest,build,run,chart,synth,gradcheck}``.

Exit codes: 0 success, 1 evaluation-stage failure, 2 input/IO failure,
3 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .errors import ConfigError, DirectoryUnreadable, InputError, MalseqError
from .ingest import ingest_directory, write_fragment
from .neural import CnnModel, RnnModel, gradient_check
from .pipeline import cmd_build, cmd_chart, cmd_run
from .sequences import generate_synthetic, write_dataset_csv

log = logging.getLogger("malseq")

EXIT_OK, EXIT_EVAL, EXIT_INPUT, EXIT_CONFIG = 0, 1, 2, 3
GRADCHECK_TOLERANCE = 1e-4


def _config(args) -> PipelineConfig:
    overrides = list(args.set or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return PipelineConfig.load(args.config, overrides)


def do_ingest(args, cfg) -> int:
    out = Path(args.out) if args.out else Path(args.out_dir) / f"fragment_{args.label}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        result = ingest_directory(args.reports_dir, args.label)
    except DirectoryUnreadable as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    write_fragment(result.sequences, out)
    skip_path = out.with_name(out.stem + ".skips.csv")
    skip_path.write_text(
        "file,error\n" + "".join(f"{s.file},{s.error}\n" for s in result.skipped), encoding="utf-8", newline=""
    )
    if not result.sequences:
        log.warning("no reports ingested from %s", args.reports_dir)
    log.info("ingested %d reports, skipped %d -> %s", len(result.sequences), len(result.skipped), out)
    return EXIT_OK


def do_build(args, cfg) -> int:
    outcome = cmd_build(args.benign, args.malware, cfg, args.out_dir)
    log.info("dataset: %d rows, vocabulary %d tokens", len(outcome.dataset), outcome.vocab_size)
    return EXIT_OK


def do_run(args, cfg) -> int:
    outcome = cmd_run(args.dataset, cfg, args.out_dir)
    sys.stdout.write((Path(args.out_dir) / "report.txt").read_text(encoding="utf-8").split("\n\n")[0] + "\n")
    return EXIT_EVAL if outcome.failed else EXIT_OK


def do_chart(args, cfg) -> int:
    out = Path(args.out) if args.out else Path(args.out_dir) / "report.svg"
    out.parent.mkdir(parents=True, exist_ok=True)
    n = cmd_chart(args.report_csv, out, args.title or "")
    log.info("chart with %d methods -> %s", n, out)
    return EXIT_OK


def do_synth(args, cfg) -> int:
    out = Path(args.out) if args.out else Path(args.out_dir) / "synthetic.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    ds = generate_synthetic(args.n_per_class, args.length or cfg["length"], args.overlap, cfg["seed"])
    write_dataset_csv(ds, out)
    log.info("synthetic dataset: %d rows -> %s", len(ds), out)
    return EXIT_OK


def do_gradcheck(args, cfg) -> int:
    archs = ("cnn", "rnn") if args.arch == "both" else (args.arch,)
    worst = 0.0
    for s in range(args.seeds):
        seed = cfg["seed"] + s
        rng = np.random.default_rng(seed)
        vocab = 10
        codes = rng.integers(0, vocab, size=(args.batch, args.length))
        labels = rng.integers(0, 2, size=args.batch)
        for arch in archs:
            if arch == "cnn":
                model = CnnModel(vocab, d_emb=args.d_emb, n_filters=3, width=3, seed=seed, init_scale=0.5)
            else:
                model = RnnModel(vocab, d_emb=args.d_emb, d_hidden=args.d_hidden, seed=seed, init_scale=0.5)
            err = gradient_check(model, codes, labels)
            worst = max(worst, err)
            print(f"{arch} seed={seed} max_rel_error={err:.3e}")
    ok = worst <= GRADCHECK_TOLERANCE
    print(f"{'PASS' if ok else 'FAIL'} worst={worst:.3e} tolerance={GRADCHECK_TOLERANCE:.0e}")
    return EXIT_OK if ok else EXIT_EVAL


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags with suppressed defaults so that
    # `malseq --seed 3 run ...` and `malseq run --seed 3 ...` behave the same
    def d(value):
        return argparse.SUPPRESS if suppress else value

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=d(None), help="master seed (overrides the config file)")
    common.add_argument("--config", default=d(None), help="flat key = value configuration file")
    common.add_argument("--out-dir", default=d("out"), help="directory for outputs (default: ./out)")
    common.add_argument("--set", action="append", default=d(None), metavar="KEY=VALUE", help="override one config key")
    common.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return common


def build_parser() -> argparse.ArgumentParser:
    top = _global_flags(suppress=False)
    common = _global_flags(suppress=True)

    parser = argparse.ArgumentParser(prog="malseq", description=__doc__.splitlines()[0], parents=[top])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="extract root-process call sequences from reports")
    p.add_argument("reports_dir")
    p.add_argument("--label", type=int, choices=(0, 1), required=True)
    p.add_argument("--out", help="fragment CSV path (default: <out-dir>/fragment_<label>.csv)")
    p.set_defaults(func=do_ingest)

    p = sub.add_parser("build", parents=[common], help="encode fragments into the dataset CSV")
    p.add_argument("--benign", required=True, help="goodware fragment CSV")
    p.add_argument("--malware", required=True, help="malware fragment CSV")
    p.set_defaults(func=do_build)

    p = sub.add_parser("run", parents=[common], help="train, tune and evaluate every enabled method")
    p.add_argument("dataset")
    p.set_defaults(func=do_run)

    p = sub.add_parser("chart", parents=[common], help="grouped bar chart (SVG) of a report CSV")
    p.add_argument("report_csv")
    p.add_argument("--out")
    p.add_argument("--title")
    p.set_defaults(func=do_chart)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic dataset CSV")
    p.add_argument("--n-per-class", type=int, default=1000)
    p.add_argument("--overlap", type=float, default=0.0)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=do_synth)

    p = sub.add_parser("gradcheck", parents=[common], help="compare backprop with finite differences")
    p.add_argument("--arch", choices=("cnn", "rnn", "both"), default="both")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--d-emb", type=int, default=4)
    p.add_argument("--d-hidden", type=int, default=3)
    p.add_argument("--length", type=int, default=6)
    p.add_argument("--batch", type=int, default=4)
    p.set_defaults(func=do_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    t0 = time.perf_counter()
    try:
        cfg = _config(args)
        code = args.func(args, cfg)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except InputError as exc:
        log.error("input error: %s", exc)
        return EXIT_INPUT
    except (MalseqError, ValueError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_EVAL if args.command in ("run", "gradcheck") else EXIT_INPUT
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


if __name__ == "__main__":
    sys.exit(main())
