"""Command-line entry point: ``agar <verb> [options] [key=value ...]``.

Verbs: ``gen-data``, ``train``, ``eval``, ``explain``, ``grad-check``.
Exit status is 0 on success, 1 for invalid input (bad option, unknown
config key, malformed file) and 2 for numeric failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import checks, data, train
from . import tensor as tn
from .config import RunConfig, desk_config, parse_overrides
from .errors import AgarError, ConfigError, NumericError, ValidationError
from .metrics import write_metrics_csv

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2
GRAD_TOLERANCE = 1e-4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise ConfigError(message)


def _base_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else desk_config()
    return cfg.with_overrides(parse_overrides(args.overrides))


def _cmd_gen_data(args) -> int:
    extra = {"N": args.points, "T": args.frames}
    if args.overrides:
        raise ConfigError(f"gen-data takes no key=value overrides: {args.overrides}")
    seqs = data.make_dataset(args.generator, args.count, seed=args.seed, split=args.split, **extra)
    paths = data.save_dataset(seqs, args.out)
    print(f"wrote {len(paths)} sequences to {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    cfg = _base_config(args)
    seqs = data.load_dataset(args.data)
    run_dir = Path(args.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    manifests = {"data": str(Path(args.data).resolve()), "sequences": [s.name for s in seqs]}
    (run_dir / "manifests.json").write_text(json.dumps(manifests, indent=2) + "\n")

    def progress(row):
        print(f"iter {row.iteration:>7d}  loss {row.loss:.6g}  cd {row.cd:.6g}  emd {row.emd:.6g}", flush=True)

    try:
        train.train(cfg, seqs, run_dir=run_dir, progress=None if args.quiet else progress)
    except NumericError as exc:
        print(f"error: {exc}; last good checkpoint in {run_dir}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"checkpoint written to {run_dir / train.CHECKPOINT_NAME}")
    return EXIT_OK


def _table(title: str, summary: dict, baseline_name: str) -> str:
    lines = [title, f"{'method':<12} {'CD':>12} {'EMD':>12} {'CD Top 5%':>12}"]
    for label, key in (("model", "model"), (baseline_name, "baseline")):
        m = summary[key]
        lines.append(f"{label:<12} {m['cd']:>12.6g} {m['emd']:>12.6g} {m['cd_top5']:>12.6g}")
    return "\n".join(lines)


def _cmd_eval(args) -> int:
    model = train.load_model(args.run_dir)
    seqs = data.load_dataset(args.data)
    out = Path(args.out) if args.out else Path(args.run_dir) / "eval"
    out.mkdir(parents=True, exist_ok=True)
    short = train.eval_short_term(model, seqs)
    long = train.eval_long_term(model, seqs)
    write_metrics_csv(out / "short_term.csv", short.rows)
    write_metrics_csv(out / "short_term_copy_last.csv", short.baseline)
    write_metrics_csv(out / "long_term.csv", long.rows)
    write_metrics_csv(out / "long_term_copy_frozen.csv", long.baseline)
    summary = {"short_term": short.summary(), "long_term": long.summary()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(_table("short-term (teacher forced)", summary["short_term"], "copy-last"))
    print(_table("long-term (rollout)", summary["long_term"], "copy-frozen"))
    return EXIT_OK


def _cmd_explain(args) -> int:
    model = train.load_model(args.run_dir)
    seqs = data.load_dataset(args.data)
    if args.sequence:
        seqs = [s for s in seqs if s.name == args.sequence]
        if not seqs:
            raise ConfigError(f"sequence {args.sequence!r} not found in {args.data}")
    seq = seqs[0]
    out = Path(args.out) if args.out else Path(args.run_dir) / "explain" / seq.name
    out.mkdir(parents=True, exist_ok=True)
    states = model.initial_states()
    worst = 0.0
    with tn.no_grad():
        for t in range(seq.T - 1):
            step = model.step(seq.frames[t], states)
            states = step.states
            report = model.explain(seq.frames[t], step)
            report.write_csv(out / f"frame_{t:04d}.csv")
            if model.config.hidden_activation == "identity":
                worst = max(worst, report.residual())
    print(f"wrote {seq.T - 1} attention reports to {out}")
    if model.config.hidden_activation == "identity":
        print(f"max reconstruction residual {worst:.3g}")
    return EXIT_OK


def _cmd_grad_check(args) -> int:
    cfg = checks.toy_config(seed=args.seed).with_overrides(parse_overrides(args.overrides))
    err = checks.toy_grad_check(cfg, seed=args.seed, samples=args.samples)
    status = "ok" if err <= GRAD_TOLERANCE else "FAILED"
    print(f"max relative error {err:.3e} ({status}, tolerance {GRAD_TOLERANCE:g})")
    return EXIT_OK if err <= GRAD_TOLERANCE else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="agar", description="Point-cloud sequence prediction with an attention-gated graph-RNN.")
    sub = p.add_subparsers(dest="verb", metavar="verb", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen-data", help="write a synthetic dataset")
    g.add_argument("--generator", choices=["rigid", "articulated"], default="rigid")
    g.add_argument("--count", type=int, default=64)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--points", type=int, default=128)
    g.add_argument("--frames", type=int, default=20)
    g.add_argument("--split", default="train")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_data)

    t = sub.add_parser("train", help="train a model and write a run directory")
    t.add_argument("--config", help="JSON config (default: desk-scale settings)")
    t.add_argument("--data", required=True, help="dataset directory or manifest")
    t.add_argument("--run-dir", required=True)
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="short- and long-term metrics against copy baselines")
    e.add_argument("--run-dir", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out")
    e.set_defaults(func=_cmd_eval)

    x = sub.add_parser("explain", help="per-point attention and per-level motion export")
    x.add_argument("--run-dir", required=True)
    x.add_argument("--data", required=True)
    x.add_argument("--sequence")
    x.add_argument("--out")
    x.set_defaults(func=_cmd_explain)

    c = sub.add_parser("grad-check", help="finite-difference check of all gradients on a toy problem")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=64)
    c.set_defaults(func=_cmd_grad_check)

    for sp in (g, t, e, x, c):
        sp.add_argument("overrides", nargs="*", help="config overrides as key=value")
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.verb != "gen-data":
            # reject unknown keys before any work starts
            parse_overrides(args.overrides)
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AgarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
