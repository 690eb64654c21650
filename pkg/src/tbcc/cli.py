"""Command-line entry points: train, eval, state-analysis, golden."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import config as cfgmod
from .ensemble import load_ensemble, save_ensemble, train_ensemble
from .harness import (
    emit_results,
    per_state_analysis,
    run_experiment,
    write_state_csv,
    write_state_json,
)
from .reference import generate_golden


def _add_common(p: argparse.ArgumentParser, need_config: bool = True) -> None:
    p.add_argument("--config", required=need_config, help="YAML experiment config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out", required=True, help="output directory")


def cmd_train(args: argparse.Namespace) -> int:
    doc = cfgmod.load_yaml(args.config)
    code = cfgmod.code_config(doc)
    ens_cfg = cfgmod.ensemble_config(doc)
    train_cfg = cfgmod.train_config(doc)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    ensemble = train_ensemble(
        code.trellis(), ens_cfg, train_cfg, code.crc(), code.message_bits, seed,
        verbose=not args.quiet,
    )
    save_ensemble(ensemble, args.out)
    print(f"ensemble for {code.label} written to {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    doc = cfgmod.load_yaml(args.config)
    cfg = cfgmod.experiment_config(
        doc,
        seed=args.seed,
        decoders=tuple(args.decoders.split(",")) if args.decoders else None,
        min_frame_errors=args.min_errors,
        max_trials=args.max_trials,
        batch_size=args.batch_size,
        noiseless=True if args.noiseless else None,
    )
    ensemble = None
    if any(d in ("wcvae", "gated_wcvae") for d in cfg.decoders):
        if not args.ensemble:
            print("error: selected decoders need --ensemble <dir>", file=sys.stderr)
            return 2
        ensemble = load_ensemble(args.ensemble)
    records = run_experiment(cfg, ensemble, verbose=not args.quiet)
    paths = emit_results(records, args.out)
    print(f"wrote {paths['csv']} and {paths['json']}")
    if not args.no_figures:
        from .plotting import plot_fer, plot_va_runs

        out = Path(args.out)
        title = f"TBCC {cfg.code.label}"
        plot_fer(records, out / "fer.png", title)
        plot_va_runs(records, out / "va_runs.png", title)
        print(f"wrote {out / 'fer.png'} and {out / 'va_runs.png'}")
    return 0


def cmd_state_analysis(args: argparse.Namespace) -> int:
    doc = cfgmod.load_yaml(args.config)
    code = cfgmod.code_config(doc)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    ensemble = load_ensemble(args.ensemble)
    states = None
    if args.states:
        states = [int(s) for s in args.states.split(",")]
    records = per_state_analysis(
        code,
        ensemble,
        snr_db=args.snr,
        errors_per_state=args.errors_per_state,
        states=states,
        seed=seed,
        verbose=not args.quiet,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_state_csv(records, out / "per_state.csv")
    write_state_json(records, out / "per_state.json")
    print(f"wrote {out / 'per_state.csv'} and {out / 'per_state.json'}")
    if not args.no_figures:
        from .plotting import plot_state_fer

        plot_state_fer(records, out / "per_state.png", f"TBCC {code.label} @ {args.snr:+.1f} dB")
        print(f"wrote {out / 'per_state.png'}")
    return 0


def cmd_golden(args: argparse.Namespace) -> int:
    written = generate_golden(args.out)
    for p in written:
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tbcc",
        description="Tail-biting convolutional code toolkit: training, evaluation, analysis",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an expert ensemble, write it to a directory")
    _add_common(p)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="Monte Carlo FER/complexity sweep")
    _add_common(p)
    p.add_argument("--ensemble", help="trained ensemble directory")
    p.add_argument("--decoders", help="comma-separated decoder list")
    p.add_argument("--min-errors", type=int, default=None, help="frame errors per point")
    p.add_argument("--max-trials", type=int, default=None, help="trial cap per point")
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--noiseless", action="store_true", help="disable channel noise")
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("state-analysis", help="per-termination-state FER of experts vs baseline")
    _add_common(p)
    p.add_argument("--ensemble", required=True)
    p.add_argument("--snr", type=float, default=0.0)
    p.add_argument("--errors-per-state", type=int, default=250)
    p.add_argument("--states", help="comma-separated state subset (default: all)")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_state_analysis)

    p = sub.add_parser("golden", help="regenerate the golden oracle fixtures")
    p.add_argument("--out", required=True, help="fixture directory")
    p.set_defaults(func=cmd_golden)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
