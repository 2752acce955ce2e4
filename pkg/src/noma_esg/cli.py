"""Command-line entry point: ``noma-esg {analytic,simulate,figure,verify}``.

Exit codes: 0 on success, 1 for configuration errors, 2 when the
acceptance suite reports a failure.
"""

import argparse
import sys
from pathlib import Path

from .harness import emit_csv, figure_preset, load_config, run_scenario, PRESETS
from .receivers import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ACCEPTANCE = 2


def _print_report(report, out=None):
    out = sys.stdout if out is None else out
    print(f"# {report.name}", file=out)
    for row in report.rows:
        sim = "" if row.trials == 0 else (
            f" noma_sim={row.noma_sim:.6g} oma_sim={row.oma_sim:.6g}"
            f" esg_sim={row.esg_sim:.6g} +/- {row.ci_halfwidth:.3g}"
        )
        print(
            f"{row.sweep_name}={row.sweep_value:g} [{row.scheme_pair}]"
            f" esg_analytic={row.esg_analytic:.6g}{sim}",
            file=out,
        )


def _load(args):
    return load_config(args.config, seed=args.seed, trials=args.trials)


def cmd_analytic(args):
    cfg = _load(args)
    report = run_scenario(cfg, simulate=False)
    _emit(report, args.out or cfg.out_path)
    return EXIT_OK


def cmd_simulate(args):
    cfg = _load(args)
    report = run_scenario(cfg, threads=args.threads)
    _emit(report, args.out or cfg.out_path)
    return EXIT_OK


def cmd_figure(args):
    out_dir = Path(args.out or f"{args.preset}_csv")
    for cfg in figure_preset(args.preset):
        cfg = cfg.with_(
            **{k: v for k, v in (("seed", args.seed), ("trials", args.trials)) if v is not None}
        )
        report = run_scenario(cfg, threads=args.threads, simulate=not args.analytic_only)
        path = out_dir / f"{cfg.name}.csv"
        emit_csv(report, path)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(args):
    from .acceptance import run_all

    results = run_all(threads=args.threads, echo=print)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def _emit(report, out):
    if out:
        emit_csv(report, out)
        print(f"wrote {out}")
    else:
        _print_report(report)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="noma-esg",
        description="Ergodic sum-rate gain of uplink NOMA over OMA: closed forms and Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="flat TOML experiment file")
        p.add_argument("--seed", type=int, default=None, help="override the RNG seed")
        p.add_argument("--trials", type=int, default=None, help="override the trial count")
        p.add_argument("--out", default=None, help="output CSV (or directory for figure)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for trials")

    common(sub.add_parser("analytic", help="evaluate the closed forms for a config"))
    common(sub.add_parser("simulate", help="run the Monte Carlo for a config"))
    fig = sub.add_parser("figure", help="emit the CSVs of a figure/table preset")
    fig.add_argument("preset", choices=sorted(PRESETS))
    fig.add_argument("--analytic-only", action="store_true", help="skip the Monte Carlo")
    common(fig, config=False)
    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--threads", type=int, default=1)
    return parser


COMMANDS = {
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "figure": cmd_figure,
    "verify": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
