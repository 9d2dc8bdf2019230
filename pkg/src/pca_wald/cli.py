"""Command-line interface.

Subcommands mirror the experiment modes: ``simulate`` (ks_gaussian /
ks_chisq / coverage), ``bias-sweep``, ``perturb-check``, ``opnorm-check``,
and ``assumptions``.  Configuration comes from a single JSON or TOML file;
``--seed``, ``--reps`` and ``--out-dir`` override it.  Exit code 0 on
completion, 2 on precondition failure.  ``PCA_WALD_THREADS`` caps parallelism.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

from pca_wald import covmodel, mc
from pca_wald.errors import PcaWaldError
from pca_wald.inference import check_assumptions


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON or TOML experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override base_seed")
    parser.add_argument("--reps", type=int, default=None, help="override replication count")
    parser.add_argument("--out-dir", default=None, help="override output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pca-wald",
        description="Monte Carlo harness for Wald-statistic inference on PCA projectors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="ks_gaussian / ks_chisq / coverage runs")
    _add_common(p_sim)
    p_sim.add_argument("--mode", choices=mc.SIMULATE_MODES, default=None,
                       help="override the config's mode")

    for name, mode in (("bias-sweep", "bias_sweep"),
                       ("perturb-check", "perturb_check"),
                       ("opnorm-check", "opnorm_check")):
        p_cmd = sub.add_parser(name, help=f"run the {mode} mode")
        _add_common(p_cmd)
        p_cmd.set_defaults(forced_mode=mode)

    p_ass = sub.add_parser("assumptions", help="print the assumption report as JSON")
    p_ass.add_argument("--config", required=True)
    p_ass.add_argument("--gamma", type=float, default=0.5)
    p_ass.add_argument("--c-proxy", type=float, default=1.0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "assumptions":
            return _run_assumptions(args)
        config = mc.load_config(args.config)
        forced = getattr(args, "forced_mode", None) or getattr(args, "mode", None)
        if forced is not None:
            config = replace(config, mode=forced)
        if args.command == "simulate" and config.mode not in mc.SIMULATE_MODES:
            raise PcaWaldError(
                f"simulate expects one of {mc.SIMULATE_MODES}, config says {config.mode!r}")
        config = config.with_overrides(seed=args.seed, reps=args.reps, out_dir=args.out_dir)
        summary = mc.run(config)
        print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
        return 0
    except PcaWaldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _run_assumptions(args) -> int:
    config = mc.load_config(args.config)
    model = covmodel.from_description(config.model)
    report = check_assumptions(model, config.r, config.n,
                               gamma=args.gamma, c_proxy=args.c_proxy)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
