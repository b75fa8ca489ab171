"""Command-line runner for the four experiment kinds.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

import argparse
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig
from .experiments import (
    run_cgmy_pricing,
    run_diagnostics,
    run_mc_comparison,
    run_mcmc_cauchy,
)
from .numerics import ChainAbortError, NumericalFailure
from .output import boxplot_figures, write_estimates_csv, write_summary_csv

_SUBCOMMANDS = {
    "mc-compare": ("mc-comparison", run_mc_comparison),
    "mcmc-cauchy": ("mcmc-cauchy", run_mcmc_cauchy),
    "cgmy": ("cgmy-pricing", run_cgmy_pricing),
    "diagnose": ("diagnostics", run_diagnostics),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectralmc",
        description="Spectral-domain Monte Carlo studies for "
                    "characteristic-function targets.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value file")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--paper-scale", action="store_true",
                       help="restore the published replicate counts and sizes")
    return parser


def _write_run_outputs(result, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_estimates_csv(result.rows, out_dir / "estimates.csv")
    write_summary_csv(result.rows, out_dir / "summary.csv")
    boxplot_figures(result.rows, out_dir, result.experiment)
    if result.tuned:
        lines = []
        for key in sorted(result.tuned):
            info = result.tuned[key]
            lines.append(f"{key}: param = {info['param']:.17g}")
            for g, m in zip(info["grid"], info["mse"]):
                lines.append(f"  grid {g:.17g} -> mse {m:.17g}")
        (out_dir / "tuning.txt").write_text("\n".join(lines) + "\n", newline="\n")


def _write_diagnostics_outputs(reports, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    records = "\n".join(r.to_record() for r in reports)
    (out_dir / "reports.txt").write_text(records, newline="\n")
    lines = ["probe,domain,verdict,n_values,first_value,last_value"]
    for r in reports:
        first = f"{float(r.values[0]):.17g}" if r.values else ""
        last = f"{float(r.values[-1]):.17g}" if r.values else ""
        lines.append(f"{r.probe},{r.domain},{r.verdict},{len(r.values)},{first},{last}")
    (out_dir / "reports.csv").write_text("\n".join(lines) + "\n", newline="\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    kind, runner = _SUBCOMMANDS[args.command]
    try:
        cfg = ExperimentConfig.from_file(
            args.config, kind=kind, seed=args.seed, out_dir=args.out,
            paper_scale=args.paper_scale)
        out_dir = Path(cfg.out_dir)
        result = runner(cfg)
        if kind == "diagnostics":
            _write_diagnostics_outputs(result, out_dir)
            for r in result:
                print(f"{r.probe} [{r.domain}]: {r.verdict}")
        else:
            _write_run_outputs(result, out_dir)
            for key in sorted(result.gold):
                print(f"gold {key}: {result.gold[key]:.10g}")
            print(f"wrote {len(result.rows)} rows to {out_dir / 'estimates.csv'}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, ChainAbortError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
