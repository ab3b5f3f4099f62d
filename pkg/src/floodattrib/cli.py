"""Command-line entry point: ``floodattrib {ingest-check,run,synth,report}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io
from .config import ConfigError, RunConfig, load_config
from .pipeline import run_sites
from .synthetic import default_suite, generate_synthetic_site

log = logging.getLogger("floodattrib")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="floodattrib", description="Bayesian attribution of flood changes.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("ingest-check", help="validate a data directory and list its sites")
    c.add_argument("--data-dir", required=True)
    c.add_argument("--config", default=None)

    c = sub.add_parser("run", help="fit every site and write the report")
    c.add_argument("--data-dir", required=True)
    c.add_argument("--config", default=None)
    c.add_argument("--out-dir", required=True)
    c.add_argument("--seed", type=int, default=None, help="override the configured seed")
    c.add_argument("--prior-mode", choices=("informative", "flat"), default=None)
    c.add_argument("--workers", type=int, default=None, help="parallel site processes")

    c = sub.add_parser("synth", help="write a synthetic data directory with known drivers")
    c.add_argument("--out-dir", required=True)
    c.add_argument("--n-sites", type=int, default=5)
    c.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("report", help="rebuild report files from a site_results.jsonl")
    c.add_argument("--results", required=True)
    c.add_argument("--out-dir", required=True)
    return p


def _config(path) -> RunConfig:
    return load_config(path) if path else RunConfig()


def _ingest_check(args) -> int:
    sites = io.ingest(args.data_dir, _config(args.config))
    for s in sites:
        print(f"{s.site_id}\t{len(s.annual_max)} years\t{s.annual_max.years[0]}-{s.annual_max.years[-1]}")
    print(f"{len(sites)} sites OK")
    return 0


def _run(args) -> int:
    cfg = _config(args.config).with_overrides(seed=args.seed, prior_mode=args.prior_mode, workers=args.workers)
    sites = io.ingest(args.data_dir, cfg)
    results, failures = run_sites(sites, cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_failures(failures, out / "failures.jsonl")
    for f in failures:
        log.error("site %s failed: %s", f["site_id"], f["error"])
    if results:
        io.report(results, out)
    print(f"{len(results)} sites attributed, {len(failures)} failed")
    return 0 if not failures else 1


def _synth(args) -> int:
    sites = [generate_synthetic_site(s) for s in default_suite(args.n_sites, args.seed)]
    io.write_site_records(sites, args.out_dir)
    print(f"wrote {len(sites)} synthetic sites to {args.out_dir}")
    return 0


def _report(args) -> int:
    results = io.read_results_jsonl(args.results)
    for p in io.report(results, args.out_dir):
        print(p)
    return 0


COMMANDS = {"ingest-check": _ingest_check, "run": _run, "synth": _synth, "report": _report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (io.IngestError, ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
