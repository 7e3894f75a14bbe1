"""Command-line driver: ``perceptxai <stage> --config cfg.json --out run/``."""
import argparse
import logging
import os
import sys

from .errors import ConfigInvalid, PerceptError, StageDependencyMissing
from .pipeline import STAGES, load_config, run_all, run_stage

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_DEPENDENCY = 0, 1, 2, 3

log = logging.getLogger("perceptxai")


def build_parser():
    parser = argparse.ArgumentParser(prog="perceptxai", description=__doc__)
    parser.add_argument("stage", choices=STAGES + ("all",), help="pipeline stage to run")
    parser.add_argument("--config", help="JSON config; defaults are used for missing fields")
    parser.add_argument("--out", default="run", help="run directory (default: ./run)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes; never changes results")
    parser.add_argument("--seed-override", type=int, default=None, help="replace the config's seed")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    # verbosity is the only thing the environment may change
    logging.basicConfig(level=os.environ.get("PERCEPTXAI_LOG", "WARNING").upper(),
                        format="%(levelname)s %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.seed_override)
        if args.stage == "all":
            run_all(cfg, args.out, args.jobs)
        else:
            run_stage(args.stage, cfg, args.out, args.jobs)
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageDependencyMissing as exc:
        print(f"missing dependency: {exc}", file=sys.stderr)
        return EXIT_DEPENDENCY
    except PerceptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL
    log.info("stage %s done, outputs in %s", args.stage, args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
