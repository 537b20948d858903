"""Command-line entry point: ``topicvec <stage> --config <path> [--set k=v]...``

Exit codes: 0 success, 1 usage or configuration error, 2 missing upstream
artifact, 3 data error. Logs go to stderr; machine-readable artifacts go to
the configured output directory only.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, DataError, MissingArtifactError
from .pipeline import STAGES, load_config, run_stage

logger = logging.getLogger("topicvec")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); usage errors are exit 1
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="topicvec",
        description="Topic-partitioned static word vectors: batch pipeline stages.",
    )
    parser.add_argument("stage", choices=STAGES, help="pipeline stage to run")
    parser.add_argument("--config", required=True, help="key=value config file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[],
        metavar="KEY=VALUE", help="override a config key (repeatable; flags win)",
    )
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config, args.overrides)
        out = run_stage(args.stage, config)
    except ConfigError as exc:
        logger.error("%s", exc)
        return 1
    except MissingArtifactError as exc:
        logger.error("%s", exc)
        return 2
    except DataError as exc:
        logger.error("%s", exc)
        return 3
    logger.info("stage complete: %s", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
