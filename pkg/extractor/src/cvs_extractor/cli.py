"""CLI: extract --manifest M --model NAME --mode masked|unmasked --out F"""

from __future__ import annotations

import argparse
import logging
import sys

from .extract import ExtractionJob, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description="Encode manifest mentions with a pretrained transformer "
                    "into a CVS1 vector store.",
    )
    parser.add_argument("--manifest", required=True, help="JSON-lines mention manifest")
    parser.add_argument("--model", required=True,
                        help="model name or local path (e.g. bert-base-uncased)")
    parser.add_argument("--mode", required=True, choices=["masked", "unmasked"])
    parser.add_argument("--out", required=True, help="output store path")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    job = ExtractionJob(
        manifest=args.manifest, model_name=args.model, mode=args.mode,
        out=args.out, batch_size=args.batch_size, device=args.device,
    )
    try:
        extract(job)
    except (ValueError, OSError) as exc:
        logging.getLogger("extract").error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
