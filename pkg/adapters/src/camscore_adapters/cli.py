"""camscore-extract: produce perception bundles from images or captions.

Same conventions as the scoring CLI: one machine-readable JSON line on
stdout, human diagnostics on stderr, CAMSCORE_LOG={error,info,debug}.
Exit codes: 0 ok, 1 input error, 2 model/stage error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from camscore import load_bundle

from . import __version__
from .config import load_adapter_config
from .errors import AdapterError, StageError
from .pipeline import extract_bundle, generate_and_extract

log = logging.getLogger("camscore_adapters")

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_MODEL_ERROR = 2
EXIT_INTERNAL_ERROR = 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="camscore-extract",
        description="run perception models over an image (or a caption via text-to-image) "
        "and write a scoring bundle",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    which = parser.add_mutually_exclusive_group()
    which.add_argument("--image", help="image file to extract")
    which.add_argument("--caption", help="caption to render and extract")
    parser.add_argument("--config", required=True, help="adapter config JSON")
    parser.add_argument("--out", help="bundle directory (default: derived under the config out_dir)")
    return parser


def _setup_logging() -> None:
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    wanted = os.environ.get("CAMSCORE_LOG", "info").lower()
    logging.basicConfig(
        stream=sys.stderr,
        level=levels.get(wanted, logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if wanted not in levels:
        log.warning("unknown CAMSCORE_LOG value %r, using info", wanted)


def _run(args) -> dict:
    cfg = load_adapter_config(args.config)
    if args.image is not None:
        out = extract_bundle(args.image, cfg, out_dir=args.out)
    else:
        caption = args.caption if args.caption is not None else cfg.caption
        out = generate_and_extract(caption, cfg, out_dir=args.out)
    bundle = load_bundle(out)
    return {
        "bundle": str(out),
        "source": bundle.source,
        "detections": len(bundle.detections),
        "feature_dim": bundle.feature_dim,
    }


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    _setup_logging()
    try:
        payload = _run(args)
        sys.stdout.write(json.dumps(payload) + "\n")
        return EXIT_OK
    except StageError as exc:
        log.error("%s", exc)
        return EXIT_MODEL_ERROR
    except (AdapterError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT_ERROR
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
