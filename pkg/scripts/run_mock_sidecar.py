#!/usr/bin/env python3
"""Serve a planted-truth mock provider over the sidecar wire protocol.

Useful for exercising the sidecar transport without any model runtime:
point the main service at this process via LABELKIT_PROVIDER=sidecar and
LABELKIT_SIDECAR_ENDPOINT=http://127.0.0.1:9090.
"""

import argparse

import uvicorn

from labelkit.providers import MockProvider
from labelkit.providers.sidecar import make_sidecar_app
from labelkit.synth import load_truth


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9090)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--truth", default=None, help="truth.json with planted objects"
    )
    parser.add_argument(
        "--classes",
        default="cat,dog,bird,car,tree",
        help="comma-separated label vocabulary",
    )
    args = parser.parse_args()

    truth = load_truth(args.truth) if args.truth else {}
    names = tuple(n.strip() for n in args.classes.split(",") if n.strip())
    provider = MockProvider(truth, seed=args.seed, known_classes=names)
    app = make_sidecar_app(provider)
    print(f"mock sidecar listening on http://{args.host}:{args.port}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
