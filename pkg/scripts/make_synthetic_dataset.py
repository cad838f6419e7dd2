#!/usr/bin/env python3
"""Generate a folder of synthetic scene images with planted ground truth.

Each scene is a PNG with solid-colored rectangles; truth.json next to the
images records every planted object so the mock inference provider and the
evaluation helpers can use the folder directly.
"""

import argparse
from pathlib import Path

from labelkit.synth import generate_scenes


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", type=Path, help="output folder")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--count", type=int, default=20, help="number of scenes")
    parser.add_argument(
        "--classes",
        default="cat,dog,bird,car,tree",
        help="comma-separated class names",
    )
    parser.add_argument("--width", type=int, default=160)
    parser.add_argument("--height", type=int, default=120)
    args = parser.parse_args()

    names = tuple(n.strip() for n in args.classes.split(",") if n.strip())
    truth = generate_scenes(
        args.out,
        seed=args.seed,
        image_count=args.count,
        class_names=names,
        image_size=(args.width, args.height),
    )
    planted = sum(len(objects) for objects in truth.values())
    print(f"wrote {len(truth)} scenes with {planted} planted objects to {args.out}")
    print(f"ground truth: {args.out / 'truth.json'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
