#!/usr/bin/env python3
"""Generate the synthetic demo dataset (60 images, planted issues)."""

import argparse
from pathlib import Path

from cleanloop.synthetic import generate


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    manifest, truth = generate(args.out_dir, seed=args.seed)
    print(f"wrote {len(manifest)} samples under {args.out_dir}")
    print(f"planted: {truth.to_dict()}")


if __name__ == "__main__":
    main()
