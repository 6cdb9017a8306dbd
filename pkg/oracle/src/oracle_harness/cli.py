"""pricing-oracle CLI: reference runs and parity comparison over shared files."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import oracle_compare, oracle_ridge, oracle_train


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pricing-oracle")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the reference library on shared files")
    p.add_argument("--csv", required=True)
    p.add_argument("--folds", help="fold-plan JSON (omit to skip CV)")
    p.add_argument("--hp", required=True, help="hyperparameter JSON")
    p.add_argument("--library", choices=["sklearn", "xgboost"], default="sklearn")
    p.add_argument("--out", required=True)

    p = sub.add_parser("ridge", help="reference ridge coefficients")
    p.add_argument("--csv", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="apply parity tolerances to two result files")
    p.add_argument("--primary", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--tolerances", help="JSON tolerance overrides")
    p.add_argument("--out")

    args = parser.parse_args(argv)
    try:
        if args.command == "train":
            result = oracle_train(args.csv, args.folds, args.hp, args.library)
        elif args.command == "ridge":
            result = oracle_ridge(args.csv, args.alpha)
        else:
            tolerances = (
                json.loads(Path(args.tolerances).read_text()) if args.tolerances else None
            )
            result = oracle_compare(args.primary, args.reference, tolerances)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(result, indent=2)
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    print(text)
    if result.get("status") == "skipped":
        return 3  # explicit skip, distinguishable from pass and fail
    if args.command == "compare" and not result.get("passed", True):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
