"""Check the committed golden fixtures, or rewrite them with --write."""

import argparse
import sys
from pathlib import Path

from activescan.fixtures import FIXTURE_VERSION, FixtureDriftError, regenerate_fixtures

DEFAULT_DIR = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / FIXTURE_VERSION


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dir", type=Path, default=DEFAULT_DIR)
    ap.add_argument("--write", action="store_true", help="overwrite the fixtures instead of checking them")
    args = ap.parse_args()
    try:
        paths = regenerate_fixtures(args.dir, write=args.write)
    except FixtureDriftError as exc:
        print(exc, file=sys.stderr)
        return 1
    verb = "wrote" if args.write else "checked"
    for p in paths:
        print(f"{verb} {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
