"""Regenerate the bundled desk-EI dataset files from the fixed seed."""
import argparse
from pathlib import Path

from coexpand.io import write_atomic, dataset_files
from coexpand.synthetic import DESK_EI_SCENARIOS, DESK_EI_SEED, desk_ei

DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "coexpand" / "data" / "desk_ei"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=DESK_EI_SEED)
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    write_atomic(args.out, dataset_files(desk_ei(seed=args.seed), DESK_EI_SCENARIOS))
    print(f"wrote desk-EI (seed {args.seed}) to {args.out}")


if __name__ == "__main__":
    main()
