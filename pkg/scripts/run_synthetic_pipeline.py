#!/usr/bin/env python3
"""Run the full CLI pipeline on a scaled-down synthetic corpus."""

import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.main import main as cli
from src.config import settings
from src.training.experiment import DESK_OVERRIDES


def main():
    """gen-data -> pretrain -> train-cdl -> evaluate in one run directory."""
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    root = Path(settings.OUTPUT_PATH) / f"synthetic-seed{seed}"
    data_dir = root / "data"
    overrides = [f"--set={key}={value}" for key, value in DESK_OVERRIDES.items()]
    common = ["--seed", str(seed), *overrides]

    steps = [
        ["gen-data", "--n", "600", "--out", str(data_dir), *common],
        ["pretrain", "--data", str(data_dir), "--out", str(root / "pretrain"), *common],
        ["train-cdl", "--data", str(data_dir), "--checkpoint", str(root / "pretrain"), "--out", str(root / "cdl"), *common],
        ["evaluate", "--data", str(data_dir), "--checkpoint", str(root / "pretrain"), "--model", "pretrain/forward",
         "--out", str(root / "eval-pretrain"), *common],
        ["evaluate", "--data", str(data_dir), "--checkpoint", str(root / "cdl"), "--out", str(root / "eval-cdl"), *common],
    ]

    for argv in steps:
        print(f"\n>>> {argv[0]}")
        print("-" * 60)
        code = cli(argv)
        if code != 0:
            print(f"❌ {argv[0]} failed with exit code {code}")
            sys.exit(code)

    print("\n" + "=" * 60)
    print("SUMMARY")
    print("=" * 60)
    for name in ("eval-pretrain", "eval-cdl"):
        print(f"\n{name}:")
        print((root / name / "report.txt").read_text(encoding="utf-8"))
    print(f"Outputs saved to: {root}")


if __name__ == "__main__":
    main()
