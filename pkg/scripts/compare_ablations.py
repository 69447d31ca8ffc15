#!/usr/bin/env python3
"""Compare CDL against its ablations on the synthetic corpus across seeds."""

import argparse
import logging
import sys
from pathlib import Path
sys.path.insert(0, str(Path(__file__).parent.parent))

import pandas as pd

from src.config import settings
from src.models import Ablation
from src.training.experiment import curve_dominance, run_experiment


def main():
    """Run each seed, then print the per-seed table and the directional checks."""
    parser = argparse.ArgumentParser(description="CDL ablation comparison on synthetic data")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--ablations", nargs="+", default=[a.value for a in Ablation],
                        choices=[a.value for a in Ablation])
    parser.add_argument("--out", type=str, default=str(Path(settings.OUTPUT_PATH) / "ablations"))
    args = parser.parse_args()

    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    rows = []
    checks = []
    for seed in args.seeds:
        results = run_experiment(seed, Path(args.out), ablations=[Ablation(a) for a in args.ablations])
        rows.append({"seed": seed, "system": "pretrain", **results["pretrain"]})
        for ablation in args.ablations:
            rows.append({"seed": seed, "system": f"cdl-{ablation}",
                         "emo_acc": results[ablation]["emo_acc"], "emo_word": results[ablation]["emo_word"]})

        check = {"seed": seed, "classifier_acc": results["classifier_acc"]}
        if "full" in results:
            check["emo_acc_gain"] = results["full"]["emo_acc"] - results["pretrain"]["emo_acc"]
        if "emo" in results:
            check["emo_word_gain (emo)"] = results["emo"]["emo_word"] - results["pretrain"]["emo_word"]
        if "full" in results and "dl" in results:
            check["curve_dominance_vs_dl"] = curve_dominance(results["full"]["curve"], results["dl"]["curve"])
        checks.append(check)
        if "curve_plot" in results:
            logger.info(f"Seed {seed} validation curves: {results['curve_plot']}")

    print("\n" + "=" * 60)
    print("EMOTION METRICS ON TEST")
    print("=" * 60)
    print(pd.DataFrame(rows).to_string(index=False))

    print("\n" + "=" * 60)
    print("DIRECTIONAL CHECKS")
    print("=" * 60)
    print(pd.DataFrame(checks).to_string(index=False))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(out / "metrics.csv", index=False)
    pd.DataFrame(checks).to_csv(out / "checks.csv", index=False)
    print(f"\nOutputs saved to: {out}")


if __name__ == "__main__":
    main()
