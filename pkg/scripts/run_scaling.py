#!/usr/bin/env python3
"""Runtime and evaluation-count scaling of backward elimination.

Trains one SPN per dataset width and times the explanation of all
labeled outliers. Backward elimination needs exactly n(n+1)/2 - 1
circuit evaluations per outlier, so the log-log slope of the measured
mean eval counts should sit near 2.

Example:
    python3 scripts/run_scaling.py --sizes 10 20 50 100 --seed 0
"""

import argparse
import sys
import time

import numpy as np

from spnexplain.datagen import GenConfig, generate
from spnexplain.explain import ExplainConfig, explain
from spnexplain.learn import LearnConfig, learn_spn


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 50, 100])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-outliers", type=int, default=30)
    args = ap.parse_args(argv)

    config = ExplainConfig(strategy="backward", selection="elbow")
    mean_evals = []
    print("n\ttrain_s\texplain_s\tmean_evals")
    for n in args.sizes:
        labeled = generate(GenConfig(n_features=n, n_outliers=args.n_outliers,
                                     seed=args.seed))
        t0 = time.perf_counter()
        model = learn_spn(labeled.dataset, LearnConfig(seed=args.seed))
        train_s = time.perf_counter() - t0
        t0 = time.perf_counter()
        evals = [explain(model, labeled.dataset.values[row], config).eval_count
                 for row in labeled.outlier_rows]
        explain_s = time.perf_counter() - t0
        mean_evals.append(float(np.mean(evals)))
        print(f"{n}\t{train_s:.2f}\t{explain_s:.2f}\t{mean_evals[-1]:.1f}")
    if len(args.sizes) >= 2:
        slope = np.polyfit(np.log(args.sizes), np.log(mean_evals), 1)[0]
        print(f"log-log slope of eval counts: {slope:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
