"""
Evaluation protocol demo.

Scores a prediction against planar ground-truth depth on the All/ToM/Other
splits, showing the effect of the least-squares rescaling used for
affine-ambiguous predictions, and prints the aggregate table.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from tomdepth import ScalarMap, Space, TomMask, evaluate_sample
from tomdepth.cli import format_table
from tomdepth.metrics import aggregate_reports


def main():
    rng = np.random.default_rng(3)
    h = w = 48

    gt_vals = rng.uniform(800, 3000, size=(h, w))
    gt = ScalarMap(gt_vals, None, Space.DEPTH_MM)

    labels = np.zeros((h, w), dtype=np.uint8)
    labels[10:30, 12:36] = 1
    mask = TomMask(labels)

    # a prediction that is good off-ToM, biased on ToM, in arbitrary units
    noise = rng.normal(0, 15, size=(h, w))
    bias = 280.0 * mask.as_bool()
    pred_vals = 0.004 * (gt_vals + noise + bias) + 1.2
    pred = ScalarMap(pred_vals, None, Space.AFFINE_INVERSE_DEPTH)

    reports = evaluate_sample(pred, gt, mask, rescale="lse")
    per_split = {r.split: aggregate_reports([r]) for r in reports}
    print("single-sample evaluation, LSE-rescaled prediction:\n")
    print(format_table(per_split, "demo-pred", Space.DEPTH_MM, ["All", "ToM", "Other"]))

    tom, other = per_split["ToM"], per_split["Other"]
    print(f"the ToM bias shows up directly: MAE {tom.mae:.1f} mm on ToM vs "
          f"{other.mae:.1f} mm on Other,")
    print(f"while delta<1.25 drops from {other.delta[1.25]:.1f}% to {tom.delta[1.25]:.1f}%.")


if __name__ == "__main__":
    main()
