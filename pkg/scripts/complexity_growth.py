"""Fiber counts, variation profile and graph dimension: monotone lift vs folded lift."""
import argparse

import numpy as np

from circlesemi import zoo
from circlesemi.analysis import box_dimension_graph, fiber_survey, fiber_thetas, variation_profile_alpha
from circlesemi.circle import standard_map
from circlesemi.semiconj import make_evaluator
from circlesemi.structure import find_fold, normalize

MAPS = {
    "b=0.2 (increasing)": standard_map(0.2, 0.0),
    "b=0.5 (folded)": standard_map(0.5, 0.0),
    "pwl folded": zoo.folded(),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[2**12, 2**15, 2**18])
    ap.add_argument("--j-max", type=int, default=6)
    args = ap.parse_args()
    thetas = fiber_thetas(args.seed, args.samples)

    for name, m in MAPS.items():
        e = make_evaluator(m)
        w = find_fold(make_evaluator(normalize(m, e)), 6)
        reps = fiber_survey(e, thetas, args.resolutions)
        med = np.median([r.component_counts for r in reps], axis=0)
        prof = variation_profile_alpha(e, args.j_max, w)
        dim = box_dimension_graph(e)
        print(f"{name}")
        print(f"  fold: {'none' if w is None else f'N={w.N} K={w.K}'}")
        print("  fiber medians: " + ", ".join(f"2^{int(np.log2(R))}: {v:g}" for R, v in zip(args.resolutions, med)))
        print(f"  variation profile (M={prof.M}): " + ", ".join(f"{v:.4g}" for v in prof.values))
        print(f"  box dimension: {dim.dimension:.3f}")


if __name__ == "__main__":
    main()
