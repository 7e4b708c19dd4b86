"""Fold, horseshoe and coding on the built-in folded map (or a spec file)."""
import argparse
import math

import numpy as np

from circlesemi import zoo
from circlesemi.analysis import entropy_from_variation, entropy_lower_bound
from circlesemi.circle import iterate_lift, load_map
from circlesemi.semiconj import make_evaluator
from circlesemi.structure import build_horseshoe, coded_point, find_fold, normalize, words


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spec", help="map spec file; default is the built-in folded map")
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--word-length", type=int, default=4)
    args = ap.parse_args()

    m = load_map(args.spec) if args.spec else zoo.folded()
    mn = normalize(m)
    print(f"normalizing rotation: {mn.rotation_offset:.17g}")
    w = find_fold(make_evaluator(mn), args.n_max)
    if w is None:
        print(f"no fold up to N = {args.n_max}")
        return
    print(f"fold N={w.N} K={w.K}: p_left={w.p_left:.12f} < x_hat={w.x_hat:.12f} < p_right={w.p_right:.12f}"
          f"  (residual {w.residual:.2g})")

    cover = build_horseshoe(mn, w)
    print(f"\nhorseshoe with {len(cover.intervals)} intervals, trivial letters {sorted(map(str, cover.trivial_letters))}")
    for eta, (lo, hi) in cover.intervals.items():
        a, b = iterate_lift(mn, np.array([lo, hi]), cover.N)
        print(f"  {str(eta):>3}: [{lo:.9f}, {hi:.9f}]  g^N ends {a:+.6f} {b:+.6f}  covers [{cover.address[eta]}, "
              f"{cover.address[eta] + 1}]")

    ws = list(words(cover, args.word_length, cover.nontrivial_letters))
    ivs = sorted(((coded_point(cover, mn, wd), wd) for wd in ws), key=lambda t: t[0].lo)
    gaps = [b.lo - a.hi for (a, _), (b, _) in zip(ivs, ivs[1:])]
    print(f"\n{len(ws)} coded intervals of length {args.word_length}: widest {max(J.width for J, _ in ivs):.3g}, "
          f"smallest gap {min(gaps):.3g}")

    ent = entropy_from_variation(mn, witness=w)
    print(f"\nentropy: horseshoe bound {entropy_lower_bound(w):.6f}, variation rate {ent.variation_rate:.6f} "
          f"over n in {ent.n_range}, log D = {math.log(mn.degree):.6f}")


if __name__ == "__main__":
    main()
