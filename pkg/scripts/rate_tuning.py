"""Grid over ground-truth tuning choices for the rate sweep.

Reports, per setting, the share of trials with the right number of change
points and the median matched error for N in {500, 1000, 2000}. ``tau`` is
placed at fraction ``f`` of the admissible range, ``delta`` at a multiple of
``B^4 ln n / kappa^2`` and the inner scan margin at ``s * ln n``. ``cmax`` caps interval lengths at ``cmax * Delta``.
"""

import argparse
import itertools
import math

import numpy as np

from covcpd.datagen import GenSpec, alternating_model, gen_series
from covcpd.evaluation import compare
from covcpd.wbsip import run_wbsip


def rate(N, frac, inner, dmul, trials, M=300, cmax=None):
    model = alternating_model(N, 10, 2, 1.0, 1.5)
    n = N // 2
    spacing, B2, kappa = model.spacing / 2, model.max_op_norm, model.kappa
    lo, hi = B2 * math.sqrt(math.log(n)), kappa * math.sqrt(spacing)
    eps = B2**2 * math.log(n) / kappa**2
    tau, delta = lo + frac * (hi - lo), int(min(dmul * eps, spacing / 3))
    max_len = None if cmax is None else int(cmax * spacing)
    ok, errs = 0, []
    for t in range(trials):
        Z = gen_series(GenSpec(model, seed=1000 + t))
        res = run_wbsip(Z, M, seed=t, tau=tau, delta=delta, inner_margin_scale=inner, max_interval_len=max_len)
        rep = compare(model.change_points, res.change_points, N)
        ok += rep.k_est == rep.k_true
        if rep.matched_error is not None:
            errs.append(rep.matched_error)
    return ok / trials, float(np.median(errs)) if errs else float("nan")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=40)
    ap.add_argument("--inner", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    ap.add_argument("--dmul", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    ap.add_argument("--frac", type=float, nargs="+", default=[0.3, 0.4, 0.5])
    ap.add_argument("--cmax", type=float, nargs="+", default=[0.0], help="interval length cap in units of spacing; 0 = none")
    args = ap.parse_args()
    for inner, dmul, frac, cmax in itertools.product(args.inner, args.dmul, args.frac, args.cmax):
        cells = [rate(N, frac, inner, dmul, args.trials, cmax=cmax or None) for N in (500, 1000, 2000)]
        print(f"inner={inner} dmul={dmul} frac={frac} cmax={cmax} " + " ".join(f"({k:.2f}, {e:.0f})" for k, e in cells), flush=True)


if __name__ == "__main__":
    main()
