"""Coefficient selection from fading statistics of the transfer endpoints.

Draws Rayleigh realizations of the three destination links, measures T(0)
and T(1) for one member of each equivalence class of coefficient pairs, and
reports the pairs that maximise each endpoint.  About a minute at the
defaults; pass ``--threshold`` to add the PER sweeps that locate the
crossover SNR (tens of minutes).

    python demos/coefficient_selection.py [--scenario C] [--snr-db 0]
"""

import argparse

from jncc.convcode import CODES
from jncc.exit_chart import select_coefficients
from jncc.gf import make_field


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="C", choices=["A", "B", "C"])
    ap.add_argument("--snr-db", type=float, default=0.0)
    ap.add_argument("--realizations", type=int, default=500)
    ap.add_argument("--code", default="CC2", choices=sorted(CODES))
    ap.add_argument("--threshold", action="store_true")
    args = ap.parse_args()

    f = make_field(3)
    res = select_coefficients(f, CODES[args.code], args.scenario, args.snr_db,
                              args.realizations, seed=0, estimate_threshold=args.threshold,
                              sweep_kwargs={"target_errors": 30})
    ev = res.evidence
    print(f"scenario {args.scenario}, SNR {args.snr_db:g} dB, {args.realizations} realizations")
    print(f"{'class representative':>22} {'mean T(0)':>10} {'mean T(1)':>10}")
    for key in sorted(ev["mean_t1"], key=lambda k: -ev["mean_t1"][k]):
        print(f"{key:>22} {ev['mean_t0'][key]:10.4f} {ev['mean_t1'][key]:10.4f}")
    print(f"\nh*_1 = {tuple(res.h_star_1)}  class {res.class_1}  dominant CDF: {res.dominance_1}")
    print(f"h*_0 = {tuple(res.h_star_0)}  class {res.class_0}  dominant CDF: {res.dominance_0}")
    if res.snr_th is not None:
        print(f"PER crossover SNR: {res.snr_th:.2f} dB")


if __name__ == "__main__":
    main()
