"""AWGN transfer curves of the network check node next to the two codes.

Prints T(0), T(1) and the area for every canonical pair at q=3, then the
decoding trajectory outcome against CC2 and CC6 for three representative
pairs.  Runs in about a minute.

    python demos/exit_chart.py [--snr-db -6]
"""

import argparse

import numpy as np

from jncc.channel import snr_to_n0
from jncc.convcode import CC2, CC6
from jncc.exit_chart import classify_crossing, measure_cc_transfer, measure_nc_transfer
from jncc.gf import make_field


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--snr-db", type=float, default=-6.0)
    ap.add_argument("--samples", type=int, default=10_000)
    args = ap.parse_args()

    f = make_field(3)
    grid = np.linspace(0, 1, 21)
    n0 = float(snr_to_n0(args.snr_db))
    curves = {h: measure_nc_transfer(f, h, n0=n0, ia_grid=grid, n_samples=args.samples, rng=0)
              for h in f.canonical_pairs()}

    print(f"q=3, AWGN, SNR {args.snr_db:g} dB, {args.samples} check-node uses per point")
    print(f"{'h':>8} {'T(0)':>8} {'T(1)':>8} {'area':>8}")
    for h, c in sorted(curves.items(), key=lambda kv: -kv[1].ie[0]):
        print(f"{str(h):>8} {c.ie[0]:8.4f} {c.ie[-1]:8.4f} {c.area():8.4f}")

    # the code curve is plotted with swapped axes: its input is the NC output
    codes = {spec.name: measure_cc_transfer(spec, grid, rng=1) for spec in (CC2, CC6)}
    print("\ntrajectory outcome (kind, convolutional-decoder MI where it stalls)")
    for h in ((1, 1), (6, 6), (3, 5)):
        row = [f"{name}: {cr.kind} {cr.value:.3f}"
               for name, cc in codes.items() for cr in [classify_crossing(curves[h], cc)]]
        print(f"{str(h):>8}  " + "   ".join(row))


if __name__ == "__main__":
    main()
