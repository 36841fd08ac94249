"""Error propagation from a noisy relay and its relay-state remedy.

Compares an error-free relay, a relay forwarding whatever it decoded, and a
relay that drops sources it decoded wrongly while telling the destination.

    python demos/relay_errors.py [--sr-gain-db 10] [--errors 30]
"""

import argparse

from jncc.harness import SimConfig, run_per_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sr-gain-db", type=float, default=10.0,
                    help="source-relay link gain over the source-destination link")
    ap.add_argument("--errors", type=int, default=30)
    args = ap.parse_args()

    base = SimConfig(h=(6, 6), scenario="C", target_errors=args.errors,
                     source_relay_gain_db=args.sr_gain_db)
    modes = ("ideal", "noisy", "rsi_genie", "rsi_crc")
    res = {m: run_per_sweep(base.replace(relay_mode=m)) for m in modes}
    print(f"scenario C, h=(6,6), source-relay gain {args.sr_gain_db:g} dB")
    print(f"{'SNR dB':>7} " + " ".join(f"{m:>10}" for m in modes))
    for i, snr in enumerate(base.snr_grid_db):
        print(f"{snr:7g} " + " ".join(f"{res[m].points[i].per:10.2e}" for m in modes))


if __name__ == "__main__":
    main()
