"""PER of two coefficient pairs on common frames, plus the crossover SNR.

A light version of the acceptance sweep (30 errors per point instead of
100); about five minutes per pair on one core.

    python demos/per_sweep.py [--scenario C] [--errors 30] [--threads 4]
"""

import argparse

from jncc.harness import SimConfig, find_crossing, run_per_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="C", choices=["A", "B", "C"])
    ap.add_argument("--code", default="CC2")
    ap.add_argument("--errors", type=int, default=30)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    base = SimConfig(code=args.code, scenario=args.scenario, target_errors=args.errors)
    res = {h: run_per_sweep(base.replace(h=list(h)), threads=args.threads)
           for h in ((1, 1), (6, 6))}
    print(f"{'SNR dB':>7} {'Eb/N0 dB':>9} {'PER (1,1)':>10} {'PER (6,6)':>10}")
    rows = zip(*(r.rows() for r in res.values()))
    for a, b in rows:
        print(f"{a['snr_db']:>7} {a['ebn0_db']:>9} {float(a['per']):10.2e} {float(b['per']):10.2e}")
    lo, hi = ([max(p.frame_errors, 0.5) / p.frames for p in r.points] for r in res.values())
    th = find_crossing(base.snr_grid_db, lo, hi)
    print(f"(6,6) overtakes (1,1) at {th:.2f} dB" if abs(th) != float("inf") else
          f"no crossing inside the grid ({th})")


if __name__ == "__main__":
    main()
