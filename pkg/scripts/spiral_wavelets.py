"""Real part of a spiral wavelet on the time/log-frequency plane, as CSV.

Defaults: 120 ms temporal period, -4 cycles/octave along log-frequency,
0.5 cycles/octave across octaves.
"""
import argparse
import sys

import numpy as np

from spiralscat.filterbank import spiral_wavelet
from spiralscat.io import write_csv


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--period", type=float, default=0.120, help="temporal period in seconds")
    p.add_argument("--beta", type=float, default=-4.0)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--Q", type=int, default=12, help="log-frequency samples per octave")
    p.add_argument("--octaves", type=int, default=6)
    p.add_argument("--out", help="CSV path (default standard output)")
    args = p.parse_args(argv)
    alpha = 1.0 / args.period
    t = np.linspace(-2 * args.period, 2 * args.period, 97)
    l = 6.0 + np.arange(args.octaves * args.Q) / args.Q
    psi = spiral_wavelet(alpha, args.beta, args.gamma, t, l)
    rows = [(float(tt), float(ll), float(psi[i, j].real))
            for i, ll in enumerate(l) for j, tt in enumerate(t)]
    write_csv(sys.stdout if args.out is None else args.out, ["time_s", "log2_hz", "real"], rows)


if __name__ == "__main__":
    main()
