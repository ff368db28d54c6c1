"""(beta, gamma) maps at fixed alpha for the attack and release analogs.

For each scenario, prints the window-averaged spiral coefficients along the
analyzed partial on the signed (beta, gamma) grid and the winning quadrant.
Pitch and formant rising together should concentrate energy at negative
beta and gamma; falling together, at positive beta and gamma.
"""
import argparse

import numpy as np

from spiralscat.validation import attack_scenario, quadrant_winner, release_scenario, run_scenario


def beta_gamma_map(run, alpha):
    t = run.tensor
    frames = run.frames()
    mean = t.values[frames, run.partial_bins(frames), :].mean(axis=0)
    a, b, g = t.alphas(), t.betas(), t.gammas()
    a_fixed = a[np.argmin(np.abs(np.log2(a / alpha)))]
    betas, gammas = np.unique(b), np.unique(g)
    grid = np.zeros((len(betas), len(gammas)))
    for k in np.flatnonzero(a == a_fixed):
        grid[np.searchsorted(betas, b[k]), np.searchsorted(gammas, g[k])] = mean[k]
    return a_fixed, betas, gammas, grid


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alpha", type=float, help="temporal modulation in Hz (default per scenario)")
    args = p.parse_args(argv)
    for make in (attack_scenario, release_scenario):
        run = run_scenario(make())
        alpha = run.scenario.quadrant_alpha if args.alpha is None else args.alpha
        a, betas, gammas, grid = beta_gamma_map(run, alpha)
        winner, _ = quadrant_winner(run, alpha)
        print(f"{run.scenario.name}: alpha = {a:.4g} Hz, winning (sign beta, sign gamma) = {winner}")
        print("beta \\ gamma " + " ".join(f"{g:>9.3g}" for g in gammas))
        for beta, row in zip(betas, grid / grid.max()):
            print(f"{beta:>12.3g} " + " ".join(f"{v:>9.3f}" for v in row))
        print()


if __name__ == "__main__":
    main()
