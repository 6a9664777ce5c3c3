#!/usr/bin/env python3
"""Finite-state picture: every mixture sits at the same mu-weighted L1
distance from the proposal matrix, and random reversible competitors never
get closer. Prints one block per sampled chain."""

import argparse

import numpy as np

from mhjump.finite import (
    d_mu,
    half_space_masses,
    make_m1,
    make_m2,
    mix,
    random_chain,
    random_reversible_batch,
)

p = argparse.ArgumentParser()
p.add_argument("--n-chains", type=int, default=5)
p.add_argument("--n-states", type=int, default=5)
p.add_argument("--n-competitors", type=int, default=20_000)
p.add_argument("--seed", type=int, default=0)
args = p.parse_args()

rng = np.random.default_rng(args.seed)
alphas = np.linspace(0.0, 1.0, 11)

for c in range(args.n_chains):
    chain = random_chain(args.n_states, rng)
    m1, m2 = make_m1(chain), make_m2(chain)
    base = d_mu(chain, chain.rates, m1)
    dists = [d_mu(chain, chain.rates, mix(m1, m2, a)) for a in alphas]
    spread = max(dists) - min(dists)
    under, over = half_space_masses(chain)

    comps = random_reversible_batch(chain, args.n_competitors, rng)
    off = ~np.eye(chain.n, dtype=bool)
    comp_d = np.sum(chain.mu[None, :, None] * np.abs(comps - chain.rates[None]) * off[None],
                    axis=(1, 2))

    print(f"chain {c}: d_mu(Q, M1) = {base:.6f}")
    print(f"  mixture sweep spread over alpha in [0,1]: {spread:.2e}")
    print(f"  half-space masses: below={under:.6f} above={over:.6f}")
    print(f"  best of {args.n_competitors} random reversible: {comp_d.min():.6f} "
          f"(margin {comp_d.min() - base:+.2e}), median {np.median(comp_d):.4f}")
