#!/usr/bin/env python3
# Quadrature-only study of the small-jump expansion: sup-norm errors of the
# first three kernel moments against their diffusion targets, with fitted
# log-log slopes. The equal-weight mixture is the interesting outlier: its
# leading error term cancels and the slope roughly doubles.

import argparse

from mhjump import GeneratorKind, make_potential, moment_report

p = argparse.ArgumentParser()
p.add_argument("--potential", default="doublewell")
p.add_argument("--d-star", type=int, nargs="+", default=[1, 3])
p.add_argument("--eps", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4])
p.add_argument("--alphas", type=float, nargs="+", default=[1.0, 0.0, 0.5, 0.25])
args = p.parse_args()

print(f"{'potential':>12} {'d*':>3} {'kind':>9} {'k=1':>7} {'k=2':>7} {'k=3':>7}")
for d in args.d_star:
    target = make_potential(args.potential, d_star=d, T=1.0)
    for a in args.alphas:
        kind = GeneratorKind.m1() if a == 1.0 else (
            GeneratorKind.m2() if a == 0.0 else GeneratorKind.mix(a))
        rep = moment_report(kind, target, args.eps)
        print(f"{target.name:>12} {d:>3} {kind.label():>9} "
              f"{rep.slopes[1]:7.3f} {rep.slopes[2]:7.3f} {rep.slopes[3]:7.3f}")

print("\nsup-norm errors at each eps (k=1):")
for d in args.d_star:
    target = make_potential(args.potential, d_star=d, T=1.0)
    rep = moment_report(GeneratorKind.m1(), target, args.eps)
    cells = " ".join(f"{e:9.2e}" for e in rep.sup_errors[1])
    print(f"  d*={d}: {cells}   (eps = {', '.join(f'{e:g}' for e in args.eps)})")
