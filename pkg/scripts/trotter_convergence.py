"""Global error of the product formulas against exact propagation."""

import argparse

import numpy as np

from probespec.evolve import TrotterPlan, exact_propagate, joint_state, trotter_propagate
from probespec.fixtures import random_pauli_sum
from probespec.model import ProbeConfig, assemble_total, basis_state, pauli_system, uniform_x


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--tau", type=float, default=4.0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    system = pauli_system(random_pauli_sum(3, 8, rng, scale=0.5))
    h = assemble_total(system, ProbeConfig(omega=1.0, c=0.2, tau=args.tau), uniform_x(3))
    psi = joint_state(basis_state(0, 3), 1)
    exact = exact_propagate(h, args.tau, psi)
    steps = 2 ** np.arange(4, 10)
    for order in (1, 2):
        errs = [np.linalg.norm(trotter_propagate(h, args.tau, TrotterPlan(order, int(r)), psi) - exact) for r in steps]
        slope = np.polyfit(np.log(steps), np.log(errs), 1)[0]
        print(f"order {order}: slope {slope:.3f}  " + "  ".join(f"r={r}:{e:.2e}" for r, e in zip(steps, errs)))


if __name__ == "__main__":
    main()
