"""Print the exact completeness identities over a grid of gadget parameters."""
import argparse
import itertools
import time
from fractions import Fraction

from lassgap import gadgets, xor3
from lassgap.certificates import bs_balance_residual, bs_objective, lift_bs_solution, lift_usc_solution, usc_balance, \
    usc_objective


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--beta", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--M", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--lam", type=int, nargs="+", default=[10, 100, 1000])
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()

    print("n beta M lam |V| bs_obj/5m bs_delta/(M+1)m usc_raw/(2M+10)m usc_delta scaled<=bound secs")
    for n, beta, M in itertools.product(a.n, a.beta, a.M):
        inst, plant = xor3.sample_planted(n, beta * n, a.seed)
        H = gadgets.build_bs_instance(inst, gadgets.GadgetParams(beta, M, seed=a.seed, certify=False))
        sol = lift_bs_solution(xor3.perfect_solution_from_assignment(inst, plant, 3), H, 1, inst)
        m = inst.m
        obj = Fraction(bs_objective(sol), 5 * m)
        bal = Fraction(bs_balance_residual(sol).delta, (M + 1) * m)
        for lam in a.lam:
            t0 = time.time()
            U = gadgets.build_usc_instance(H, lam=lam, certify=False)
            usol = lift_usc_solution(sol, U)
            ub = usc_balance(usol)
            val = usc_objective(usol, balance=ub)
            ok = ub.delta == ((lam + 1) * M + 1) * m
            print(n, beta, M, lam, U.n, obj, bal, Fraction(val.raw, (2 * M + 10) * m), ok,
                  val.scaled <= val.bound, f"{time.time() - t0:.1f}")


if __name__ == "__main__":
    main()
