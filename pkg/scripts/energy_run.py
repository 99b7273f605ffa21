"""Star-graph energies from long chains against exact values.

    python3 scripts/energy_run.py --N 3 5 --eps 0.05 --steps 1000000
"""
import argparse
import time

from spe_qmc.chain import ChainParams, run_arrays
from spe_qmc.estimators import estimate_energy
from spe_qmc.hamiltonian import required_B, star_model
from spe_qmc.oracle import lieb_mattis_ground_energy


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, nargs="+", default=[3, 5])
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--steps", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    for n in args.N:
        model = star_model(n)
        B = required_B(model, args.eps)
        t0 = time.perf_counter()
        params = ChainParams(B=B, steps=args.steps, burn_in=args.steps // 50, thinning=10, seed=args.seed)
        data = run_arrays(model, params)
        est = estimate_energy(model, data["measurements"])
        exact = lieb_mattis_ground_energy(model)
        print(f"N={n} B={B} E={est.mean:.5f} +- {est.stderr:.5f} exact={exact:.5f} "
              f"z={(est.mean - exact) / est.stderr:+.2f} tau={est.tau_int:.1f} "
              f"acc={data['acceptance']:.3f} {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
