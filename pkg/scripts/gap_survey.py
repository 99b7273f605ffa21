"""Exact relaxation times and congestion on every enumerable star, path and cycle instance."""
import csv
import sys

from spe_qmc.analysis import STATE_CAP, build_chain_matrix, congestion, spectral_report
from spe_qmc.hamiltonian import cycle_model, operator_alphabet, path_model, star_model


def instances():
    for n in range(2, 7):
        yield f"star{n}", star_model(n)
        yield f"star{n}+fields", star_model(n, fields=[0.5] * n)
    for n in (3, 4, 5):
        yield f"path{n}", path_model(n)
    for n in (4, 6):
        yield f"cycle{n}", cycle_model(n)


def main():
    out = csv.writer(sys.stdout)
    out.writerow(["model", "B", "n_states", "lambda_star", "t_rel", "phi", "t_mix_upper"])
    for name, model in instances():
        a = len(operator_alphabet(model))
        for B in (1, 2, 3):
            if a ** (2 * B) > STATE_CAP:
                break
            cm = build_chain_matrix(model, B, lazy=True)
            gap = spectral_report(cm)
            phi = congestion(cm)["phi"] if cm.n_states ** 2 * 2 * B <= 2e7 else None
            phi = float("nan") if phi is None else phi
            out.writerow([name, B, cm.n_states, f"{gap.lambda_star:.6f}", f"{gap.t_rel:.3f}",
                          f"{phi:.3f}", f"{gap.t_mix_upper:.3f}"])


if __name__ == "__main__":
    main()
