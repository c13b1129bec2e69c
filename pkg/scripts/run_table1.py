#!/usr/bin/env python3
"""Restitution vs virtual damping at the reference operating point.

Sweeps the virtual damping over the nonlinear delayed 2D simulation and
compares the measured coefficient of restitution against the linear
pole-location prediction (critical damping ratio). Writes a CSV next to the
printed table.

Usage: python scripts/run_table1.py [--out results/table1_results.csv]
"""

import argparse
import sys
import time
from pathlib import Path

import docksim as ds
from docksim.cli import load_scenario, scenario_path


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/table1_results.csv")
    ap.add_argument("--betas", default="0,45,50,55,60,70",
                    help="comma-separated damping values [N*s/m]")
    args = ap.parse_args()

    body, contact, sim, options = load_scenario(scenario_path("table1.json"))
    mu, _, kappa = ds.penetration_dde_coeffs(body, contact)
    beta_c = ds.critical_damping(mu, kappa, sim.h)
    print(f"operating point: mu={mu:.4g} kg, kappa={kappa:.4g} N/m, h={sim.h * 1e3:.3g} ms")
    print(f"linear critical damping beta_c = {beta_c:.4g} N*s/m")
    print(f"{'beta':>6} {'beta_c/beta':>12} {'epsilon':>9} {'verdict(linear)':>16} {'cue(nonlinear)':>15}")

    rows = []
    t0 = time.perf_counter()
    for beta in (float(x) for x in args.betas.split(",")):
        c = ds.ContactParams(k_v=contact.k_v, b_v=beta, alpha=contact.alpha,
                             activation=contact.activation)
        _, events = ds.simulate(sim, body, c, mode="2d",
                                event_window=options["averaging_window"])
        res = ds.restitution(events[0], band=options["neutrality_band"])
        verdict = ds.verdict_4th_order(body, c, sim.h,
                                       band=options["neutrality_band"]).verdict
        ratio = beta_c / beta if beta > 0 else float("inf")
        print(f"{beta:6.1f} {ratio:12.3f} {res.epsilon:9.4f} {verdict:>16} {res.classification:>15}")
        rows.append((beta, ratio, res.epsilon, verdict, res.classification))
    print(f"({time.perf_counter() - t0:.2f} s)")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        fh.write("beta,beta_c_over_beta,epsilon,linear_verdict,nonlinear_cue\n")
        for beta, ratio, eps, verdict, cue in rows:
            fh.write(f"{beta:.9g},{ratio:.9g},{eps:.9g},{verdict},{cue}\n")
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
