#!/usr/bin/env python3
"""Full 3D contact demonstration with the compliance-device spring set.

Runs the bundled demo3d scenario twice (with and without virtual damping),
writes both trajectories, the contact events and the observed-energy monitor
of the damped run against its spring-only command stream.

Usage: python scripts/run_demo3d.py [--out-dir results/demo3d]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

import docksim as ds
from docksim.analysis import observed_energy, streams_from_trajectories, write_energy_csv
from docksim.cli import load_scenario, scenario_path
from docksim.dynamics import write_trajectory_csv


def run(body, contact, sim, options, label, out):
    traj, events = ds.simulate(sim, body, contact, mode="3d",
                               event_window=options["averaging_window"])
    write_trajectory_csv(traj, out / f"{label}.traj.csv")
    payload = []
    for ev in events:
        eps = ds.restitution(ev, band=options["neutrality_band"])
        payload.append({"t_in": ev.t_in, "t_out": ev.t_out, "v_minus": ev.v_minus,
                        "v_plus": ev.v_plus, "epsilon": eps.epsilon,
                        "classification": eps.classification})
    (out / f"{label}.events.json").write_text(json.dumps({"events": payload}, indent=2))
    print(f"{label}: {len(events)} contact(s)")
    for entry in payload:
        print(f"  t_in={entry['t_in']:.3f} s  eps={entry['epsilon']:.3f} ({entry['classification']})")
    return traj


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results/demo3d")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    body, contact, sim, options = load_scenario(scenario_path("demo3d.json"))
    damped = run(body, contact, sim, options, "damped", out)
    undamped_contact = ds.ContactParams(
        k_v=contact.k_v, b_v=0.0, alpha=contact.alpha, springs=contact.springs,
        n_hat=contact.n_hat, activation=contact.activation,
    )
    run(body, undamped_contact, sim, options, "undamped", out)

    # passivity monitor of the damped run: command stream carries the
    # spring-only force, so the damping is the only measured/commuted mismatch
    spring_f = damped.f + contact.b_v * damped.d_dot
    scale = np.divide(spring_f, damped.f, out=np.ones_like(spring_f),
                      where=damped.f != 0.0)
    commanded = ds.Trajectory(
        mode="3d", times=damped.times, states=damped.states, d=damped.d,
        d_dot=damped.d_dot, f=spring_f, tau=damped.tau * scale[:, None],
        in_contact=damped.in_contact,
    )
    record = observed_energy(streams_from_trajectories(damped, commanded, n_hat=contact.n_hat))
    write_energy_csv(record, out / "damped.energy.csv")
    print(f"observed energy after {record.times[-1]:.2f} s: {record.total[-1]:.6g} J "
          f"({record.classification[-1]})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
