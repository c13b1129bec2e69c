"""Command-line front end.

Subcommands: simulate, stability, boundary, linearize, energy. Inputs are
JSON scenario files (strictly checked: unknown keys are rejected, angles may
be given in degrees via *_deg keys); bulk numeric outputs are CSV with fixed
formatting so repeated runs are byte-identical. Run metadata goes to a
separate .meta.json sidecar, never into the data files.

Exit codes: 0 success, 1 invalid input, 2 numerical divergence.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as _analysis
from . import dynamics as _dynamics
from . import linear as _linear
from . import stability as _stability
from .core import (
    BodyParams,
    ChaserState2D,
    ChaserState3D,
    ContactParams,
    SimConfig,
    ValidationError,
    validate,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DIVERGED = 2

ANALYSIS_DEFAULTS = {
    "neutrality_band": 0.01,
    "energy_tolerance": _analysis.DEFAULT_LOSSLESS_TOL,
    "averaging_window": 0.02,
}


class ScenarioError(ValueError):
    pass


def _reject_unknown(section: str, data: dict, allowed: set[str]) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ScenarioError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def _angle(section: str, data: dict, name: str, required: bool = True):
    """Read an angle given either in radians (name) or degrees (name_deg)."""
    deg = name + "_deg"
    if name in data and deg in data:
        raise ScenarioError(f"{section}: give either {name} or {deg}, not both")
    if name in data:
        return float(data[name])
    if deg in data:
        return math.radians(float(data[deg]))
    if required:
        raise ScenarioError(f"{section}: missing {name} (or {deg})")
    return None


def scenario_path(name: str) -> Path:
    """Resolve a scenario reference: an existing file path wins, otherwise
    the bundled scenario of that name (with or without .json)."""
    p = Path(name)
    if p.exists():
        return p
    base = resources.files("docksim") / "scenarios"
    for candidate in (name, name + ".json"):
        bundled = base / candidate
        if bundled.is_file():
            return Path(str(bundled))
    raise ScenarioError(f"scenario not found: {name}")


def load_scenario(path: Path, overrides: list[str] | None = None):
    """Parse, override and validate a scenario file.

    Returns (body, contact, sim, analysis_options). Overrides are
    dotted-path assignments like contact.b_v=60 applied to the raw document
    before parsing; values are parsed as JSON.
    """
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    for item in overrides or []:
        if "=" not in item:
            raise ScenarioError(f"override must look like section.key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        keys = dotted.strip().split(".")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                raise ScenarioError(f"override path {dotted!r} does not lead into the document")
            node = node[key]
        node[keys[-1]] = value

    _reject_unknown("scenario", doc, {"description", "body", "contact", "sim", "analysis"})
    for section in ("body", "contact", "sim"):
        if section not in doc:
            raise ScenarioError(f"missing scenario section {section!r}")

    body_doc = doc["body"]
    _reject_unknown("body", body_doc, {"m", "J", "J_x", "a", "a_B"})
    if ("J" in body_doc) == ("J_x" in body_doc):
        raise ScenarioError("body: give exactly one of J (3x3) or J_x")
    if ("a" in body_doc) == ("a_B" in body_doc):
        raise ScenarioError("body: give exactly one of a (probe length) or a_B (probe vector)")
    J = body_doc["J"] if "J" in body_doc else np.diag([float(body_doc["J_x"])] * 3)
    a_B = body_doc["a_B"] if "a_B" in body_doc else [0.0, 0.0, float(body_doc["a"])]
    if "m" not in body_doc:
        raise ScenarioError("body: missing m")
    body = BodyParams(m=float(body_doc["m"]), J=J, a_B=a_B)

    contact_doc = doc["contact"]
    _reject_unknown(
        "contact", contact_doc,
        {"k_v", "b_v", "alpha", "alpha_deg", "springs", "n_hat", "activation"},
    )
    for key in ("k_v", "b_v"):
        if key not in contact_doc:
            raise ScenarioError(f"contact: missing {key}")
    springs = []
    for i, spring in enumerate(contact_doc.get("springs", [])):
        _reject_unknown(f"contact.springs[{i}]", spring, {"k", "l_hat"})
        if "k" not in spring or "l_hat" not in spring:
            raise ScenarioError(f"contact.springs[{i}]: need k and l_hat")
        springs.append((float(spring["k"]), spring["l_hat"]))
    contact = ContactParams(
        k_v=float(contact_doc["k_v"]),
        b_v=float(contact_doc["b_v"]),
        alpha=_angle("contact", contact_doc, "alpha"),
        springs=tuple(springs),
        n_hat=contact_doc.get("n_hat", (0.0, 0.0, 1.0)),
        activation=contact_doc.get("activation", "unilateral"),
    )

    sim_doc = doc["sim"]
    _reject_unknown("sim", sim_doc, {"h", "dt", "t_end", "record_every", "initial"})
    for key in ("h", "t_end", "initial"):
        if key not in sim_doc:
            raise ScenarioError(f"sim: missing {key}")
    init_doc = sim_doc["initial"]
    mode = init_doc.get("mode")
    if mode == "2d":
        _reject_unknown(
            "sim.initial", init_doc,
            {"mode", "z", "v_z", "theta", "theta_deg", "omega", "y", "v_y"},
        )
        for key in ("z", "v_z", "omega"):
            if key not in init_doc:
                raise ScenarioError(f"sim.initial: missing {key}")
        initial = ChaserState2D(
            z=float(init_doc["z"]),
            v_z=float(init_doc["v_z"]),
            theta=_angle("sim.initial", init_doc, "theta"),
            omega=float(init_doc["omega"]),
            y=float(init_doc.get("y", 0.0)),
            v_y=float(init_doc.get("v_y", 0.0)),
        )
    elif mode == "3d":
        _reject_unknown("sim.initial", init_doc, {"mode", "r", "v", "d_c3", "omega"})
        for key in ("r", "v", "d_c3", "omega"):
            if key not in init_doc:
                raise ScenarioError(f"sim.initial: missing {key}")
        initial = ChaserState3D(
            r=init_doc["r"], v=init_doc["v"], d_c3=init_doc["d_c3"], omega=init_doc["omega"],
        )
    else:
        raise ScenarioError("sim.initial: mode must be '2d' or '3d'")
    sim = SimConfig(
        h=float(sim_doc["h"]),
        dt=float(sim_doc.get("dt", 1e-4)),
        t_end=float(sim_doc["t_end"]),
        initial=initial,
        record_every=int(sim_doc.get("record_every", 1)),
    )

    analysis_doc = dict(doc.get("analysis", {}))
    _reject_unknown("analysis", analysis_doc, set(ANALYSIS_DEFAULTS))
    options = {**ANALYSIS_DEFAULTS, **{k: float(v) for k, v in analysis_doc.items()}}

    body, contact, sim = validate(body, contact, sim)
    return body, contact, sim, options


class _Parser(argparse.ArgumentParser):
    """argparse maps usage errors to exit code 2; this CLI reserves 2 for
    numerical divergence, so remap command-line problems to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit((EXIT_INPUT, f"{self.prog}: error: {message}"))


def _grid(text: str) -> list[float]:
    """Parse a grid argument: 'start:stop:count' (inclusive linspace) or a
    comma-separated value list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"grid must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ScenarioError("grid count must be >= 1")
        return [float(x) for x in np.linspace(start, stop, count)]
    return [float(x) for x in text.split(",") if x.strip()]


def _write_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _events_payload(events, band: float) -> list[dict]:
    payload = []
    for ev in events:
        entry = {
            "t_in": ev.t_in,
            "t_out": ev.t_out,
            "v_minus": ev.v_minus,
            "v_plus": ev.v_plus,
            "max_depth": ev.max_depth,
        }
        if ev.v_minus != 0.0:
            res = _analysis.restitution(ev, band=band)
            entry["epsilon"] = res.epsilon
            entry["classification"] = res.classification
        else:
            entry["epsilon"] = None
            entry["classification"] = "no impact velocity"
        payload.append(entry)
    return payload


def cmd_simulate(args) -> int:
    path = scenario_path(args.scenario)
    body, contact, sim, options = load_scenario(path, args.set)
    mode = args.mode
    if mode is None:
        mode = "3d" if isinstance(sim.initial, ChaserState3D) else "2d"
    try:
        traj, events = _dynamics.simulate(
            sim, body, contact, mode=mode,
            event_window=options["averaging_window"],
        )
    except _dynamics.DivergenceError as exc:
        print(f"divergence guard: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    prefix = args.out
    _dynamics.write_trajectory_csv(traj, f"{prefix}.traj.csv")
    _write_json(
        {"events": _events_payload(events, options["neutrality_band"])},
        f"{prefix}.events.json",
    )
    meta = {
        "command": "simulate",
        "scenario": str(path),
        "overrides": list(args.set or []),
        "mode": mode,
        "samples": int(len(traj.times)),
        "events": len(events),
        "docksim_version": __version__,
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    _write_json(meta, f"{prefix}.meta.json")
    print(f"wrote {prefix}.traj.csv ({len(traj.times)} samples), "
          f"{prefix}.events.json ({len(events)} events)")
    return EXIT_OK


def cmd_stability(args) -> int:
    band = args.band
    if args.from_scenario:
        path = scenario_path(args.from_scenario)
        body, contact, sim, options = load_scenario(path, args.set)
        h = args.h if args.h is not None else sim.h
        if band is None:
            band = options["neutrality_band"]
        verdict = _stability.verdict_4th_order(
            body, contact, h, b=args.beta, band=band,
        )
        result = verdict.as_dict()
        result["scenario"] = str(path)
        if args.json:
            _write_json(result, args.out)
        else:
            pen = verdict.penetration_mode
            disp = verdict.displacement_mode
            print(f"penetration mode   (mu={pen.mu:.6g}, beta={pen.beta:.6g}, kappa={pen.kappa:.6g}): "
                  f"omega_c={pen.omega_c:.6g} rad/s, h_c={pen.h_c:.6g} s")
            print(f"displacement mode  (mu={disp.mu:.6g}, beta={disp.beta:.6g}, kappa={disp.kappa:.6g}): "
                  f"omega_c={disp.omega_c:.6g} rad/s, h_c={disp.h_c:.6g} s")
            print(f"h_c = {verdict.h_c:.6g} s (smaller of the two); at h = {h:.6g} s: {verdict.verdict}")
        return EXIT_OK
    if args.mu is None or args.beta is None or args.kappa is None:
        raise ScenarioError("stability needs --mu, --beta and --kappa (or --from-scenario)")
    result = _stability.analyze(
        args.mu, args.beta, args.kappa, h=args.h,
        n_delays=args.n_delays, band=band if band is not None else _stability.DEFAULT_NEUTRAL_BAND,
    )
    if args.json:
        _write_json(result.as_dict(), args.out)
    else:
        print(f"omega_c = {result.omega_c:.9g} rad/s")
        print(f"h_c     = {result.h_c:.9g} s")
        print("h_n     = " + ", ".join(f"{h:.9g}" for h in result.h_n) + " s")
        print(f"sigma   = {result.sigma:.9g}")
        if result.verdict is not None:
            print(f"verdict at h = {result.h:.9g} s: {result.verdict}")
    return EXIT_OK


def cmd_boundary(args) -> int:
    points = _stability.stability_boundary(
        args.axis, _grid(args.grid), mu=args.mu, beta=args.beta, kappa=args.kappa,
    )
    _stability.write_boundary_csv(points, args.out)
    failures = [p for p in points if p.error]
    print(f"wrote {args.out} ({len(points)} points, {len(failures)} failed)")
    for p in failures:
        print(f"  x = {p.x:.9g}: {p.error}", file=sys.stderr)
    return EXIT_OK


def cmd_linearize(args) -> int:
    path = scenario_path(args.scenario)
    body, contact, sim, _ = load_scenario(path, args.set)
    model = _linear.linearize_2d(body, contact, k=args.k, b=args.b)
    nominal = model.nominal
    _write_json(
        {
            "F_x": model.F_x.tolist(),
            "T": model.T.tolist(),
            "F_y": model.F_y.tolist(),
            "m_a": model.m_a,
            "k": model.k,
            "b": model.b,
            "nominal": {
                "z": nominal.z, "v_z": nominal.v_z,
                "theta": nominal.theta, "omega": nominal.omega,
            },
        },
        args.out,
    )
    return EXIT_OK


def _read_trajectory_csv(path: str) -> _dynamics.Trajectory:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if header == _dynamics.TRAJ_COLUMNS_2D:
        n = data.shape[0]
        states = np.zeros((n, 6))
        states[:, 0:4] = data[:, 1:5]
        return _dynamics.Trajectory(
            mode="2d", times=data[:, 0], states=states,
            d=data[:, 5], d_dot=data[:, 6], f=data[:, 7], tau=data[:, 8],
            in_contact=data[:, 5] < 0.0,
        )
    if header == _dynamics.TRAJ_COLUMNS_3D:
        return _dynamics.Trajectory(
            mode="3d", times=data[:, 0], states=data[:, 1:13],
            d=data[:, 13], d_dot=data[:, 14], f=data[:, 15], tau=data[:, 16:19],
            in_contact=data[:, 13] < 0.0,
        )
    raise ScenarioError(f"{path}: unrecognized trajectory header")


def cmd_energy(args) -> int:
    measured = _read_trajectory_csv(args.measured)
    commanded = _read_trajectory_csv(args.commanded)
    if len(measured.times) != len(commanded.times):
        raise ScenarioError(
            f"row count mismatch: {args.measured} has {len(measured.times)} rows, "
            f"{args.commanded} has {len(commanded.times)}"
        )
    streams = _analysis.streams_from_trajectories(measured, commanded, dt=args.dt)
    record = _analysis.observed_energy(streams, dt=args.dt, tolerance=args.tolerance)
    _analysis.write_energy_csv(record, args.out)
    print(f"wrote {args.out} ({len(record.total)} samples, final dE = {record.total[-1]:.9g} J, "
          f"{record.classification[-1]})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="docksim",
        description="Delayed contact-dynamics docking simulator and stability analysis. "
                    "Units are SI (kg, m, s, N, rad); scenario keys suffixed _deg take degrees.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a scenario, write trajectory CSV + events JSON")
    p.add_argument("scenario", help="scenario file path or bundled name (e.g. table1.json)")
    p.add_argument("--mode", choices=["2d", "3d"], default=None,
                   help="integration model (default: the initial state's mode)")
    p.add_argument("--out", required=True, help="output prefix for .traj.csv/.events.json/.meta.json")
    p.add_argument("--set", action="append", metavar="PATH=VALUE",
                   help="override a scenario entry, e.g. contact.b_v=60 (repeatable)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stability", help="pole-location analysis of the delay system")
    p.add_argument("--mu", type=float, help="mass coefficient [kg]")
    p.add_argument("--beta", type=float, help="damping coefficient [N*s/m] "
                   "(with --from-scenario: override the virtual damping)")
    p.add_argument("--kappa", type=float, help="stiffness coefficient [N/m]")
    p.add_argument("--h", type=float, default=None, help="delay to judge [s]")
    p.add_argument("--from-scenario", default=None,
                   help="derive both subsystems from a scenario file")
    p.add_argument("--set", action="append", metavar="PATH=VALUE", help="scenario override")
    p.add_argument("--n-delays", type=int, default=5, help="number of crossing delays to list")
    p.add_argument("--band", type=float, default=None,
                   help="relative neutrality band around h_c (default 0.01)")
    p.add_argument("--json", action="store_true", help="emit the result as JSON")
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("boundary", help="neutral-stability curve along one parameter axis")
    p.add_argument("--axis", required=True, choices=["beta", "kappa", "mu"])
    p.add_argument("--mu", type=float, default=None, help="fixed mass [kg]")
    p.add_argument("--beta", type=float, default=None, help="fixed damping [N*s/m]")
    p.add_argument("--kappa", type=float, default=None, help="fixed stiffness [N/m]")
    p.add_argument("--grid", required=True, help="start:stop:count or comma list")
    p.add_argument("--out", required=True, help="curve CSV path")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("linearize", help="dump F_x, T, F_y and m_a for a scenario")
    p.add_argument("scenario")
    p.add_argument("--k", type=float, default=None,
                   help="analysis stiffness override [N/m] (default: k_v plus the "
                        "compliance-device upper bound)")
    p.add_argument("--b", type=float, default=None, help="analysis damping override [N*s/m]")
    p.add_argument("--set", action="append", metavar="PATH=VALUE", help="scenario override")
    p.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_linearize)

    p = sub.add_parser("energy", help="observed-energy monitor over a measured/commanded pair")
    p.add_argument("--measured", required=True, help="measured trajectory CSV")
    p.add_argument("--commanded", required=True, help="commanded trajectory CSV")
    p.add_argument("--dt", type=float, default=_analysis.DEFAULT_SAMPLE_TIME,
                   help="monitor sample time [s]")
    p.add_argument("--tolerance", type=float, default=_analysis.DEFAULT_LOSSLESS_TOL,
                   help="lossless band [J]")
    p.add_argument("--out", required=True, help="energy CSV path")
    p.set_defaults(func=cmd_energy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, tuple):
            code, message = exc.code
            print(message, file=sys.stderr)
            return code
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ScenarioError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
