"""Command line front end: mswf <subcommand> [flags].

Subcommands: packet, wpt, iwpt, flow, evolve, detect, experiment.
Exit codes: 0 success, 2 guard violation, 3 numeric failure,
4 consistency failure.  MSWF_THREADS caps the scan worker pool.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import characteristics as chars
from . import detector, experiments, grid, packets, potentials, propagator
from .errors import InputError, MswfError


def _threads() -> int:
    raw = os.environ.get("MSWF_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"MSWF_THREADS must be an integer, got '{raw}'")


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"cannot parse vector '{text}'")


def _parse_grid(text: str) -> grid.GridSpec:
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError("grid must be 'n,points,halfwidth'")
    return grid.GridSpec(int(parts[0]), int(parts[1]), float(parts[2]))


def _parse_ladder(text: str):
    if ":" in text:
        kmin, kmax = text.split(":")
        return detector.default_ladder(int(kmin), int(kmax))
    return tuple(float(v) for v in text.split(","))


def _parse_thresholds(text: str) -> detector.Thresholds:
    values = dict(experiments.DEFAULT_THRESHOLDS)
    for item in text.split(","):
        key, _, val = item.partition("=")
        if key not in values:
            raise InputError(f"unknown threshold '{key}' (have N, Nlow, R2)")
        values[key] = float(val)
    return detector.Thresholds(values["N"], values["Nlow"], values["R2"])


def _load_potential(text: str | None, n: int) -> potentials.VectorPotentialModel:
    if text is None:
        return potentials.zero_model(n)
    return potentials.model_from_json(text)


def _load_scalar(text: str | None):
    if text is None:
        return None
    return propagator.scalar_from_json(text)


def _load_config(text: str) -> dict:
    if text.lstrip().startswith("{"):
        return json.loads(text)
    return json.loads(Path(text).read_text())


# ---------------------------------------------------------------------------
# subcommands


def _cmd_packet(args) -> int:
    spec = _parse_grid(args.grid)
    packet = packets.make_scaled_packet(spec, packets.GaussianBase(args.width),
                                        args.lam, args.b)
    if args.t != 0.0:
        packet = packets.free_evolve_packet(packet, args.t)
    if args.out:
        grid.save_wfgf(packet, args.out)
    if args.csv:
        grid.gridfunction_to_csv(packet, args.csv)
    print(f"packet: lam={args.lam} b={args.b} t={args.t} "
          f"l2={packet.l2_norm()!r}")
    return 0


def _cmd_wpt(args) -> int:
    f = grid.load_wfgf(args.infile)
    window = packets.GaussianWindow(f.spec.n, args.width, args.lam, args.b, args.t)
    if args.x is not None and args.xi is not None:
        value = packets.wpt(f, window, (_parse_vector(args.x), _parse_vector(args.xi)))
        print(f"wpt: re={value.real!r} im={value.imag!r} abs={abs(value)!r}")
        return 0
    table = packets.wpt_grid(f, window)
    if not args.table_out:
        raise InputError("full-lattice transform needs --table-out <npz>")
    payload = {"values": table.values,
               "grid_points": np.array(f.spec.points),
               "grid_halfwidths": np.array(f.spec.halfwidths)}
    for i in range(f.spec.n):
        payload[f"x_axis_{i}"] = np.asarray(table.x_axes[i])
        payload[f"xi_axis_{i}"] = np.asarray(table.xi_axes[i])
    np.savez(args.table_out, **payload)
    print(f"wpt table: shape={table.values.shape} -> {args.table_out}")
    return 0


def _cmd_iwpt(args) -> int:
    data = np.load(args.table)
    points = tuple(int(m) for m in data["grid_points"])
    halfwidths = tuple(float(w) for w in data["grid_halfwidths"])
    spec = grid.GridSpec(len(points), points, halfwidths)
    n = spec.n
    table = packets.WptTable(
        spec,
        tuple(data[f"x_axis_{i}"] for i in range(n)),
        tuple(data[f"xi_axis_{i}"] for i in range(n)),
        data["values"])
    window = packets.GaussianWindow(n, args.width, args.lam, args.b, args.t)
    out = packets.inverse_wpt(table, window)
    grid.save_wfgf(out, args.out)
    print(f"iwpt: l2={out.l2_norm()!r} -> {args.out}")
    return 0


def _cmd_flow(args) -> int:
    x0 = _parse_vector(args.x)
    model = _load_potential(args.potential, len(x0))
    res = chars.flow(model, args.t0, args.target, x0, _parse_vector(args.xi),
                     args.tol)
    if args.dump_traj:
        n = model.n
        header = (["s"] + [f"x{i}" for i in range(n)] + [f"xi{i}" for i in range(n)]
                  + ["h", "RePsi", "ImPsi"])
        rows = []
        for st in res.states:
            h = chars.hamiltonian(model, st.s, st.x, st.xi)
            psi = chars.phase_density(model, st.s, st.x, st.xi)
            rows.append([st.s, *st.x, *st.xi, h, psi.real, psi.imag])
        experiments.write_csv(Path(args.dump_traj), header, rows)
    term = res.terminal
    print(f"flow: s={term.s!r} x={list(term.x)} xi={list(term.xi)} "
          f"phase={res.psi_integral!r} steps={res.stats['steps']}")
    return 0


def _cmd_evolve(args) -> int:
    u0 = grid.load_wfgf(args.infile)
    model = _load_potential(args.potential, u0.spec.n)
    scalar = _load_scalar(args.scalar_potential)
    cfg = propagator.EvolveConfig(dt=args.dt, method=args.method)
    probe_rows = []
    probe = None
    if args.probe_l2:
        def probe(t, fld):
            probe_rows.append([t, fld.l2_norm()])
    out = propagator.evolve(model, scalar, u0, args.t0, args.t1, cfg, probe=probe)
    grid.save_wfgf(out, args.out)
    if args.probe_l2:
        experiments.write_csv(Path(args.probe_l2), ["t", "l2"], probe_rows)
    print(f"evolve: t={args.t1!r} l2={out.l2_norm()!r} -> {args.out}")
    return 0


def _cmd_detect(args) -> int:
    f = grid.load_wfgf(args.infile)
    thresholds = _parse_thresholds(args.thresholds)
    ladder = _parse_ladder(args.ladder)
    sample = detector.ConicSample(_parse_vector(args.x0), _parse_vector(args.xi0),
                                  k_radius=args.k_radius,
                                  half_angle=args.cone_angle, a=args.a)
    model = _load_potential(args.potential, f.spec.n)
    b = packets.theorem_scaling_exponent(
        model.rho if model.family in ("soft-power", "rotational") else 0.0) \
        if args.b == "auto" else float(args.b)
    if args.mode == "static":
        report = detector.wf_test_static(f, sample, ladder, thresholds,
                                         args.width, b)
    else:
        report = detector.wf_test_dynamic(f, model, args.t0, sample, ladder,
                                          thresholds, args.width, b,
                                          scalar=_load_scalar(args.scalar_potential))
    payload = report.to_json_dict()
    if args.out:
        experiments.write_json(Path(args.out), payload)
    if args.csv:
        rows = list(zip(payload["lambda"], payload["mag"]))
        experiments.write_csv(Path(args.csv), ["lambda", "mag"], rows)
    print(f"detect: verdict={report.verdict} Nhat={report.n_hat!r} "
          f"R2={report.r2!r} flags={report.flags}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = _load_config(args.config)
    if args.out_dir:
        cfg["out_dir"] = args.out_dir
    cfg.setdefault("threads", _threads())
    summary = experiments.run_experiment(cfg)
    keys = [k for k in ("agreement", "fraction_not_in_wf", "all_ok") if k in summary]
    note = " ".join(f"{k}={summary[k]!r}" for k in keys)
    print(f"experiment {summary['experiment']}: {note}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mswf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("packet", help="sample a scaled (optionally evolved) window")
    p.add_argument("--grid", required=True, help="n,points,halfwidth")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.125)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=_cmd_packet)

    p = sub.add_parser("wpt", help="wave packet transform of a field file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.125)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--x", help="position, comma separated")
    p.add_argument("--xi", help="frequency, comma separated")
    p.add_argument("--table-out", help="npz output for the full lattice")
    p.set_defaults(func=_cmd_wpt)

    p = sub.add_parser("iwpt", help="inverse transform of a saved table")
    p.add_argument("--table", required=True)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--b", type=float, default=0.125)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_iwpt)

    p = sub.add_parser("flow", help="integrate the bicharacteristic flow")
    p.add_argument("--potential")
    p.add_argument("--t0", type=float, required=True)
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--xi", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--dump-traj")
    p.set_defaults(func=_cmd_flow)

    p = sub.add_parser("evolve", help="propagate a field file in time")
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--method", default="strang-split",
                   choices=["strang-split", "reference-midpoint"])
    p.add_argument("--potential")
    p.add_argument("--scalar-potential")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--probe-l2")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("detect", help="wave-front membership test at one cell")
    p.add_argument("--mode", choices=["static", "dynamic"], default="static")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--potential")
    p.add_argument("--scalar-potential")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--x0", required=True)
    p.add_argument("--xi0", required=True)
    p.add_argument("--cone-angle", type=float, default=0.2)
    p.add_argument("--k-radius", type=float, default=0.2)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--ladder", default="3:12", help="kmin:kmax or explicit list")
    p.add_argument("--b", default="auto")
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--thresholds", default="N=6,Nlow=1,R2=0.95")
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("experiment", help="run a configured experiment")
    p.add_argument("--config", required=True, help="JSON file or inline JSON")
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MswfError as exc:
        print(f"error[{exc.exit_code}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
