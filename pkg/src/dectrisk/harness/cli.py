"""Command-line entry point: ``dectrisk {mesh,run,verify,converge,schemes}``."""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ..errors import ConfigError, DecError
from ..mesh import save_mesh, validate_mesh
from ..swe_core import (PRESETS, SchemeConfig, build_operators, diagnostics, height_point,
                        linear_model, linearized_tendencies, nonlinear_model)
from ..timestep import run as run_steps
from .config import RunConfig, build_physics, load_config, resolve_mesh, with_overrides
from .convergence import FAMILIES, OPERATORS, convergence_study
from .initial import DEFAULTS as IC_DEFAULTS
from .initial import initial_condition
from .output import DiagnosticsRecorder, write_diagnostics, write_snapshot, write_vtk
from .verify import DEFAULT_MESHES, verify


def _parser():
    p = argparse.ArgumentParser(prog="dectrisk", description="Mimetic shallow-water schemes on periodic meshes.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", help="generate or load a mesh, validate it and optionally save it")
    m.add_argument("--mesh", required=True, help="generator spec (quad:N[:spacing], trihex:N[:spacing]) or file")
    m.add_argument("--out", help="write the mesh to this file")

    r = sub.add_parser("run", help="simulate from a YAML config plus overrides")
    r.add_argument("--config", help="YAML run configuration")
    r.add_argument("--mesh")
    r.add_argument("--scheme", choices=sorted(PRESETS))
    r.add_argument("--ic", choices=sorted(IC_DEFAULTS), help="initial condition preset (default parameters)")
    r.add_argument("--model", choices=("nonlinear", "linear"))
    r.add_argument("--steps", type=int)
    r.add_argument("--dt", type=float)
    r.add_argument("--seed", type=int, help="seed for initial conditions that draw random numbers")
    r.add_argument("--out", help="output directory")

    v = sub.add_parser("verify", help="run the operator and conservation property suite")
    v.add_argument("--mesh", action="append", help="mesh spec; repeat for several (default: the standard three)")
    v.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("converge", help="measure operator convergence against analytic oracles")
    c.add_argument("--operator", action="append", choices=OPERATORS,
                   help="repeat for several (default: divergence, curl, gradient)")
    c.add_argument("--family", choices=FAMILIES, default="quad")
    c.add_argument("--sizes", type=int, nargs="+", default=[8, 16, 32])

    sub.add_parser("schemes", help="list scheme presets and their operator choices")
    return p


def cmd_mesh(args):
    mesh = resolve_mesh(args.mesh)
    t = mesh.topology
    print(f"{mesh.label}: V={t.n_vertices} E={t.n_edges} C={t.n_cells} "
          f"euler={t.euler_characteristic} orthogonal={mesh.orthogonal}")
    failures = validate_mesh(mesh)
    for f in failures:
        print(f"invalid: {f}")
    if failures:
        return 1
    print("valid")
    if args.out:
        save_mesh(mesh, args.out)
        print(f"saved {args.out}")
    return 0


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = with_overrides(cfg, mesh=args.mesh, scheme=args.scheme, ic=args.ic, model=args.model,
                         steps=args.steps, dt=args.dt, out=args.out)
    if args.seed is not None:
        if "seed" not in IC_DEFAULTS[cfg.initial.preset]:
            raise ConfigError(f"initial condition {cfg.initial.preset!r} takes no seed")
        cfg.initial.params = {**cfg.initial.params, "seed": args.seed}
    return cfg


def cmd_run(args):
    cfg = _run_config(args)
    mesh = resolve_mesh(cfg.mesh)
    ops = build_operators(mesh, cfg.scheme_config())
    physics = build_physics(cfg.physics, mesh)
    state, physics = initial_condition(cfg.initial.preset, cfg.initial.params, mesh, physics, ops)
    mean_depth = float(height_point(state, ops).values.mean())
    if cfg.initial.preset == "geostrophic-balance":
        tend = linearized_tendencies(state, physics, ops, mean_depth)
        print(f"linear tendency norms: |du/dt|_max = {np.max(np.abs(tend.u.values)):.3e}  "
              f"|dh/dt|_max = {np.max(np.abs(tend.h.values)):.3e}")
    if cfg.model == "linear":
        model = linear_model(physics, ops, mean_depth)
    else:
        model = nonlinear_model(physics, ops)
    out = cfg.output
    os.makedirs(out.directory, exist_ok=True)
    recorder = DiagnosticsRecorder(physics, ops, model)
    callbacks = [recorder]
    if out.snapshot_cadence:
        def snapshot(step, s):
            if step % out.snapshot_cadence == 0:
                write_snapshot(mesh, s, out.directory, step)
                if out.vtk:
                    write_vtk(mesh, s, os.path.join(out.directory, f"h_{step:06d}.vtk"))
        callbacks.append(snapshot)
    result = run_steps(state, cfg.integrator, cfg.steps, model, callbacks, out.cadence)
    path = os.path.join(out.directory, "diagnostics.csv")
    write_diagnostics(recorder.rows, path)
    first, last = diagnostics(result.initial, physics, ops), diagnostics(result.final, physics, ops)
    print(f"{mesh.label} {ops.scheme.name} ({ops.scheme.describe()}), {cfg.model} model, "
          f"{cfg.integrator.kind} dt={cfg.integrator.dt:g}, {result.n_steps} steps")
    for key in ("mass", "energy", "potential_enstrophy"):
        rel = (last[key] - first[key]) / abs(first[key]) if first[key] else last[key] - first[key]
        print(f"  {key:20} {last[key]: .17g}  (relative change {rel:.3e})")
    print(f"wrote {path}")
    return 0


def cmd_verify(args):
    specs = args.mesh or list(DEFAULT_MESHES)
    ok = True
    for report in verify(specs, args.seed):
        print(report.format())
        for item in report.failures:
            print(f"FAILED: {report.mesh}: {item.group}: {item.name} = {item.value:.3e} > {item.tolerance:.0e}")
        ok = ok and report.passed
    return 0 if ok else 1


def cmd_converge(args):
    operators = args.operator or ["divergence", "curl", "gradient"]
    if len(args.sizes) < 2:
        raise ConfigError("converge needs at least 2 sizes")
    for op in operators:
        print(convergence_study(op, args.family, sorted(args.sizes)).table())
        print()
    return 0


def cmd_schemes(args):
    print(f"{'preset':14} {'Hodge':8} {'R':14} {'Q':6} {'T':14}")
    for name in PRESETS:
        s = SchemeConfig.preset(name)
        print(f"{name:14} {s.hodge:8} {s.r_kind:14} {s.q_variant:6} {s.t_kind:14}")
    return 0


COMMANDS = {"mesh": cmd_mesh, "run": cmd_run, "verify": cmd_verify, "converge": cmd_converge,
            "schemes": cmd_schemes}


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
