"""Command-line front end: ``simulate``, ``resolvent-sweep``, ``mesh-info``, ``element-oracles``."""

import argparse
import logging
import os
import sys

import numpy as np

from . import assembly, spectral, timestepper
from .config import SimulationConfig, parse_config
from .mesh import build_plate_mesh, build_unit_square_mesh

log = logging.getLogger(__name__)

DEFAULTS = SimulationConfig()

ENERGY_COLUMNS = (
    "t", "plate_potential", "plate_kinetic", "fluid_kinetic", "total",
    "dissipation", "div_residual", "es_omega1_drift",
)


def _g(v):
    return f"{float(v):.17g}"


def _header(cfg, columns):
    return f"# config_hash={cfg.hash()} columns={','.join(columns)}\n"


def _write_table(path, cfg, columns, rows):
    with open(path, "w") as fh:
        fh.write(_header(cfg, columns))
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_g(v) for v in row) + "\n")


def _time_tag(t):
    return f"{t:.6g}"


def write_plate_snapshot(path, cfg, system, state):
    plate = system.plate
    w = plate.evaluate(system.plate_prolong @ state.omega1, plate.lagrange_nodes)
    wt = plate.evaluate(system.plate_prolong @ state.omega2, plate.lagrange_nodes)
    _write_table(path, cfg, ("x", "w", "w_t"), zip(plate.lagrange_nodes, w, wt))


def write_fluid_snapshot(path, cfg, system, state):
    mesh = system.mesh
    u1, u2 = system.fluid_velocity(state.vector())
    p = np.empty(mesh.num_nodes)
    nv = mesh.num_vertices
    p[:nv] = state.pressure
    # P1 pressure is linear along each edge, so its midpoint value is the endpoint mean
    p[nv:] = 0.5 * (state.pressure[mesh.edges[:, 0]] + state.pressure[mesh.edges[:, 1]])
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    _write_table(path, cfg, ("x", "y", "u1", "u2", "p"), zip(x, y, u1, u2, p))


def cmd_simulate(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    res = timestepper.run_simulation(cfg)
    rows = [
        (e.t, e.plate_potential, e.plate_kinetic, e.fluid_kinetic, e.total, e.dissipation, d, m)
        for e, d, m in zip(res.energies, res.div_residual, res.es_omega1_drift)
    ]
    _write_table(os.path.join(cfg.out, "energy.csv"), cfg, ENERGY_COLUMNS, rows)
    for step in sorted(res.snapshots):
        st = res.snapshots[step]
        tag = _time_tag(st.t)
        write_plate_snapshot(os.path.join(cfg.out, f"plate_{tag}.csv"), cfg, res.system, st)
        write_fluid_snapshot(os.path.join(cfg.out, f"fluid_{tag}.csv"), cfg, res.system, st)
    return res


def cmd_resolvent(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    system = assembly.apply_constraints(
        build_unit_square_mesh(cfg.n), build_plate_mesh(cfg.plate_elements)
    )
    gen = spectral.build_generator(system, cfg.eta)
    grid = spectral.log_grid(cfg.beta_min, cfg.beta_max, cfg.beta_count)
    samples = spectral.resolvent_sweep(gen, grid, workers=cfg.workers)
    fit = spectral.fit_decay_exponent(samples, cfg.beta_min, cfg.beta_max)
    _write_table(
        os.path.join(cfg.out, "sweep.csv"), cfg, ("beta", "norm"),
        ((s.beta, s.norm) for s in samples),
    )
    summary = spectral.fit_summary(fit, gen)
    with open(os.path.join(cfg.out, "fit.txt"), "w") as fh:
        fh.write(_header(cfg, ("key", "value")))
        fh.write(spectral.format_summary(summary))
    return fit


def cmd_mesh_info(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    mesh = build_unit_square_mesh(cfg.n)
    mesh.write_csv(
        os.path.join(cfg.out, "nodes.csv"), os.path.join(cfg.out, "triangles.csv"),
        comment=f"config_hash={cfg.hash()}",
    )
    plate = build_plate_mesh(cfg.plate_elements)
    print(f"fluid: n={mesh.n} vertices={mesh.num_vertices} p2_nodes={mesh.num_nodes} "
          f"triangles={mesh.num_triangles}")
    print(f"plate: elements={plate.num_elements} lagrange={plate.num_lagrange} dofs={plate.num_dofs}")
    return mesh


def cmd_element_oracles(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    bx, by = assembly.reference_divergence()
    mats = {
        "p2_mass": assembly.reference_p2_mass(),
        "p2_stiffness": assembly.reference_p2_stiffness(),
        "p1_coupling_x": bx,
        "p1_coupling_y": by,
        "hermite_mass": assembly.reference_hermite_mass(),
        "hermite_stiffness": assembly.reference_hermite_stiffness(),
    }
    comment = f"config_hash={cfg.hash()}"
    for name, a in mats.items():
        assembly.dump_matrix(os.path.join(cfg.out, f"{name}.txt"), a, comment=comment)
    return mats


COMMANDS = {
    "simulate": cmd_simulate,
    "resolvent-sweep": cmd_resolvent,
    "mesh-info": cmd_mesh_info,
    "element-oracles": cmd_element_oracles,
}


def build_parser():
    d = DEFAULTS
    p = argparse.ArgumentParser(
        prog="fsigevrey",
        description="Finite element fluid/plate interaction: time stepping and resolvent sweeps.",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="key=value file; flags override its entries")
    p.add_argument("--n", help=f"fluid grid subdivisions (default {d.n})")
    p.add_argument("--plate-elements", dest="plate_elements",
                   help="plate elements (default: same as --n)")
    p.add_argument("--dt", help=f"time step (default {d.dt:g})")
    p.add_argument("--T", dest="T", help=f"terminal time (default {d.T:g})")
    p.add_argument("--initial", help=f"sawtooth(k) | hat | randomized(seed) | zero (default {d.initial})")
    p.add_argument("--seed", help=f"seed for randomized data (default {d.seed})")
    p.add_argument("--eta", help="plate damping exponent in [0, 1] (default: undamped)")
    p.add_argument("--snapshot-times", dest="snapshot_times",
                   help="comma-separated snapshot times (default: 0,T)")
    p.add_argument("--beta-min", dest="beta_min", help=f"sweep window start (default {d.beta_min:g})")
    p.add_argument("--beta-max", dest="beta_max", help=f"sweep window end (default {d.beta_max:g})")
    p.add_argument("--beta-count", dest="beta_count",
                   help=f"log-spaced sweep points (default {d.beta_count})")
    p.add_argument("--out", help=f"output directory (default {d.out})")
    p.add_argument("--workers", help=f"sweep threads (default {d.workers})")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _diagnostic(exc):
    kind = type(exc)
    mod = kind.__module__
    name = kind.__name__ if mod == "builtins" else f"{mod}.{kind.__name__}"
    return f"error: {name}: {exc}"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        cfg = parse_config(args.config, flags)
        COMMANDS[args.command](cfg)
    except Exception as exc:  # every failure becomes one diagnostic line and a nonzero exit
        print(_diagnostic(exc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
