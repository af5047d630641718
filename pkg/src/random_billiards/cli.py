"""Command-line front door: run any experiment and export it as CSV.

Subcommands
    two-masses simulate | kernel | spectrum | gap-scan | evolve | moments
    spring     simulate
    cell       simulate | spectrum     (--cell dumbbell --gamma G, or --cell-file)
    gibbs      sample-wall | sample-stationary

Common flags: --seed (default 0), --out (default stdout), --config (a
key = value file whose entries are overridden by flags), --plot PATH
(render a matplotlib figure of the same data next to the CSV).

Every run writes one header comment line with the package version, the
seed, and the full resolved configuration; identical invocations produce
byte-identical output.  Floats are written with 17 significant digits.
Exit codes: 0 success, 2 argument or configuration error, 3 numeric or
simulation failure.
"""

import argparse
import io
import math
import sys

import numpy as np

from . import __version__
from .cells import dumbbell_cell, estimate_cell_operator, random_scatter, random_scatter_axis, read_cell_csv
from .errors import NumericError, SimulationError
from .gibbs import (
    SpringMassParams,
    run_spring_chain,
    sample_stationary_molecule,
    sample_wall_state,
    spring_wall_spec,
)
from .laplacian import scattering_moments
from .spectra import GridSpec, discretize_nystrom, evolve_density, gap_scan, spectrum
from .stats import EmpiricalDistribution, make_stream
from .two_masses import (
    WallLaw,
    derive_params,
    kernel_K,
    kernel_kappa,
    run_chain,
    stationary_density,
)

CONFIG_KEYS = (
    "gamma",
    "sigma",
    "beta",
    "seed",
    "steps",
    "grid_n",
    "v_max",
    "samples_per_node",
    "checkpoints",
    "m1",
    "m2",
    "k",
    "l",
)


def _load_config(path: str) -> dict:
    """Parse a `key = value` file; `#` starts a comment; unknown keys rejected."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, val = line.partition("=")
            key = key.strip()
            if not eq or not key:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = val.strip()
    return values


def _csv_ints(text: str) -> list:
    try:
        return [int(part) for part in str(text).split(",") if part.strip() != ""]
    except ValueError:
        raise ValueError(f"expected a comma-separated integer list, got {text!r}")


def _csv_floats(text: str) -> list:
    try:
        return [float(part) for part in str(text).split(",") if part.strip() != ""]
    except ValueError:
        raise ValueError(f"expected a comma-separated number list, got {text!r}")


class _Resolver:
    """Parameter resolution: flag value, then config file, then default.

    Every resolved parameter is recorded in call order so the output
    header can list the full effective configuration.
    """

    def __init__(self, args, config: dict):
        self.args = args
        self.config = config
        self.resolved = []

    def get(self, name, default=None, required=False, kind=float):
        value = getattr(self.args, name, None)
        if value is None and name in self.config:
            value = self.config[name]
        if value is None:
            if required:
                flag = "--" + name.replace("_", "-")
                raise ValueError(f"missing required parameter {name!r} (use {flag})")
            value = default
        if value is None:
            return None
        if isinstance(value, str) and kind is not str:
            value = kind(value)
        self.resolved.append((name, value))
        return value

    def note(self, name, value):
        self.resolved.append((name, value))
        return value


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (list, tuple)):
        return ",".join(_fmt(v) for v in x)
    return str(x)


def _header(group: str, command: str, resolved) -> str:
    parts = [f"# random-billiards {__version__} {group} {command}"]
    parts += [f"{name}={_fmt(value)}" for name, value in resolved]
    return " ".join(parts)


def _write_output(out_path, header: str, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(header + "\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    if out_path is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(buf.getvalue())


def _two_mass_setup(res):
    gamma = res.get("gamma", required=True)
    sigma = res.get("sigma", default=1.0)
    return derive_params(gamma, sigma), sigma


def _nystrom_operator(params, grid_n: int, v_max: float):
    grid = GridSpec(grid_n, v_max)
    return discretize_nystrom(
        lambda v, u: kernel_K(v, u, params),
        lambda v: stationary_density(v, params),
        grid,
    )


def _cmd_tm_simulate(res, args):
    seed = res.get("seed", default=0, kind=int)
    params, sigma = _two_mass_setup(res)
    steps = res.get("steps", default=1000, kind=int)
    v0 = res.get("v0", default=1.0)
    chain = run_chain(v0, steps, WallLaw.gaussian(sigma), make_stream(seed), params)
    rows = [(i + 1, float(v)) for i, v in enumerate(chain)]
    return ["step", "speed"], rows, lambda P, path: P.plot_chain(chain, path)


def _cmd_tm_kernel(res, args):
    res.get("seed", default=0, kind=int)
    params, sigma = _two_mass_setup(res)
    v = res.get("v", default=1.0)
    grid_n = res.get("grid_n", default=200, kind=int)
    v_max = res.get("v_max", default=6.0 * sigma)
    nodes, _ = GridSpec(grid_n, v_max).nodes_and_weights()
    kap = np.asarray(kernel_kappa(v, nodes, params))
    big = np.asarray(kernel_K(v, nodes, params))
    rows = list(zip(nodes, kap, big))
    return (
        ["u", "kappa", "K"],
        rows,
        lambda P, path: P.plot_kernel(nodes, kap, big, v, path),
    )


def _cmd_tm_spectrum(res, args):
    res.get("seed", default=0, kind=int)
    params, sigma = _two_mass_setup(res)
    grid_n = res.get("grid_n", default=200, kind=int)
    v_max = res.get("v_max", default=6.0 * sigma)
    sp = spectrum(_nystrom_operator(params, grid_n, v_max), k=grid_n)
    rows = [(i + 1, float(val)) for i, val in enumerate(sp.eigenvalues)]
    return (
        ["index", "eigenvalue"],
        rows,
        lambda P, path: P.plot_spectrum(sp.eigenvalues, path),
    )


def _cmd_tm_gap_scan(res, args):
    res.get("seed", default=0, kind=int)
    if args.gammas is None:
        raise ValueError("missing required parameter 'gammas' (use --gammas)")
    gammas = res.note("gammas", _csv_floats(args.gammas))
    sigma = res.get("sigma", default=1.0)
    grid_n = res.get("grid_n", default=200, kind=int)
    v_max = res.get("v_max", default=6.0 * sigma)

    def system(gamma):
        return _nystrom_operator(derive_params(gamma, sigma), grid_n, v_max)

    pairs = gap_scan(system, gammas)
    rows = [(g, gap, 4.0 * g * g) for g, gap in pairs]
    gaps = [gap for _, gap in pairs]
    return (
        ["gamma", "gap", "four_gamma_sq"],
        rows,
        lambda P, path: P.plot_gap_scan(gammas, gaps, path),
    )


def _cmd_tm_evolve(res, args):
    res.get("seed", default=0, kind=int)
    params, sigma = _two_mass_setup(res)
    grid_n = res.get("grid_n", default=200, kind=int)
    v_max = res.get("v_max", default=6.0 * sigma)
    checkpoints = res.get("checkpoints", default=[1, 10, 50, 100], kind=_csv_ints)
    lo = res.get("initial_lo", default=2.0)
    hi = res.get("initial_hi", default=3.0)
    if not 0.0 <= lo < hi <= v_max:
        raise ValueError("initial interval must satisfy 0 <= lo < hi <= v_max")
    op = _nystrom_operator(params, grid_n, v_max)
    initial = EmpiricalDistribution(np.array([lo, hi]), np.array([1.0]))
    dists = evolve_density(op, initial, checkpoints)
    rows = []
    for n, dist in zip(checkpoints, dists):
        widths = np.diff(dist.edges)
        mids = 0.5 * (dist.edges[:-1] + dist.edges[1:])
        for mid, width, mass in zip(mids, widths, dist.masses):
            rows.append((n, float(mid), float(width), float(mass), float(mass / width)))
    return (
        ["checkpoint", "node", "width", "mass", "density"],
        rows,
        lambda P, path: P.plot_evolution(checkpoints, dists, path),
    )


def _cmd_tm_moments(res, args):
    seed = res.get("seed", default=0, kind=int)
    params, sigma = _two_mass_setup(res)
    zs = res.get("zs", default=[0.5, 1.0, 2.0, 3.0], kind=_csv_floats)
    spn = res.get("samples_per_node", default=20000, kind=int)
    law = res.get("law", default="gaussian", kind=str)
    if law == "gaussian":
        wall = WallLaw.gaussian(sigma)
    elif law == "bernoulli":
        wall = WallLaw.bernoulli(sigma)
    else:
        raise ValueError("law must be 'gaussian' or 'bernoulli'")
    stream = make_stream(seed)
    ests = [scattering_moments(z, params, wall, spn, stream.fork(i)) for i, z in enumerate(zs)]
    rows = [(m.z, m.e1, m.se1, m.e2, m.se2, m.e3, m.se3) for m in ests]
    return (
        ["z", "e1", "se1", "e2", "se2", "e3", "se3"],
        rows,
        lambda P, path: P.plot_moments(zs, ests, params.gamma, path),
    )


def _spring_params(res):
    return SpringMassParams(
        m1=res.get("m1", default=10.0),
        m2=res.get("m2", default=1.0),
        k=res.get("k", default=5.0),
        l=res.get("l", default=1.0),
        beta=res.get("beta", default=1.0),
    )


def _cmd_spring_simulate(res, args):
    seed = res.get("seed", default=0, kind=int)
    params = _spring_params(res)
    steps = res.get("steps", default=1000, kind=int)
    v0 = res.get("v0", default=1.0)
    draw = res.get("energy_draw", default="confined", kind=str)
    chain = run_spring_chain(v0, steps, params, make_stream(seed), energy_draw=draw)
    rows = [(i + 1, float(v)) for i, v in enumerate(chain)]
    return ["step", "speed"], rows, lambda P, path: P.plot_chain(chain, path)


def _resolve_cell(res, args):
    if args.cell_file is not None and args.cell is not None:
        raise ValueError("give either --cell or --cell-file, not both")
    if args.cell_file is not None:
        res.note("cell_file", args.cell_file)
        return read_cell_csv(args.cell_file)
    if args.cell is None:
        raise ValueError("a cell is required: --cell dumbbell --gamma G, or --cell-file PATH")
    res.note("cell", args.cell)
    gamma = res.get("gamma", required=True)
    spa = res.get("segments_per_arc", default=64, kind=int)
    return dumbbell_cell(gamma, spa)


def _angle_domain(res, args):
    domain = res.get("angle_domain", default="signed", kind=str)
    if domain not in ("signed", "axis"):
        raise ValueError("angle-domain must be 'signed' or 'axis'")
    return domain


def _cmd_cell_simulate(res, args):
    seed = res.get("seed", default=0, kind=int)
    cell = _resolve_cell(res, args)
    domain = _angle_domain(res, args)
    steps = res.get("steps", default=1000, kind=int)
    theta0 = res.get("theta0", default=(0.0 if domain == "signed" else math.pi / 2))
    stream = make_stream(seed)
    step_fn = random_scatter if domain == "signed" else random_scatter_axis
    angles = np.empty(int(steps))
    theta = float(theta0)
    for i in range(int(steps)):
        theta = step_fn(cell, theta, stream)
        angles[i] = theta
    rows = [(i + 1, float(t)) for i, t in enumerate(angles)]
    return ["step", "angle"], rows, lambda P, path: P.plot_chain(angles, path, ylabel="angle")


def _cmd_cell_spectrum(res, args):
    seed = res.get("seed", default=0, kind=int)
    cell = _resolve_cell(res, args)
    domain = _angle_domain(res, args)
    grid_n = res.get("grid_n", default=60, kind=int)
    spn = res.get("samples_per_node", default=4000, kind=int)
    if domain == "signed":
        grid = GridSpec(grid_n, math.pi / 2, "midpoint", lo=-math.pi / 2)
    else:
        grid = GridSpec(grid_n, math.pi, "midpoint", lo=0.0)
    op = estimate_cell_operator(cell, grid, spn, make_stream(seed), angle_domain=domain)
    sp = spectrum(op, k=grid_n)
    rows = [(i + 1, float(val)) for i, val in enumerate(sp.eigenvalues)]
    return (
        ["index", "eigenvalue"],
        rows,
        lambda P, path: P.plot_spectrum(sp.eigenvalues, path),
    )


def _cmd_gibbs(res, args, stationary: bool):
    seed = res.get("seed", default=0, kind=int)
    params = _spring_params(res)
    samples = res.get("samples", default=1000, kind=int)
    spec = spring_wall_spec(params)
    sampler = sample_stationary_molecule if stationary else sample_wall_state
    q, v = sampler(spec, make_stream(seed), size=samples)
    rows = [(i + 1, float(q[i, 0]), float(v[i, 0])) for i in range(int(samples))]
    return (
        ["index", "position", "velocity"],
        rows,
        lambda P, path: P.plot_samples_hist(v[:, 0], path, xlabel="velocity"),
    )


def _cmd_gibbs_wall(res, args):
    return _cmd_gibbs(res, args, stationary=False)


def _cmd_gibbs_stationary(res, args):
    return _cmd_gibbs(res, args, stationary=True)


_HANDLERS = {
    ("two-masses", "simulate"): _cmd_tm_simulate,
    ("two-masses", "kernel"): _cmd_tm_kernel,
    ("two-masses", "spectrum"): _cmd_tm_spectrum,
    ("two-masses", "gap-scan"): _cmd_tm_gap_scan,
    ("two-masses", "evolve"): _cmd_tm_evolve,
    ("two-masses", "moments"): _cmd_tm_moments,
    ("spring", "simulate"): _cmd_spring_simulate,
    ("cell", "simulate"): _cmd_cell_simulate,
    ("cell", "spectrum"): _cmd_cell_spectrum,
    ("gibbs", "sample-wall"): _cmd_gibbs_wall,
    ("gibbs", "sample-stationary"): _cmd_gibbs_stationary,
}


def _add_common(parser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    parser.add_argument("--out", default=None, help="output CSV path (default stdout)")
    parser.add_argument("--config", default=None, help="key = value configuration file")
    parser.add_argument("--plot", default=None, metavar="PATH", help="also render a figure to PATH")


def _add_cell_source(parser) -> None:
    parser.add_argument("--cell", choices=["dumbbell"], default=None, help="built-in cell family")
    parser.add_argument("--gamma", type=float, default=None, help="dumbbell mass-ratio parameter")
    parser.add_argument("--segments-per-arc", dest="segments_per_arc", type=int, default=None)
    parser.add_argument("--cell-file", dest="cell_file", default=None, help="cell geometry CSV (z,y)")
    parser.add_argument(
        "--angle-domain",
        dest="angle_domain",
        choices=["signed", "axis"],
        default=None,
        help="signed angle on (-pi/2, pi/2) or axis angle on (0, pi)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="random-billiards",
        description="Simulate wall-interaction Markov chains and export CSV reports.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", required=True, metavar="GROUP")

    tm = groups.add_parser("two-masses", help="free molecule striking a bound wall mass")
    tm_sub = tm.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = tm_sub.add_parser("simulate", help="iterate the random exit-speed map")
    _add_common(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--v0", type=float, default=None, help="initial molecule speed")

    p = tm_sub.add_parser("kernel", help="transition density kappa and symmetric kernel K")
    _add_common(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--v", type=float, default=None, help="entry speed of the kernel row")
    p.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p.add_argument("--v-max", dest="v_max", type=float, default=None)

    p = tm_sub.add_parser("spectrum", help="eigenvalues of the discretized operator")
    _add_common(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p.add_argument("--v-max", dest="v_max", type=float, default=None)

    p = tm_sub.add_parser("gap-scan", help="spectral gap against 4 gamma^2")
    _add_common(p)
    p.add_argument("--gammas", default=None, help="comma-separated gamma values")
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p.add_argument("--v-max", dest="v_max", type=float, default=None)

    p = tm_sub.add_parser("evolve", help="push a step-function law through the chain")
    _add_common(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p.add_argument("--v-max", dest="v_max", type=float, default=None)
    p.add_argument("--checkpoints", default=None, help="comma-separated step counts")
    p.add_argument("--initial-lo", dest="initial_lo", type=float, default=None)
    p.add_argument("--initial-hi", dest="initial_hi", type=float, default=None)

    p = tm_sub.add_parser("moments", help="one-collision speed-change moments")
    _add_common(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--zs", default=None, help="comma-separated evaluation speeds")
    p.add_argument("--samples-per-node", dest="samples_per_node", type=int, default=None)
    p.add_argument("--law", choices=["gaussian", "bernoulli"], default=None)

    spring = groups.add_parser("spring", help="spring-suspended wall mass")
    spring_sub = spring.add_subparsers(dest="command", required=True, metavar="COMMAND")
    p = spring_sub.add_parser("simulate", help="iterate the spring-wall collision chain")
    _add_common(p)
    p.add_argument("--m1", type=float, default=None)
    p.add_argument("--m2", type=float, default=None)
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--l", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--v0", type=float, default=None)
    p.add_argument(
        "--energy-draw",
        dest="energy_draw",
        choices=["confined", "verbatim"],
        default=None,
        help="wall-state energy law: density-of-states corrected, or plain exponential",
    )

    cell = groups.add_parser("cell", help="scattering off a periodic contour cell")
    cell_sub = cell.add_subparsers(dest="command", required=True, metavar="COMMAND")
    p = cell_sub.add_parser("simulate", help="iterate the random scattering chain")
    _add_common(p)
    _add_cell_source(p)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--theta0", type=float, default=None, help="initial angle")
    p = cell_sub.add_parser("spectrum", help="Monte Carlo operator eigenvalues")
    _add_common(p)
    _add_cell_source(p)
    p.add_argument("--grid-n", dest="grid_n", type=int, default=None)
    p.add_argument("--samples-per-node", dest="samples_per_node", type=int, default=None)

    gibbs = groups.add_parser("gibbs", help="canonical wall-state sampling")
    gibbs_sub = gibbs.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, help_text in (
        ("sample-wall", "wall states at a molecule crossing"),
        ("sample-stationary", "stationary molecule states at the wall"),
    ):
        p = gibbs_sub.add_parser(name, help=help_text)
        _add_common(p)
        p.add_argument("--m1", type=float, default=None)
        p.add_argument("--m2", type=float, default=None)
        p.add_argument("--k", type=float, default=None)
        p.add_argument("--l", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--samples", type=int, default=None)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _load_config(args.config) if args.config else {}
        res = _Resolver(args, config)
        columns, rows, plot_fn = _HANDLERS[(args.group, args.command)](res, args)
        header = _header(args.group, args.command, res.resolved)
        _write_output(args.out, header, columns, rows)
        if args.plot is not None:
            from . import plots

            plot_fn(plots, args.plot)
        return 0
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
