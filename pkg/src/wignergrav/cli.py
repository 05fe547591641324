"""Command-line front end.

Every command writes plain text (CSV or ``key = value`` records) whose header
echoes the effective configuration. Exit codes: 0 ok, 2 config error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dynamics import PolynomialPotential, classical_flow, thermal_distribution, transport
from .eigenstates import bouncer_spectrum, gravitational_coulomb_spectrum, harmonic_wavefunction
from .errors import ConfigError, WignerGravError
from .interferometer import (PATHS, endpoints, exit_port_wigner, exit_probability_exact,
                             fit_fringe, laser_phase_combination, propagate_path)
from .oracle import SplitStepConfig, default_grid, phase_scan, run_interferometer, write_ledger
from .phasespace import (marginal_momentum, marginal_position, wigner_transform, write_field_csv)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _header(command: str, cfg: RunConfig, extra=()):
    return [f"wignergrav {__version__} {command}"] + cfg.echo() + list(extra)


def _comment(lines):
    return "".join(f"# {line}\n" for line in lines)


def _emit(text: str, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _initial_field(cfg: RunConfig):
    grid = cfg.grid()
    params = cfg.params()
    kind = cfg["state"]
    if kind == "gaussian":
        return wigner_transform(cfg.gaussian().wavefunction(grid.position_grid()), grid)
    if kind == "harmonic":
        psi = harmonic_wavefunction(cfg["n"], cfg["omega"], params, grid.position_grid())
        return wigner_transform(psi.normalized(), grid)
    V = PolynomialPotential((0.0, params.m_g * params.g, 0.5 * params.m_i * cfg["omega"] ** 2))
    return thermal_distribution(params, cfg["kT"], V, grid)


def _sign_changes(values, rel=1e-6):
    v = np.asarray(values)
    v = v[np.abs(v) > rel * np.abs(v).max()]
    return int(np.sum(np.sign(v[1:]) != np.sign(v[:-1])))


def cmd_transform(cfg: RunConfig, args) -> int:
    W = _initial_field(cfg)
    grid = W.grid
    j0 = int(np.argmin(np.abs(grid.z - cfg["z0"])))
    m0 = int(np.argmin(np.abs(grid.p - cfg["p0"])))
    extra = [f"integral = {W.total():.17g}",
             f"sign_changes_positive_z = {_sign_changes(W.values[j0:, m0])}"]
    buf = io.StringIO()
    write_field_csv(W, buf, _header("transform", cfg, extra))
    _emit(buf.getvalue(), args.out)
    if args.out is not None:
        stem = Path(args.out)
        np.savetxt(stem.with_suffix(".marginal_z.csv"),
                   np.column_stack([grid.z, marginal_position(W)]),
                   fmt="%.17g", delimiter=",", header="z,P_z")
        np.savetxt(stem.with_suffix(".marginal_p.csv"),
                   np.column_stack([grid.p, marginal_momentum(W)]),
                   fmt="%.17g", delimiter=",", header="p,P_p")
    return EXIT_OK


def cmd_propagate(cfg: RunConfig, args) -> int:
    params, seq, grid = cfg.params(), cfg.sequence(), cfg.grid()
    state = cfg.gaussian() if cfg["state"] == "gaussian" else _initial_field(cfg)
    path = cfg["path"]
    if path == "free":
        W = transport(state, classical_flow(params, cfg["t"]), grid)
    elif path == "exit":
        W = exit_port_wigner(state, seq, params, grid)
    else:
        W = propagate_path(state, path, seq, params, grid)
    buf = io.StringIO()
    total = W.total()
    write_field_csv(W, buf, _header("propagate", cfg, [f"integral = {abs(total):.17g}"]))
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _oracle_cfg(cfg):
    return SplitStepConfig(cfg["oracle_steps"])


def _oracle_grid(cfg, seq, params, state):
    return default_grid(seq, params, state, min_points=cfg["oracle_points"])


def cmd_ifm(cfg: RunConfig, args) -> int:
    params, seq, state = cfg.params(), cfg.sequence(), cfg.gaussian()
    rep = exit_probability_exact(seq, params, state)
    ep = endpoints(seq, params, state.z0, state.p0)
    lines = [f"delta_phi_laser = {laser_phase_combination(seq):.17g}", rep.to_record().rstrip("\n")]
    if args.check == "oracle":
        run = run_interferometer(seq, params, None, state, _oracle_cfg(cfg),
                                 _oracle_grid(cfg, seq, params, state))
        lines.append(f"P_g1_oracle = {run.P_g1:.17g}")
        lines.append(f"oracle_discrepancy = {abs(run.P_g1 - rep.P_g1):.17g}")
    for name in ("z_u", "p_u", "z_l", "p_l", "z_i", "p_i", "delta_z", "delta_p", "delta_s", "delta_c"):
        lines.append(f"{name} = {getattr(ep, name):.17g}")
    _emit(_comment(_header("ifm", cfg)) + "\n".join(lines) + "\n", args.out)
    if args.endpoints:
        rows = "path,z,p\n" + "".join(f"{p},{getattr(ep, 'z_' + p[0]):.17g},{getattr(ep, 'p_' + p[0]):.17g}\n"
                                     for p in PATHS)
        Path(args.endpoints).write_text(_comment(_header("ifm", cfg)) + rows)
    return EXIT_OK


def _sweep_values(cfg: RunConfig, seed):
    n, lo, hi = cfg["sweep_points"], cfg["sweep_min"], cfg["sweep_max"]
    if seed is not None:
        return np.sort(np.random.default_rng(seed).uniform(lo, hi, n))
    if cfg["sweep_param"] == "delta_phi":
        return lo + (hi - lo) * np.arange(n) / n
    return np.linspace(lo, hi, n)


def _gamma_point(task):
    """One oracle run for a Gamma sweep (module level so it pickles)."""
    values, gamma = task
    cfg = RunConfig.build(values, {"Gamma": gamma})
    params, seq, state = cfg.params(), cfg.sequence(), cfg.gaussian()
    run = run_interferometer(seq, params, None, state, _oracle_cfg(cfg), _oracle_grid(cfg, seq, params, state))
    return run.P_g1


def _oracle_column(cfg, xs, jobs):
    params, seq, state = cfg.params(), cfg.sequence(), cfg.gaussian()
    if cfg["sweep_param"] == "delta_phi":
        return phase_scan(seq, params, None, state, xs, _oracle_cfg(cfg), _oracle_grid(cfg, seq, params, state))
    tasks = [(dict(cfg.values), float(x)) for x in xs]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return np.array(list(pool.map(_gamma_point, tasks)))
    return np.array([_gamma_point(t) for t in tasks])


def _exact_rows(cfg, xs):
    reps = []
    for x in xs:
        if cfg["sweep_param"] == "delta_phi":
            reps.append(exit_probability_exact(cfg.sequence().with_delta_phi(x), cfg.params(), cfg.gaussian()))
        else:
            local = RunConfig.build(cfg.values, {"Gamma": float(x)})
            reps.append(exit_probability_exact(local.sequence(), local.params(), local.gaussian()))
    return reps


def cmd_ifm_sweep(cfg: RunConfig, args) -> int:
    xs = _sweep_values(cfg, args.seed)
    reps = _exact_rows(cfg, xs)
    P = np.array([r.P_g1 for r in reps])
    cols = [xs, P, [r.contrast for r in reps], [r.beta for r in reps], [r.total_phase for r in reps]]
    names = [cfg["sweep_param"], "P_g1", "contrast", "beta", "total_phase"]
    if args.check == "oracle":
        Po = _oracle_column(cfg, xs, args.jobs)
        cols += [Po, np.abs(Po - P)]
        names += ["P_g1_oracle", "discrepancy"]
    footer = []
    if cfg["sweep_param"] == "delta_phi" and len(xs) >= 3:
        fit = fit_fringe(xs, P)
        footer = [f"fit_{k} = {v:.17g}" for k, v in fit.items()]
        if args.check == "oracle":
            footer.append(f"fit_oracle_contrast = {fit_fringe(xs, cols[5])['contrast']:.17g}")
    buf = io.StringIO()
    np.savetxt(buf, np.column_stack(cols), fmt="%.17g", delimiter=",")
    text = _comment(_header("ifm-sweep", cfg)) + ",".join(names) + "\n" + buf.getvalue() + _comment(footer)
    _emit(text, args.out)
    return EXIT_OK


def cmd_eigen(cfg: RunConfig, args) -> int:
    params = cfg.params()
    if cfg["spectrum"] == "bouncer":
        if params.g <= 0:
            raise ConfigError("the bouncer spectrum needs g > 0")
        spec = bouncer_spectrum(params, cfg["n_max"])
    else:
        spec = gravitational_coulomb_spectrum(params, cfg["M"], cfg["G_newton"], cfg["n_max"])
    _emit(spec.to_csv(_header("eigen", cfg)), args.out)
    return EXIT_OK


def cmd_oracle_compare(cfg: RunConfig, args) -> int:
    params, seq, state = cfg.params(), cfg.sequence(), cfg.gaussian()
    if cfg["sweep_param"] != "delta_phi":
        raise ConfigError("oracle-compare scans delta_phi only; set sweep_param = delta_phi")
    xs = _sweep_values(cfg, args.seed)
    grid = _oracle_grid(cfg, seq, params, state)
    Po = phase_scan(seq, params, None, state, xs, _oracle_cfg(cfg), grid)
    Pe = np.array([exit_probability_exact(seq.with_delta_phi(x), params, state).P_g1 for x in xs])
    buf = io.StringIO()
    np.savetxt(buf, np.column_stack([xs, Pe, Po, np.abs(Po - Pe)]), fmt="%.17g", delimiter=",")
    footer = [f"max_discrepancy = {np.abs(Po - Pe).max():.17g}", f"oracle_grid_points = {grid.n}"]
    text = (_comment(_header("oracle-compare", cfg)) + "delta_phi,P_exact,P_oracle,discrepancy\n"
            + buf.getvalue() + _comment(footer))
    _emit(text, args.out)
    if args.ledger:
        run = run_interferometer(seq, params, None, state, _oracle_cfg(cfg), grid)
        write_ledger(run, args.ledger)
    return EXIT_OK


HELP = {
    "transform": "Wigner transform of the configured initial state",
    "propagate": "transport the initial state along one path or assemble the exit port",
    "ifm": "exit-port report for one interferometer configuration",
    "ifm-sweep": "exit probability over a delta_phi or Gamma sweep",
    "eigen": "bouncer or gravitational Coulomb spectrum",
    "oracle-compare": "closed form against the split-step oracle over a delta_phi scan",
}

COMMANDS = {
    "transform": cmd_transform,
    "propagate": cmd_propagate,
    "ifm": cmd_ifm,
    "ifm-sweep": cmd_ifm_sweep,
    "eigen": cmd_eigen,
    "oracle-compare": cmd_oracle_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--grid", help="override grid size as NZ,NP")
    common.add_argument("--seed", type=int, help="draw sweep points at random with this seed")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--scale-mg", type=float, help="multiply the gravitational mass by this factor")
    common.add_argument("--check", choices=["oracle"], help="cross-check against the split-step oracle")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for oracle sweeps")
    common.add_argument("--endpoints", help="(ifm) also write path endpoints to this CSV")
    common.add_argument("--ledger", help="(oracle-compare) write stage snapshots to this directory")
    parser = argparse.ArgumentParser(prog="wignergrav", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def _overrides(args) -> dict:
    out = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = (s.strip() for s in item.split("=", 1))
        out[key] = val
    if args.grid:
        try:
            nz, np_ = (int(s) for s in args.grid.split(","))
        except ValueError:
            raise ConfigError(f"--grid expects NZ,NP, got {args.grid!r}") from None
        out["n_z"], out["n_p"] = str(nz), str(np_)
    if args.scale_mg is not None:
        out["m_g_scale"] = repr(args.scale_mg)
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.build(load_config(args.config), _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WignerGravError, FloatingPointError, ValueError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
