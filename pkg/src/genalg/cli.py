"""Batch entry point: single solves, epsilon sweeps, point-mass experiments,
the verification battery, and net classification.

Configuration is a single versioned JSON document; reports are tidy CSV plus
JSON, with matplotlib figures rendered alongside unless disabled.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plots
from .data_ingestion import (Mollifier, build_boundary, build_data,
                             constant_net, dirac_net, parse_expression,
                             viscosity_for_dirac)
from .dirichlet_solver import (SolveOptions, calibrate_estimate_constant,
                               generalized_solve, solve_regularized,
                               weak_solution_check)
from .errors import ConfigError, GenAlgError, NotWeaklySolvable
from .grid_domain import (BoundaryData, Domain, build_test_functions,
                          write_grid_csv)
from .nonlinearity import PhiSpec, phi_by_name
from .scale_ring import (EpsilonGrid, classify_net, read_net_csv,
                         validate_viscosity, write_net_csv)
from .verify import run_battery

CONFIG_VERSION = 1

_KNOWN_KEYS = {
    "version", "domain", "eps_grid", "viscosity", "phi", "f", "g", "dirac",
    "test_functions", "tolerances", "solve", "epsilon", "output_dir",
    "workers", "seed", "plots", "dump_members",
}


@dataclass
class ExperimentConfig:
    domain: Domain
    grid: EpsilonGrid
    viscosity: object                  # callable eps -> r, or ("dirac", d, q)
    phi: PhiSpec
    f_spec: object
    g_spec: object
    dirac: dict
    test_functions: int
    k_max: int
    class_tol: float
    assoc_tol: float
    weak_tol: float
    opts: SolveOptions
    epsilon: float | None
    output_dir: str
    workers: int
    seed: int
    plots: bool
    dump_members: bool

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(raw) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if raw.get("version") != CONFIG_VERSION:
            raise ConfigError(f"config version must be {CONFIG_VERSION}")
        try:
            return cls._build(raw)
        except (GenAlgError, ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid config: {exc}") from None

    @classmethod
    def _build(cls, raw: dict) -> "ExperimentConfig":
        dom_raw = raw.get("domain", {"dimension": 1, "extent": [0.0, 1.0], "n": 128})
        dim = int(dom_raw.get("dimension", 1))
        n = int(dom_raw["n"])
        if dim == 1:
            a, b = dom_raw["extent"]
            domain = Domain.interval(float(a), float(b), n)
        else:
            xb, yb = dom_raw["extent"]
            domain = Domain.rectangle(tuple(map(float, xb)), tuple(map(float, yb)), n)
        grid_raw = raw.get("eps_grid", {})
        if "values" in grid_raw:
            grid = EpsilonGrid(np.asarray(grid_raw["values"], dtype=float))
        else:
            grid = EpsilonGrid.geometric(float(grid_raw.get("eps0", 0.5)),
                                         float(grid_raw.get("ratio", 0.5)),
                                         int(grid_raw.get("levels", 24)))
        visc_raw = raw.get("viscosity", {"expression": "eps"})
        if "expression" in visc_raw:
            viscosity = parse_expression(visc_raw["expression"], variables=("eps",))
        elif "d" in visc_raw and "q" in visc_raw:
            viscosity = ("dirac", int(visc_raw["d"]), int(visc_raw["q"]))
        else:
            raise ConfigError("viscosity needs an 'expression' or 'd'+'q'")
        phi_raw = raw.get("phi", {"name": "saturated_cubic"})
        phi = phi_by_name(phi_raw["name"] if isinstance(phi_raw, dict) else str(phi_raw))
        tol_raw = raw.get("tolerances", {})
        solve_raw = raw.get("solve", {})
        opts = SolveOptions(
            picard_tol=float(tol_raw.get("picard_tol", 1e-8)),
            linear_tol=float(tol_raw.get("linear_tol", 1e-10)),
            max_principle_tol=float(tol_raw.get("max_principle_tol", 1e-7)),
            max_picard_iter=int(solve_raw.get("max_picard_iter", 500)),
            max_linear_iter=solve_raw.get("max_linear_iter"),
            damping=float(solve_raw.get("damping", 0.5)),
        )
        for name, value in (("picard_tol", opts.picard_tol),
                            ("linear_tol", opts.linear_tol),
                            ("max_principle_tol", opts.max_principle_tol)):
            if value <= 0.0:
                raise ConfigError(f"tolerance {name} must be positive")
        dirac_raw = raw.get("dirac", {})
        return cls(
            domain=domain, grid=grid, viscosity=viscosity, phi=phi,
            f_spec=raw.get("f", "0"), g_spec=raw.get("g", 0.0),
            dirac=dirac_raw,
            test_functions=int(raw.get("test_functions", 3)),
            k_max=int(tol_raw.get("k_max", 6)),
            class_tol=float(tol_raw.get("class_tol", 0.15)),
            assoc_tol=float(tol_raw.get("assoc_tol", 1e-3)),
            weak_tol=float(tol_raw.get("weak_tol", 1e-2)),
            opts=opts,
            epsilon=(float(raw["epsilon"]) if "epsilon" in raw else None),
            output_dir=str(raw.get("output_dir", "out")),
            workers=int(raw.get("workers", 0)) or 0,
            seed=int(raw.get("seed", 0)),
            plots=bool(raw.get("plots", True)),
            dump_members=bool(raw.get("dump_members", False)),
        )

    def viscosity_value(self, eps: float) -> float:
        if isinstance(self.viscosity, tuple):
            _, d, q = self.viscosity
            return float(eps ** (d + q))
        return float(self.viscosity(eps))

    def viscosity_scale(self):
        if isinstance(self.viscosity, tuple):
            _, d, q = self.viscosity
            return viscosity_for_dirac(d, q, self.grid)
        vals = np.array([self.viscosity_value(e) for e in self.grid.eps_values])
        return validate_viscosity(self.grid.net(vals), k_max=self.k_max,
                                  tol=self.class_tol)


def _resolve_workers(args, cfg: ExperimentConfig) -> int:
    if getattr(args, "workers", None):
        return max(1, int(args.workers))
    if cfg.workers:
        return max(1, cfg.workers)
    env = os.environ.get("GENALG_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"GENALG_WORKERS is not an integer: {env!r}")
    return 1


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    out = Path(args.out) if getattr(args, "out", None) else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def _write_reports_csv(reports, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(reports[0].CSV_HEADER)
        for rep in reports:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v
                             for v in rep.csv_row()])


def cmd_solve(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if cfg.epsilon is None:
        raise ConfigError("single solve needs an 'epsilon' entry")
    out = _out_dir(args, cfg)
    f = build_data(cfg.f_spec, cfg.domain)
    g = build_boundary(cfg.g_spec, cfg.domain)
    r = cfg.viscosity_value(cfg.epsilon)
    from dataclasses import replace

    u, report = solve_regularized(f, g, cfg.phi, r,
                                  replace(cfg.opts, epsilon=cfg.epsilon))
    write_grid_csv(u, out / "solution.csv")
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
    if cfg.plots:
        plots.save_solution_figure(u, out / "solution.png",
                                   title=f"solution at eps={cfg.epsilon:g}")
    _say(args, f"solved at eps={cfg.epsilon:g} (r={r:.3e}): "
               f"|u|_inf={report.u_linf:.6g}, margin={report.max_principle_margin:.2e}, "
               f"{report.picard_iters} fixed-point steps -> {out}")
    return 0


def _generalized_inputs(cfg: ExperimentConfig):
    f = build_data(cfg.f_spec, cfg.domain)
    g = build_boundary(cfg.g_spec, cfg.domain)
    F = constant_net(f, cfg.grid)
    return F, g


def cmd_sweep(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    out = _out_dir(args, cfg)
    workers = _resolve_workers(args, cfg)
    F, g = _generalized_inputs(cfg)
    scale = cfg.viscosity_scale()
    U, reports = generalized_solve(F, g, cfg.phi, scale, cfg.opts,
                                   workers=workers, k_max=cfg.k_max,
                                   tol=cfg.class_tol)
    _write_reports_csv(reports, out / "sweep.csv")
    payload = {
        "norm_class": U.norm_class.to_dict(),
        "reports": [rep.to_dict() for rep in reports],
    }
    (out / "sweep.json").write_text(json.dumps(payload, indent=2))
    (out / "norm_class.json").write_text(U.norm_class.to_json(indent=2))
    write_net_csv(U.norm_net("E"), out / "norm_net.csv")
    if cfg.dump_members:
        members_dir = out / "members"
        members_dir.mkdir(exist_ok=True)
        for j, u in enumerate(U.members):
            write_grid_csv(u, members_dir / f"solution_{j:03d}.csv")
    if cfg.plots:
        plots.save_sweep_figures(reports, out)
    _say(args, f"swept {len(reports)} eps values with {workers} worker(s); "
               f"norm net classifies {U.norm_class.tag}"
               + (f" (exponent {U.norm_class.exponent:.3f})"
                  if U.norm_class.exponent is not None else "")
               + f" -> {out}")
    return 0


def cmd_dirac(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    out = _out_dir(args, cfg)
    workers = _resolve_workers(args, cfg)
    dirac_raw = dict(cfg.dirac)
    profile = dirac_raw.get("profile", "bump")
    q = int(dirac_raw.get("q", 2))
    d = cfg.domain.dimension
    if d == 1:
        x0 = float(dirac_raw.get("x0", 0.5))
    else:
        x0 = tuple(map(float, dirac_raw.get("x0", (0.5, 0.5))))
    moll = Mollifier.build(profile, dimension=d)
    F = dirac_net(x0, moll, cfg.domain, cfg.grid)
    scale = viscosity_for_dirac(d, q, cfg.grid)
    g = build_boundary(cfg.g_spec, cfg.domain)
    U, reports = generalized_solve(F, g, cfg.phi, scale, cfg.opts,
                                   workers=workers, k_max=cfg.k_max,
                                   tol=cfg.class_tol)
    tests = build_test_functions(cfg.domain, cfg.test_functions)
    write_net_csv(scale.hyp_evidence, out / "hyp_evidence.csv")
    _write_reports_csv(reports, out / "sweep.csv")
    try:
        weak = weak_solution_check(U, F, g, scale, tests, cfg.phi,
                                   tol=cfg.weak_tol)
    except NotWeaklySolvable as exc:
        (out / "dirac_report.json").write_text(json.dumps(
            {"passed": False, "error": str(exc),
             "hyp_values": [float(v) for v in (exc.net if exc.net is not None else [])]},
            indent=2))
        _say(args, f"vanishing-data hypothesis failed: {exc}")
        return 1
    with open(out / "residuals.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["test_id", "epsilon", "residual", "bound", "resolved"])
        for entry in weak.entries:
            for j, eps in enumerate(cfg.grid.eps_values):
                resolved = bool(F.resolved[j]) if F.resolved is not None else True
                writer.writerow([entry.test_id, f"{eps:.17g}",
                                 f"{entry.residuals[j]:.17g}",
                                 f"{entry.bounds[j]:.17g}", int(resolved)])
    payload = weak.to_dict()
    payload["profile"] = profile
    payload["q"] = q
    payload["hyp_evidence_ok"] = scale.hyp_ok
    (out / "dirac_report.json").write_text(json.dumps(payload, indent=2))
    if cfg.plots:
        plots.save_residual_figure(weak.entries, cfg.grid.eps_values,
                                   out / "residual_slopes.png")
        plots.save_net_loglog_figure({"r*max(|f|,|g|)": weak.hyp_values},
                                     cfg.grid.eps_values, out / "hyp_net.png",
                                     title="vanishing-data evidence")
    slopes = ", ".join(f"{e.test_id}: {e.slope:.2f}" for e in weak.entries
                       if e.slope is not None)
    _say(args, f"point-mass experiment ({profile}, q={q}): residual slopes {slopes}; "
               f"weak check {'passed' if weak.passed else 'FAILED'} -> {out}")
    return 0 if weak.passed else 1


def cmd_verify(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    out = _out_dir(args, cfg)
    seed = args.seed if args.seed is not None else cfg.seed
    rng = np.random.default_rng(seed)
    results = run_battery(rng, opts=cfg.opts, quick=bool(getattr(args, "quick", False)))
    for res in results:
        _say(args, f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
    (out / "verify.json").write_text(json.dumps(
        {"seed": seed, "results": [r.to_dict() for r in results]}, indent=2))
    with open(out / "verify.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "passed", "detail"])
        for res in results:
            writer.writerow([res.name, int(res.passed), res.detail])
    if cfg.plots:
        for res in results:
            if res.name == "manufactured_convergence" and res.data:
                plots.save_convergence_figure((32, 64, 128, 256),
                                              res.data["errors"],
                                              out / "convergence.png")
    return 0 if all(r.passed for r in results) else 1


def cmd_classify(args) -> int:
    try:
        net = read_net_csv(args.path)
    except (OSError, ValueError) as exc:
        print(f"cannot read net: {exc}", file=sys.stderr)
        return 2
    cls = classify_net(net, k_max=args.k_max, tol=args.tol)
    print(cls.to_json(indent=2))
    return 0


def _add_common(parser: argparse.ArgumentParser, needs_config: bool = True) -> None:
    if needs_config:
        parser.add_argument("--config", required=True, help="experiment config JSON")
        parser.add_argument("--out", help="output directory (overrides the config)")
        parser.add_argument("--workers", type=int,
                            help="parallel member solves (GENALG_WORKERS also honored)")
        parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genalg",
        description="Generalized-function numerics: eps-net solves of the "
                    "degenerate Dirichlet problem -lap(Phi(u)) + u = f.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="single-viscosity solve")
    _add_common(p)
    p.set_defaults(fn=cmd_solve)
    p = sub.add_parser("sweep", help="solve along the whole epsilon grid")
    _add_common(p)
    p.set_defaults(fn=cmd_sweep)
    p = sub.add_parser("dirac", help="mollified point-mass experiment")
    _add_common(p)
    p.set_defaults(fn=cmd_dirac)
    p = sub.add_parser("verify", help="run the property battery")
    _add_common(p)
    p.add_argument("--quick", action="store_true", help="reduced trial counts")
    p.set_defaults(fn=cmd_verify)
    p = sub.add_parser("classify", help="classify a net from CSV")
    p.add_argument("path", help="CSV file with epsilon,value rows")
    p.add_argument("--k-max", type=int, default=6, dest="k_max")
    p.add_argument("--tol", type=float, default=0.15)
    _add_common(p, needs_config=False)
    p.set_defaults(fn=cmd_classify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GenAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
