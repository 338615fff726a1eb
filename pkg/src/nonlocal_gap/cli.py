"""Command-line entry point: ``nonlocal-gap <command> --config run.ini --out results/``.

The configuration is an INI file with sections ``[kernel]``, ``[domain]``,
``[quadrature]`` and ``[run]``; unknown keys are rejected.  Every command
writes CSV files and a ``summary.txt`` into the output directory.

Exit codes: 0 on success, 2 when ``gap-check`` finds no sufficient
condition satisfied, 1 on any error (including a monotonicity violation
in ``converge``).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import band, galerkin, gap, quadrature
from . import kernel as kernel_mod
from .domain import Domain
from .exceptions import ConfigError, NonlocalGapError

COMMANDS = ("spectrum", "gap-check", "converge", "example-exp", "scaling-study")
QUADRATURE_KEYS = {"quad_order", "min_grid_density", "min_refinement_steps"}
RUN_KEYS = {
    "N_list", "k_max", "k_lipschitz", "basis", "scales", "p_values", "lambda_values",
    "L_grid", "validate", "grid_density",
}
EXIT_OK, EXIT_ERROR, EXIT_NO_GAP = 0, 1, 2


def fmt(x):
    return "%.17g" % x


def _ints(text, key):
    try:
        return [int(v) for v in str(text).replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"key {key!r} must be a list of integers, got {text!r}") from None


def _floats(text, key):
    try:
        return [float(v) for v in str(text).replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"key {key!r} must be a list of numbers, got {text!r}") from None


def parse_grid(text, key="L_grid"):
    """``lo:hi:steps`` to ``steps`` linearly spaced values."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"key {key!r} must look like lo:hi:steps, got {text!r}")
    try:
        lo, hi, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"key {key!r} must look like lo:hi:steps, got {text!r}") from None
    if steps < 1 or (steps > 1 and not hi > lo):
        raise ConfigError(f"key {key!r} needs hi > lo and steps >= 1")
    return list(np.linspace(lo, hi, steps))


@dataclass
class RunConfig:
    """Parsed configuration sections plus command-line overrides."""

    kernel: dict = field(default_factory=dict)
    domain: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    base_dir: Path = Path(".")
    out: Path = Path(".")
    workers: int = 1

    def make_kernel(self):
        if not self.kernel:
            raise ConfigError("configuration is missing the [kernel] section")
        return kernel_mod.from_config(self.kernel, str(self.base_dir))

    def make_domain(self):
        if not self.domain:
            raise ConfigError("configuration is missing the [domain] section")
        return Domain.from_config(self.domain)

    def get(self, key, default=None):
        return self.run.get(key, default)

    def require(self, key):
        if key not in self.run:
            raise ConfigError(f"[run] section is missing key {key!r}")
        return self.run[key]

    def quad(self, key, default):
        if key not in self.quadrature:
            return default
        value = int(self.quadrature[key])
        if value < 1:
            raise ConfigError(f"[quadrature] key {key!r} must be a positive integer")
        return value


def read_config(path):
    """Read an INI file into a :class:`RunConfig` (no overrides applied)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file {str(path)!r} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration {str(path)!r}: {exc}") from None
    allowed = {"kernel": None, "domain": None, "quadrature": QUADRATURE_KEYS, "run": RUN_KEYS}
    cfg = RunConfig(base_dir=path.parent)
    for section in parser.sections():
        if section not in allowed:
            raise ConfigError(f"unknown section [{section}] in {str(path)!r}")
        items = dict(parser.items(section))
        keys = allowed[section]
        if keys is not None:
            unknown = set(items) - keys
            if unknown:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
        setattr(cfg, section, items)
    return cfg


def write_csv(path, header, rows, preamble=()):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in preamble:
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_summary(cfg, lines):
    lines = [f"workers={cfg.workers}"] + list(lines)
    (cfg.out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _coords_header(n):
    return ["x"] if n == 1 else [f"x{k}" for k in range(n)]


def _spectrum(cfg, kern, dom):
    density = max(cfg.quad("min_grid_density", 0), quadrature.DEFAULT_GRID_DENSITY[dom.dimension])
    steps = max(cfg.quad("min_refinement_steps", 0), quadrature.DEFAULT_REFINEMENT_STEPS)
    return band.continuous_spectrum(kern, dom, density, steps)


def cmd_spectrum(cfg):
    kern, dom = cfg.make_kernel(), cfg.make_domain()
    spec = _spectrum(cfg, kern, dom)
    pts, vals = spec.b_samples
    write_csv(
        cfg.out / "band.csv",
        _coords_header(dom.dimension) + ["b"],
        [list(map(float, p)) + [float(v)] for p, v in zip(pts, vals)],
        preamble=[f"sup_sigma_c={fmt(spec.sup_sigma_c)}", f"inf_sigma_c={fmt(spec.inf_sigma_c)}"],
    )
    write_summary(cfg, [
        f"sup_sigma_c={fmt(spec.sup_sigma_c)}",
        f"inf_sigma_c={fmt(spec.inf_sigma_c)}",
        "argmin_b=" + " ".join(fmt(v) for v in spec.argmin_b),
    ])
    return EXIT_OK


def cmd_gap_check(cfg):
    kern, dom = cfg.make_kernel(), cfg.make_domain()
    spec = _spectrum(cfg, kern, dom)
    k = cfg.get("k_lipschitz")
    reports = gap.check_all(kern, dom, None if k is None else int(k), spectrum=spec)
    write_csv(
        cfg.out / "gap_report.csv",
        ["condition", "lhs", "rhs", "holds", "margin"],
        [[r.condition, r.lhs, r.rhs, str(r.holds).lower(), r.margin] for r in reports],
    )
    lines = [f"sup_sigma_c={fmt(spec.sup_sigma_c)}"]
    for r in reports:
        lines.append(f"{r.condition}: holds={str(r.holds).lower()} margin={fmt(r.margin)} "
                     f"energy_lower_bound={fmt(r.energy_lower_bound)} ({r.witness})")
    write_summary(cfg, lines)
    return EXIT_OK if any(r.holds for r in reports) else EXIT_NO_GAP


def cmd_converge(cfg):
    kern, dom = cfg.make_kernel(), cfg.make_domain()
    N_list = _ints(cfg.require("N_list"), "N_list")
    k_max = int(cfg.require("k_max"))
    kind = cfg.get("basis", "broken")
    order = galerkin.galerkin_order(dom, max(N_list), kind)
    order = max(order, cfg.quad("quad_order", 0))
    spec = _spectrum(cfg, kern, dom)
    table = galerkin.converge(kern, dom, N_list, k_max, order=order, kind=kind, spectrum=spec)
    write_csv(
        cfg.out / "convergence.csv",
        ["N", "k", "beta", "residual", "margin"],
        [[r.N, r.k, r.beta, r.residual, r.margin] for r in table.rows],
    )
    density = int(cfg.get("grid_density", quadrature.DEFAULT_GRID_DENSITY[dom.dimension]))
    grid = dom.closure_grid(density)
    pairs = table.pairs[N_list[-1]]
    values = np.column_stack([p(grid) for p in pairs])
    write_csv(
        cfg.out / "eigenfunctions.csv",
        _coords_header(dom.dimension) + [f"v{p.index}" for p in pairs],
        [list(map(float, x)) + list(map(float, v)) for x, v in zip(grid, values)],
    )
    lines = [f"sup_sigma_c={fmt(spec.sup_sigma_c)}", f"quad_order={order}", f"basis={kind}",
             f"monotone={str(table.monotone).lower()}"]
    for p in pairs:
        lines.append(f"beta_{p.index}^{N_list[-1]}={fmt(p.value)} margin={fmt(p.value - spec.sup_sigma_c)} "
                     f"multiplicity={p.multiplicity}")
    for k, a, b, ba, bb in table.violations:
        lines.append(f"monotonicity violation k={k}: beta(N={a})={fmt(ba)} > beta(N={b})={fmt(bb)}")
    write_summary(cfg, lines)
    if not table.monotone:
        print("error: Galerkin eigenvalues decreased with N; raise quad_order", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_example_exp(cfg, args):
    p_values = args.p if args.p is not None else _floats(cfg.get("p_values", "1"), "p_values")
    lam_values = args.lam if args.lam is not None else _floats(cfg.get("lambda_values", "1"), "lambda_values")
    L_values = parse_grid(args.L_grid, "--L-grid") if args.L_grid else parse_grid(cfg.get("L_grid", "0.1:10:5"))
    validate = str(cfg.get("validate", "true")).strip().lower() in ("1", "true", "yes")
    rows, lines = [], []
    for p in p_values:
        for lam in lam_values:
            for L in L_values:
                r = gap.example_exp_delta(p, lam, L, validate)
                rows.append([r.p, r.lam, r.L, r.eta, r.delta])
    write_csv(cfg.out / "delta_sweep.csv", ["p", "lambda", "L", "eta", "delta"], rows)
    for p in p_values:
        if p > 1:
            for lam in lam_values:
                eta0 = gap.example_exp_threshold(p, lam)
                line = f"eta_threshold={fmt(eta0)} p={fmt(p)} lambda={fmt(lam)}"
                print(line)
                lines.append(line)
    neg = sum(1 for r in rows if not r[4] > 0)
    write_summary(cfg, lines + [f"points={len(rows)}", f"nonpositive_delta={neg}"])
    return EXIT_OK


def cmd_scaling_study(cfg):
    kern, dom = cfg.make_kernel(), cfg.make_domain()
    scales = _floats(cfg.require("scales"), "scales")
    density = max(cfg.quad("min_grid_density", 0), quadrature.DEFAULT_GRID_DENSITY[dom.dimension])
    steps = max(cfg.quad("min_refinement_steps", 0), quadrature.DEFAULT_REFINEMENT_STEPS)
    table = band.retained_mass_scaling_study(kern, dom, scales, density, steps)
    write_csv(cfg.out / "scaling.csv", ["lambda", "min_b"], [[float(s), float(v)] for s, v in table])
    mono = bool(np.all(np.diff(table[:, 1]) >= 0))
    write_summary(cfg, [f"non_decreasing={str(mono).lower()}",
                        f"min_b_at_largest_scale={fmt(table[-1, 1])}"])
    return EXIT_OK


def _list_arg(text):
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="nonlocal-gap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI configuration file", required=name != "example-exp")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--workers", type=int, default=1)
        if name == "converge":
            sp.add_argument("--N", help="comma-separated basis orders (overrides N_list)")
            sp.add_argument("--kmax", type=int, help="number of non-trivial eigenpairs")
        if name == "example-exp":
            sp.add_argument("--p", type=_list_arg, help="shape parameters")
            sp.add_argument("--lambda", dest="lam", type=_list_arg, help="rate parameters")
            sp.add_argument("--L-grid", dest="L_grid", help="lo:hi:steps, linearly spaced")
        if name in ("gap-check", "spectrum", "scaling-study"):
            sp.add_argument("--lambda", dest="lam", type=float, help="override the kernel rate")
            sp.add_argument("--p", type=float, help="override the kernel shape")
    return parser


def run(argv=None):
    """Run one command; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        cfg = read_config(args.config) if args.config else RunConfig()
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg.workers = args.workers
        cfg.out = Path(args.out)
        cfg.out.mkdir(parents=True, exist_ok=True)
        if args.command == "converge":
            if args.N:
                cfg.run["N_list"] = args.N
            if args.kmax is not None:
                cfg.run["k_max"] = str(args.kmax)
        if args.command in ("gap-check", "spectrum", "scaling-study"):
            if args.lam is not None:
                cfg.kernel["lambda"] = str(args.lam)
            if args.p is not None:
                cfg.kernel["p"] = str(args.p)
        if args.command == "spectrum":
            return cmd_spectrum(cfg)
        if args.command == "gap-check":
            return cmd_gap_check(cfg)
        if args.command == "converge":
            return cmd_converge(cfg)
        if args.command == "example-exp":
            return cmd_example_exp(cfg, args)
        return cmd_scaling_study(cfg)
    except (NonlocalGapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
