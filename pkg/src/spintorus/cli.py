"""Config-driven experiment runner.

``spintorus run --config cfg.json --out results/`` builds the conformal
torus described by the config, solves the Dirac spectrum, evaluates the
bound family and the exact identities on every computed eigenpair, and
writes a structured text report plus four CSV tables (spectrum, bounds,
identities, plot data).  The process exits 0 exactly when every asserted
check passed.

Config files are JSON with the following fields (see configs/ for
examples):

    dimension      2 or 3
    grid_n         points per axis, power of two
    spin_structure per-axis shifts, each 0 or 0.5
    metric_h       list of {"wavevector": [...], "cos": c, "sin": s}
    bound_h        same shape; extra test functions for the bound sweep
    ab_strategy    remark_closed_form | grid_sweep | coordinate_ascent
    eigen_count    how many eigenpairs to compute
    tolerances     {"solver", "residual", "slack", "identity"}
    seed           RNG seed (deterministic reruns)
    output_dir     default output directory

Numbers are printed with 15 significant digits, scientific notation below
1e-3, so reruns of the same config on the same platform reproduce the
outputs byte for byte (numpy/scipy FFTs are deterministic for a fixed
build and thread configuration).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from . import identities as ident_mod
from .dirac import SpinStructure, curved_spectrum, kernel_dimension
from .errors import ConfigError, SpinTorusError
from .oracles import flat_torus_spectrum, round_sphere_model, sasakian_constants
from .spinor_calculus import (
    conformal_scaling_crosscheck,
    covariant_derivative,
    energy_momentum,
    reconstruction_residual,
)
from .torus_geometry import ConformalTorus, TorusGrid

SCHEMA_VERSION = 1

_DEFAULT_TOLERANCES = {
    "solver": 1e-11,
    "residual": 1e-8,
    "slack": 1e-6,
    "identity": 1e-5,
}

AMPLITUDE_WARNING = 0.5


@dataclass
class ExperimentConfig:
    dimension: int
    grid_n: int
    spin_structure: tuple
    metric_h: tuple = ()
    bound_h: tuple = ()
    ab_strategy: str = "grid_sweep"
    eigen_count: int = 6
    tolerances: dict = field(default_factory=lambda: dict(_DEFAULT_TOLERANCES))
    seed: int = 1234
    output_dir: str = "spintorus_out"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        errors = []
        dim = raw.get("dimension")
        if dim not in (2, 3):
            errors.append(f"dimension: expected 2 or 3, got {dim!r}")
        grid_n = raw.get("grid_n")
        if not isinstance(grid_n, int) or grid_n < 8 or (grid_n & (grid_n - 1)) != 0:
            errors.append(f"grid_n: expected a power of two >= 8, got {grid_n!r}")
        elif dim == 2 and grid_n > 256:
            errors.append(f"grid_n: 2D grids capped at 256, got {grid_n}")
        elif dim == 3 and grid_n > 32:
            errors.append(f"grid_n: 3D grids capped at 32, got {grid_n}")
        shift = raw.get("spin_structure", [0.0] * (dim or 2))
        if dim in (2, 3):
            if len(shift) != dim or any(s not in (0, 0.5) for s in shift):
                errors.append(f"spin_structure: expected {dim} entries from {{0, 0.5}}, got {shift!r}")

        def check_modes(name):
            modes = []
            for entry in raw.get(name, []):
                wv = entry.get("wavevector")
                if (
                    not isinstance(wv, list)
                    or dim in (2, 3)
                    and (len(wv) != dim or any(not isinstance(k, int) for k in wv))
                ):
                    errors.append(f"{name}: bad wavevector {wv!r}")
                    continue
                if isinstance(grid_n, int) and grid_n >= 8 and any(abs(k) >= grid_n // 2 for k in wv):
                    errors.append(f"{name}: wavevector {wv} outside Nyquist box for grid_n={grid_n}")
                    continue
                modes.append((tuple(wv), float(entry.get("cos", 0.0)), float(entry.get("sin", 0.0))))
            amplitude = sum(abs(a) + abs(b) for _, a, b in modes)
            if amplitude > AMPLITUDE_WARNING:
                print(
                    f"warning: {name} amplitude bound {amplitude:.3f} exceeds "
                    f"{AMPLITUDE_WARNING}; aliasing tolerances are calibrated for |h| <= 0.5",
                    file=sys.stderr,
                )
            return tuple(modes)

        metric_h = check_modes("metric_h")
        bound_h = check_modes("bound_h")
        strategy = raw.get("ab_strategy", "grid_sweep")
        if strategy not in ("remark_closed_form", "grid_sweep", "coordinate_ascent"):
            errors.append(f"ab_strategy: unknown strategy {strategy!r}")
        eigen_count = raw.get("eigen_count", 6)
        if not isinstance(eigen_count, int) or eigen_count < 1:
            errors.append(f"eigen_count: expected positive integer, got {eigen_count!r}")
        tolerances = dict(_DEFAULT_TOLERANCES)
        tolerances.update(raw.get("tolerances", {}))
        seed = raw.get("seed", 1234)
        if not isinstance(seed, int):
            errors.append(f"seed: expected integer, got {seed!r}")
        if errors:
            raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
        return cls(
            dimension=dim,
            grid_n=grid_n,
            spin_structure=tuple(float(s) for s in shift),
            metric_h=metric_h,
            bound_h=bound_h,
            ab_strategy=strategy,
            eigen_count=eigen_count,
            tolerances=tolerances,
            seed=seed,
            output_dir=raw.get("output_dir", "spintorus_out"),
        )


@dataclass
class RunReport:
    config: ExperimentConfig
    spectrum: list
    bound_reports: list
    identity_reports: list
    classifications: list
    plot_fields: dict
    timings: dict

    @property
    def all_passed(self) -> bool:
        slack_tol = self.config.tolerances["slack"]
        bounds_ok = all(r.slack >= -slack_tol for r in self.bound_reports)
        idents_ok = all(r.passed for r in self.identity_reports)
        residual_tol = self.config.tolerances["residual"]
        residuals_ok = all(p.residual <= residual_tol for p in self.spectrum)
        return bounds_ok and idents_ok and residuals_ok


def fmt(x) -> str:
    """15 significant digits; scientific notation below 1e-3."""
    x = float(x)
    if x != x:
        return "nan"
    if abs(x) < 1e-3:
        return f"{x:.14e}"
    return f"{x:.15g}"


def run(config: ExperimentConfig) -> RunReport:
    grid = TorusGrid(dim=config.dimension, n=config.grid_n)
    metric = (
        ConformalTorus.from_modes(grid, config.metric_h)
        if config.metric_h
        else ConformalTorus.flat(grid)
    )
    spin = SpinStructure(config.spin_structure)
    tols = config.tolerances
    timings = {}

    t0 = time.perf_counter()
    pairs = curved_spectrum(
        metric,
        spin,
        config.eigen_count,
        tol=tols["solver"],
        residual_tol=tols["residual"],
        seed=config.seed,
    )
    timings["spectrum_s"] = time.perf_counter() - t0

    bound_h_fields = []
    for mode in config.bound_h:
        bound_h_fields.append(ConformalTorus.from_modes(grid, [mode]).h)

    t0 = time.perf_counter()
    lam_sq_min = min(p.lam**2 for p in pairs)
    bound_reports = []
    friedrich = bounds_mod.friedrich_rhs(grid.dim, float(metric.scalar_curvature.min()))
    bound_reports.append(
        bounds_mod.BoundReport(
            bound_name="friedrich", rhs=friedrich, lambda_sq=lam_sq_min, h_label="zero"
        )
    )
    sweep = bounds_mod.maximize_bound(
        metric, lam_sq_min, strategy=config.ab_strategy, extra_h=tuple(bound_h_fields)
    )
    bound_reports.append(sweep)

    identity_reports = []
    classifications = []
    emfs = []
    for pair in pairs:
        jet = covariant_derivative(pair, metric)
        emf = energy_momentum(jet)
        emfs.append(emf)
        em_sweep = bounds_mod.maximize_bound(
            metric,
            pair.lam**2,
            emf=emf,
            strategy=config.ab_strategy,
            extra_h=tuple(bound_h_fields),
        )
        bound_reports.append(em_sweep)
        if grid.dim == 3:
            mu1, _ = bounds_mod.yamabe_mu1(metric, seed=config.seed)
            bound_reports.append(
                bounds_mod.BoundReport(
                    bound_name="em_yamabe",
                    rhs=bounds_mod.em_yamabe_rhs(metric, emf, mu1=mu1),
                    lambda_sq=pair.lam**2,
                    h_label="yamabe",
                )
            )
        identity_reports.append(
            ident_mod.pointwise_eigenvalue_identity(metric, emf, tol=tols["identity"])
        )
        if grid.dim == 2:
            gb = ident_mod.gauss_bonnet_identities_2d(metric, emf, tol=tols["identity"])
            identity_reports.append(gb["integral_identity"])
            identity_reports.append(gb["det_integral"])
            identity_reports.append(
                ident_mod.euler_characteristic_bound_2d(metric, emf, tol=tols["slack"])
            )
        else:
            identity_reports.append(
                ident_mod.volume_energy_inequality_3d(metric, emf, tol=tols["slack"])
            )
        crosscheck = conformal_scaling_crosscheck(pair, metric)
        identity_reports.append(
            ident_mod.IdentityReport(
                identity_name="em_conformal_crosscheck",
                max_pointwise_residual=crosscheck["max_discrepancy"],
                tolerance=1e-6,
                passed=crosscheck["max_discrepancy"] <= 1e-6,
            )
        )
        recon = reconstruction_residual(jet, emf, metric)
        identity_reports.append(
            ident_mod.IdentityReport(
                identity_name="derivative_reconstruction",
                max_pointwise_residual=recon["residual"],
                support_fraction=recon["support_fraction"],
                tolerance=1e-6,
                passed=recon["residual"] <= 1e-6,
            )
        )
        classifications.append(ident_mod.classify_spinor(jet, emf, metric))
    timings["analysis_s"] = time.perf_counter() - t0

    first_emf = emfs[0]
    plot_fields = {
        "coords": grid.coordinates(),
        "psi_sq": first_emf.spinor_density,
        "em_norm_sq": first_emf.norm_sq,
        "scalar_curvature": metric.scalar_curvature,
        "identity_residual": ident_mod.pointwise_identity_residual_field(metric, first_emf),
    }
    return RunReport(
        config=config,
        spectrum=pairs,
        bound_reports=bound_reports,
        identity_reports=identity_reports,
        classifications=classifications,
        plot_fields=plot_fields,
        timings=timings,
    )


# -- output -------------------------------------------------------------------


def emit_report(report: RunReport, out_dir) -> list:
    """Write report.txt plus the four CSV tables; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    lines = [f"schema_version: {SCHEMA_VERSION}"]
    cfg = report.config
    lines.append("config:")
    for key in (
        "dimension",
        "grid_n",
        "spin_structure",
        "metric_h",
        "bound_h",
        "ab_strategy",
        "eigen_count",
        "seed",
    ):
        lines.append(f"  {key}: {getattr(cfg, key)}")
    lines.append("tolerances:")
    for key in sorted(cfg.tolerances):
        lines.append(f"  {key}: {fmt(cfg.tolerances[key])}")
    lines.append("spectrum:")
    for i, p in enumerate(report.spectrum):
        lines.append(
            f"  {i}: lambda={fmt(p.lam)} residual={fmt(p.residual)} cluster={p.cluster}"
        )
    lines.append(f"kernel_dimension: {kernel_dimension(report.spectrum)}")
    lines.append("bounds:")
    for r in report.bound_reports:
        lines.append(
            f"  {r.bound_name}: rhs={fmt(r.rhs)} lambda_sq={fmt(r.lambda_sq)} "
            f"slack={fmt(r.slack)} a={fmt(r.a)} b={fmt(r.b)} h={r.h_label} "
            f"sign_flip={r.sign_flip}"
        )
    lines.append("identities:")
    for r in report.identity_reports:
        lines.append(
            f"  {r.identity_name}: residual={fmt(r.max_pointwise_residual)} "
            f"pass={'true' if r.passed else 'false'}"
        )
    lines.append("classifications:")
    for i, c in enumerate(report.classifications):
        wk = "n/a" if c.residual_weak_killing is None else fmt(c.residual_weak_killing)
        lines.append(
            f"  {i}: label={c.label} killing={fmt(c.residual_killing)} "
            f"t_killing={fmt(c.residual_t_killing)} "
            f"weak_t_killing={fmt(c.residual_weak_t_killing)} weak_killing={wk} "
            f"trace_defect={fmt(c.trace_constancy_defect)}"
        )
    lines.append("timings:")
    for key in sorted(report.timings):
        lines.append(f"  {key}: {report.timings[key]:.2f}")
    lines.append(f"all_passed: {'true' if report.all_passed else 'false'}")
    report_path = out / "report.txt"
    report_path.write_text("\n".join(lines) + "\n")
    paths.append(report_path)

    spectrum_path = out / "spectrum.csv"
    rows = ["index,lambda,residual"]
    rows += [f"{i},{fmt(p.lam)},{fmt(p.residual)}" for i, p in enumerate(report.spectrum)]
    spectrum_path.write_text("\n".join(rows) + "\n")
    paths.append(spectrum_path)

    bounds_path = out / "bounds.csv"
    rows = ["name,a,b,h_tag,rhs,lambda_sq,slack"]
    rows += [
        f"{r.bound_name},{fmt(r.a)},{fmt(r.b)},{r.h_label}"
        f"{'-flipped' if r.sign_flip else ''},{fmt(r.rhs)},{fmt(r.lambda_sq)},{fmt(r.slack)}"
        for r in report.bound_reports
    ]
    bounds_path.write_text("\n".join(rows) + "\n")
    paths.append(bounds_path)

    identities_path = out / "identities.csv"
    rows = ["name,residual,pass"]
    rows += [
        f"{r.identity_name},{fmt(r.max_pointwise_residual)},{'true' if r.passed else 'false'}"
        for r in report.identity_reports
    ]
    identities_path.write_text("\n".join(rows) + "\n")
    paths.append(identities_path)

    plot_path = out / "plotdata.csv"
    coords = report.plot_fields["coords"]
    dim = len(coords)
    header = ",".join([f"x{j + 1}" for j in range(dim)])
    header += ",psi_sq,em_norm_sq,scalar_curvature,identity_residual"
    rows = [header]
    flat_coords = [c.ravel() for c in coords]
    flat_fields = [
        report.plot_fields[key].ravel()
        for key in ("psi_sq", "em_norm_sq", "scalar_curvature", "identity_residual")
    ]
    for idx in range(flat_coords[0].size):
        vals = [fmt(c[idx]) for c in flat_coords] + [fmt(f[idx]) for f in flat_fields]
        rows.append(",".join(vals))
    plot_path.write_text("\n".join(rows) + "\n")
    paths.append(plot_path)
    return paths


# -- subcommands -------------------------------------------------------------


def _load_config(path: str, seed_override=None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = ExperimentConfig.from_dict(raw)
    if seed_override is not None:
        cfg.seed = seed_override
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args.config, args.seed)
    out_dir = args.out or cfg.output_dir
    report = run(cfg)
    paths = emit_report(report, out_dir)
    for r in report.identity_reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.identity_name}  "
              f"residual={fmt(r.max_pointwise_residual)}")
    slack_tol = cfg.tolerances["slack"]
    for r in report.bound_reports:
        ok = r.slack >= -slack_tol
        print(f"{'PASS' if ok else 'FAIL'}  bound:{r.bound_name}  slack={fmt(r.slack)}")
    print(f"report written to {paths[0]}")
    return 0 if report.all_passed else 1


def _cmd_oracle(args) -> int:
    if args.sphere is not None:
        model = round_sphere_model(args.dim, args.sphere)
        print(f"{model.name}: S={fmt(model.scalar_curvature)} vol={fmt(model.volume)} "
              f"lambda_1={fmt(args.dim / (2 * args.sphere))} "
              f"em_norm_sq={fmt(model.em_norm_sq)}")
        return 0
    if args.sasakian is not None:
        m, b = int(args.sasakian[0]), float(args.sasakian[1])
        data = sasakian_constants(m, b)
        print(f"sasakian m={m} b={fmt(b)}: lambda_1={fmt(data['lambda_1'])} "
              f"em_norm_sq={fmt(data['em_norm_sq'])} "
              f"lower_bound={fmt(data['em_norm_sq_lower_bound'])}")
        return 0
    shift = tuple(float(s) for s in args.shift.split(","))
    spectrum = flat_torus_spectrum(args.dim, SpinStructure(shift), cutoff=args.cutoff)
    print("lambda,multiplicity")
    for lam, mult in spectrum:
        print(f"{fmt(lam)},{mult}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config, args.seed)
    grid = TorusGrid(dim=cfg.dimension, n=cfg.grid_n)
    metric = (
        ConformalTorus.from_modes(grid, cfg.metric_h) if cfg.metric_h else ConformalTorus.flat(grid)
    )
    spin = SpinStructure(cfg.spin_structure)
    pairs = curved_spectrum(metric, spin, cfg.eigen_count, seed=cfg.seed)
    lam_sq = min(p.lam**2 for p in pairs)
    rows = ["strategy,rhs,slack,a,b,h_tag"]
    for strategy in ("remark_closed_form", "grid_sweep", "coordinate_ascent"):
        rep = bounds_mod.maximize_bound(metric, lam_sq, strategy=strategy)
        rows.append(
            f"{strategy},{fmt(rep.rhs)},{fmt(rep.slack)},{fmt(rep.a)},{fmt(rep.b)},{rep.h_label}"
        )
    out_dir = Path(args.out or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    path.write_text("\n".join(rows) + "\n")
    print(f"sweep written to {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="spintorus",
        description="Dirac spectra, eigenvalue bounds and spinor identities on conformal tori",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True, help="path to JSON config")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.set_defaults(func=_cmd_run)

    p_oracle = sub.add_parser("oracle", help="print closed-form reference data")
    p_oracle.add_argument("--dim", type=int, default=2)
    p_oracle.add_argument("--shift", default="0.0,0.0", help="spin shifts, comma-separated")
    p_oracle.add_argument("--cutoff", type=float, default=4 * np.pi)
    p_oracle.add_argument("--sphere", type=float, default=None, help="round sphere radius")
    p_oracle.add_argument("--sasakian", nargs=2, default=None, metavar=("M", "B"))
    p_oracle.set_defaults(func=_cmd_oracle)

    p_sweep = sub.add_parser("sweep", help="bound optimization sweep over strategies")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpinTorusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
