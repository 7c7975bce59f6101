"""Command-line interface: configuration ingestion, the verification and
holonomy pipelines, machine-readable reports.

Subcommands: ``verify`` (structural invariant suite), ``holonomy`` (the
full holonomy / splitting / regression / spinor pipeline), ``spinor``
(spin-representation checks for the chart), ``list-manifolds``.  Reports
are JSON with floats rendered to 17 significant digits and sorted keys,
so a fixed configuration and seed reproduce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .connection import connection_invariant_residuals
from .errors import ConfigError, DomainError, KContactError, SamplingError
from .holonomy import (
    as_samples_adapted,
    as_samples_schouten,
    compare_subalgebras,
    lie_closure,
    t_complement,
)
from .manifolds import (
    FACTOR_KINDS,
    chart_from_config,
    chart_invariant_residuals,
    random_domain_points,
)
from .spinor import (
    LIFT_LEVEL_CONSTANT,
    build_spin_rep,
    parallel_spinor_dim,
    ratio_condition,
    spin_lift,
    standard_complex_structure,
)
from .transport import (
    SamplerConfig,
    balanced_loop,
    horizontalize,
    isometry_residual,
    sample_curve,
    transport_equivalence_check,
    transport_theta,
)
from .transverse import dtheta_regression, einstein_check, factor_split, sasaki_psi_check

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_SAMPLING = 4


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Validated run configuration for every subcommand."""

    manifold: dict
    base_point: np.ndarray = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    span_tol: float = 1e-6
    ode_tol: float = 1e-6
    out: str = None

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        if "manifold" not in raw:
            raise ConfigError("config needs a 'manifold' section")
        samp = raw.get("sampler", {})
        if not isinstance(samp, dict):
            raise ConfigError("'sampler' must be an object")
        try:
            sampler = SamplerConfig(
                n_paths=int(samp.get("n_paths", 64)),
                segments=int(samp.get("segments", 4)),
                horizon=float(samp.get("horizon", 1.2)),
                magnitude=float(samp.get("magnitude", 0.45)),
                step=float(samp.get("step", 0.02)),
                seed=int(samp.get("seed", 0)),
                vertical_magnitude=float(samp.get("vertical_magnitude", 0.0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad sampler parameters: {exc}") from exc
        if sampler.n_paths < 0 or sampler.segments <= 0 or sampler.horizon <= 0:
            raise ConfigError("sampler sizes must be positive")
        if sampler.magnitude < 0 or sampler.step <= 0:
            raise ConfigError("sampler magnitude/step must be positive")
        tols = raw.get("tolerances", {})
        base = raw.get("base_point")
        return cls(
            manifold=raw["manifold"],
            base_point=None if base is None else np.asarray(base, dtype=float),
            sampler=sampler,
            span_tol=float(tols.get("span_tol", 1e-6)),
            ode_tol=float(tols.get("ode_tol", 1e-6)),
            out=raw.get("outputs", {}).get("report") if isinstance(raw.get("outputs"), dict) else None,
        )


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(raw)


def _resolve_chart(cfg: RunConfig):
    chart = chart_from_config(cfg.manifold)
    x0 = cfg.base_point if cfg.base_point is not None else chart.origin()
    if len(x0) != chart.dim:
        raise ConfigError(
            f"base_point has {len(x0)} coordinates, chart needs {chart.dim}"
        )
    if not chart.domain.contains(x0):
        raise DomainError(f"base point outside the chart domain: {x0}", point=x0)
    return chart, np.asarray(x0, dtype=float)


# ---------------------------------------------------------------------------
# deterministic JSON


def render_report(obj):
    """Serialize a report with sorted keys and 17-significant-digit floats."""
    return _render(obj) + "\n"


def _render(obj):
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        inner = ", ".join(f"{json.dumps(str(k))}: {_render(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = obj.tolist() if isinstance(obj, np.ndarray) else list(obj)
        return "[" + ", ".join(_render(v) for v in seq) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            return json.dumps(None)
        return format(v, ".17g")
    return json.dumps(obj)


def _emit(report, out_path):
    text = render_report(report)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# pipelines


def _check(residual, tol, larger_is_better=False):
    ok = residual > tol if larger_is_better else residual <= tol
    return {"residual": float(residual), "tolerance": float(tol), "pass": bool(ok)}


def verify_report(cfg: RunConfig, n_points=50):
    """Structural residual suite over random domain points."""
    chart, x0 = _resolve_chart(cfg)
    rng = np.random.default_rng(cfg.sampler.seed)
    pts = random_domain_points(chart, n_points, rng, margin=0.95)
    man = chart_invariant_residuals(chart, pts)
    con = connection_invariant_residuals(chart, pts)
    checks = {
        "theta_xi_normalization": _check(man["theta_xi"], 1e-10),
        "theta_annihilates_frame": _check(man["theta_frame"], 1e-10),
        "metric_min_eigenvalue": _check(man["spd_min_eig"], 0.0, larger_is_better=True),
        "reeb_contracts_dtheta": _check(man["reeb_interior"], 1e-8),
        "dtheta_nondegenerate": _check(man["det_omega_min"], 1e-6, larger_is_better=True),
        "reeb_flow_isometry": _check(man["lie_xi_g"], 1e-7),
        "tau_equals_minus_omega": _check(man["tau_plus_omega"], 1e-7),
        "xi_brackets_horizontal": _check(man["theta_xi_bracket"], 1e-7),
        "torsion": _check(con["torsion"], 1e-7),
        "metric_compatibility": _check(con["metric_compat"], 1e-7),
        "curvature_g_skew": _check(con["g_skew"], 1e-6),
        "bianchi": _check(con["bianchi"], 1e-6),
        "wagner_curvature_condition": _check(con["wagner"], 1e-6),
        "dtheta_inverse_pairing": _check(con["dtheta_pairing"], 1e-9),
    }
    # transport spot checks
    sampler = SamplerConfig(
        n_paths=min(8, max(cfg.sampler.n_paths, 1)), segments=cfg.sampler.segments,
        horizon=cfg.sampler.horizon, magnitude=cfg.sampler.magnitude,
        step=cfg.sampler.step, seed=cfg.sampler.seed,
    )
    checks["transport_isometry"] = _check(
        isometry_residual(chart, x0, sampler), 1e-6
    )
    rng_loop = np.random.default_rng(cfg.sampler.seed + 1)
    loop = balanced_loop(chart, x0, rng_loop)
    sc = sample_curve(chart, loop, 2e-3)
    tilde = horizontalize(chart, sc)
    checks["horizontalization_residual"] = _check(
        float(np.max(np.abs(tilde.theta_dot))), 1e-6
    )
    checks["transport_equivalence"] = _check(
        transport_equivalence_check(chart, sc), 1e-4
    )
    fq = transport_theta(chart, sc, "quadrature")
    fo = transport_theta(chart, sc, "ode")
    checks["theta_transport_agreement"] = _check(abs(fq - fo) / abs(fq), cfg.ode_tol)
    return {
        "schema": 1,
        "command": "verify",
        "manifold": chart.name,
        "n_points": n_points,
        "seed": cfg.sampler.seed,
        "checks": checks,
        "pass": all(c["pass"] for c in checks.values()),
    }


def _estimate_algebras(chart, x0, sampler, span_tol):
    h = lie_closure(as_samples_schouten(chart, x0, sampler), span_tol)
    h0 = lie_closure(as_samples_adapted(chart, x0, sampler), span_tol)
    return h, h0


def _cross_variant_residual(chart, x0, sampler, span_tol):
    h_w = lie_closure(as_samples_schouten(chart, x0, sampler, variant="wagner"), span_tol)
    h_a = lie_closure(
        as_samples_schouten(chart, x0, sampler, variant="annihilator"), span_tol
    )
    res = 0.0
    for B in h_w.basis:
        res = max(res, h_a.span_residual(B))
    for B in h_a.basis:
        res = max(res, h_w.span_residual(B))
    return res, h_w.dim, h_a.dim


def holonomy_report(cfg: RunConfig):
    """The holonomy pipeline: algebras, splitting, regression, spinors."""
    chart, x0 = _resolve_chart(cfg)
    sampler = cfg.sampler
    h, h0 = _estimate_algebras(chart, x0, sampler, cfg.span_tol)
    comparison = compare_subalgebras(h, h0, tol=1e-4)
    cross_res, dim_w, dim_a = _cross_variant_residual(chart, x0, sampler, cfg.span_tol)
    report = {
        "schema": 1,
        "command": "holonomy",
        "manifold": chart.name,
        "seed": sampler.seed,
        "n_paths": sampler.n_paths,
        "span_tol": cfg.span_tol,
        "dims": {"schouten": h.dim, "adapted": h0.dim},
        "codim": comparison["codim"],
        "ideal": comparison["ideal"],
        "contained": comparison["contained"],
        "cross_variant": {
            "residual": cross_res,
            "dims": {"wagner": dim_w, "annihilator": dim_a},
        },
    }
    rng_pts = np.random.default_rng(sampler.seed + 1000)
    pts = random_domain_points(chart, 30, rng_pts, margin=0.85)
    report["sasaki"] = sasaki_psi_check(chart, pts)
    if h0.dim > 0:
        split = factor_split(chart, x0, h0)
        report["blocks"] = [list(b) for b in split.blocks]
        report["trivial_block"] = list(split.trivial)
        report["einstein"] = einstein_check(chart, pts, split)
        try:
            reg = dtheta_regression(chart, pts, split)
            report["regression"] = {
                "b": list(reg["b"]),
                "residual": reg["residual"],
            }
        except KContactError as exc:
            report["regression"] = {"error": str(exc)}
        if comparison["codim"] == 1:
            t_alg, _ = t_complement(h0, h)
            coeffs = [
                float(np.sum(t_alg.basis[0] * J) / np.sum(J * J))
                for J in split.J_blocks
            ]
            report["t_coefficients"] = coeffs
            ms = [len(b) // 2 for b in split.blocks]
            if all(abs(a) > 1e-8 for a in coeffs):
                report["ratio_condition"] = ratio_condition(ms, coeffs)
    else:
        report["blocks"] = []
        report["trivial_block"] = list(range(2 * chart.m))
    if chart.m <= 8:
        rep = build_spin_rep(chart.m)
        report["spinor_kernel"] = {
            "schouten": parallel_spinor_dim(rep, h),
            "adapted": parallel_spinor_dim(rep, h0),
        }
    return report


def spinor_report(cfg: RunConfig):
    """Spin-representation sanity checks plus chart kernel dimensions."""
    chart, x0 = _resolve_chart(cfg)
    m = chart.m
    rep = build_spin_rep(m)
    tm = 2 * m
    cl = 0.0
    for p in range(tm):
        for q in range(tm):
            anti = rep.gamma[p] @ rep.gamma[q] + rep.gamma[q] @ rep.gamma[p]
            target = -2.0 * np.eye(rep.dim) if p == q else 0.0
            cl = max(cl, float(np.max(np.abs(anti - target))))
    rng = np.random.default_rng(cfg.sampler.seed)
    hom = 0.0
    for _ in range(10):
        A = rng.normal(size=(tm, tm))
        A = A - A.T
        B = rng.normal(size=(tm, tm))
        B = B - B.T
        lhs = spin_lift(rep, A @ B - B @ A)
        rhs = spin_lift(rep, A) @ spin_lift(rep, B) - spin_lift(rep, B) @ spin_lift(rep, A)
        hom = max(hom, float(np.max(np.abs(lhs - rhs))))
    sig = spin_lift(rep, standard_complex_structure(m))
    eigen = [
        {"index": i, "level": rep.grading(i), "eigenvalue_imag": float(np.imag(sig[i, i]))}
        for i in range(rep.dim)
    ]
    h, h0 = _estimate_algebras(chart, x0, cfg.sampler, cfg.span_tol)
    return {
        "schema": 1,
        "command": "spinor",
        "manifold": chart.name,
        "seed": cfg.sampler.seed,
        "clifford_residual": cl,
        "homomorphism_residual": hom,
        "lift_level_constant": LIFT_LEVEL_CONSTANT,
        "rotation_eigenvalues": eigen,
        "kernel_dims": {
            "schouten": parallel_spinor_dim(rep, h),
            "adapted": parallel_spinor_dim(rep, h0),
            "trivial_algebra": rep.dim,
        },
    }


def list_manifolds_report():
    return {
        "schema": 1,
        "command": "list-manifolds",
        "types": ["heisenberg", "product"],
        "factor_kinds": list(FACTOR_KINDS),
        "examples": [
            {"type": "heisenberg", "m": 2},
            {
                "type": "product",
                "factors": [
                    {"kind": "poincare_disc", "complex_dim": 1, "b": 1.0, "curvature": 1.0},
                    {"kind": "poincare_disc", "complex_dim": 1, "b": 2.0, "curvature": 1.0},
                ],
            },
            {
                "type": "product",
                "factors": [{"kind": "bergman_ball", "complex_dim": 2, "b": 1.0, "curvature": 1.0}],
            },
            {
                "type": "product",
                "factors": [
                    {"kind": "perturbed_disc", "complex_dim": 1, "b": 1.0, "curvature": 1.0, "epsilon": 0.3},
                    {"kind": "poincare_disc", "complex_dim": 1, "b": 1.0, "curvature": 1.0},
                ],
            },
        ],
    }


# ---------------------------------------------------------------------------
# argument handling


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kcontact",
        description="Numerical laboratory for horizontal holonomy of "
        "K-contact sub-Riemannian manifolds",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed_required=False):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, required=seed_required,
                       help="sampler seed (overrides the config)")
        p.add_argument("--paths", type=int, help="number of sampled paths")
        p.add_argument("--out", help="report path (default: stdout)")

    common(sub.add_parser("verify", help="run the structural invariant suite"))
    common(sub.add_parser("holonomy", help="estimate and analyze holonomy"),
           seed_required=True)
    common(sub.add_parser("spinor", help="spin representation checks"))
    lm = sub.add_parser("list-manifolds", help="built-in chart catalogue")
    lm.add_argument("--out", help="report path (default: stdout)")
    return parser


def _apply_overrides(cfg: RunConfig, args):
    samp = cfg.sampler
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "paths", None) is not None:
        if args.paths < 0:
            raise ConfigError("--paths must be nonnegative")
        updates["n_paths"] = args.paths
    if updates:
        cfg.sampler = SamplerConfig(
            n_paths=updates.get("n_paths", samp.n_paths),
            segments=samp.segments,
            horizon=samp.horizon,
            magnitude=samp.magnitude,
            step=samp.step,
            seed=updates.get("seed", samp.seed),
            vertical_magnitude=samp.vertical_magnitude,
        )
    if getattr(args, "out", None):
        cfg.out = args.out
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-manifolds":
            _emit(list_manifolds_report(), getattr(args, "out", None))
            return EXIT_OK
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "verify":
            report = verify_report(cfg)
            _emit(report, cfg.out)
            return EXIT_OK if report["pass"] else 1
        if args.command == "holonomy":
            report = holonomy_report(cfg)
        else:
            report = spinor_report(cfg)
        _emit(report, cfg.out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"domain violation: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except SamplingError as exc:
        print(f"sampling failure: {exc}", file=sys.stderr)
        return EXIT_SAMPLING


if __name__ == "__main__":
    sys.exit(main())
