"""Batch driver: run a verification pipeline over random samples and emit a JSON report.

Exit codes: 0 when every check passes, 1 when some check fails, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import cmap, cone, cp4d, gh, imhp, legendre, qk
from .excalc import CENTRAL, DerivScheme, sup

log = logging.getLogger(__name__)

SUBCOMMANDS = ("verify-gh", "verify-cone", "reduce-qk", "cp4d", "cmap", "legendre")


class ConfigError(ValueError):
    """Malformed configuration or command line."""


@dataclass
class RunConfig:
    subcommand: str
    config: dict = field(default_factory=dict)
    samples: int = 10
    seed: int = 0
    h: float | None = None
    tolerances: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.samples < 1:
            raise ConfigError("samples must be at least 1")
        if self.h is not None and not self.h > 0:
            raise ConfigError("h must be positive")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed))

    def scheme(self, order: int = 2, default: DerivScheme | None = None) -> DerivScheme:
        if self.h is None:
            return default or DerivScheme()
        return DerivScheme(CENTRAL, self.h, order)


class Collector:
    """Max-merge of residuals per named check."""

    def __init__(self, defaults: dict[str, float], overrides: dict[str, float]):
        unknown = set(overrides) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown tolerance name(s): {', '.join(sorted(unknown))}")
        self.tol = {**defaults, **overrides}
        self.worst: dict[str, float] = {k: 0.0 for k in defaults}
        self.errors: dict[str, str] = {}

    def add(self, name: str, value) -> None:
        v = float(value)
        if not math.isfinite(v):
            v = math.inf
        self.worst[name] = max(self.worst[name], v)

    def run(self, name: str, fn: Callable[[], float]) -> None:
        try:
            self.add(name, fn())
        except (ArithmeticError, ValueError, RuntimeError, KeyError, np.linalg.LinAlgError) as exc:
            self.worst[name] = math.inf
            self.errors.setdefault(name, f"{type(exc).__name__}: {exc}")

    def report(self) -> dict:
        checks = {}
        for k in sorted(self.worst):
            v = self.worst[k]
            entry = {
                "max_residual": v if math.isfinite(v) else None,
                "tolerance": self.tol[k],
                "pass": bool(math.isfinite(v) and v <= self.tol[k]),
            }
            if k in self.errors:
                entry["error"] = self.errors[k]
            checks[k] = entry
        return checks


# ---------------------------------------------------------------- builders

GH_DATA = {
    "monopole": gh.monopole_data,
    "two-center": gh.two_center_data,
    "three-center": gh.three_center_data,
    "skewed": gh.skewed_data,
    "flat": gh.flat_data,
}

CONE_POTENTIALS = {"three-center": cone.three_center_potential, "two-center": cone.two_center_potential}


def _option(cfg: dict, key: str, default, kind: type):
    value = cfg.get(key, default)
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ConfigError(f"config field {key!r} must be of type {kind.__name__}")
    return value


def _gh_data(name: str, scheme: DerivScheme) -> gh.GHData:
    if name not in GH_DATA:
        raise ConfigError(f"unknown GH data {name!r}; choose from {sorted(GH_DATA)}")
    d = GH_DATA[name]()
    d.scheme = scheme
    return d


def _prepotential(cfg: dict) -> cmap.Prepotential:
    raw = _option(cfg, "prepotential", {"family": "quadratic", "C": [[0.0, 0.5]]}, dict)
    try:
        return cmap.prepotential_from_config(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad prepotential: {exc}") from exc


def _cone_sample(F: cmap.Prepotential, rng):
    try:
        return cmap.random_cone_point(F, rng)
    except cmap.CmapDomainError as exc:
        raise ConfigError(str(exc)) from exc


def _base_sample(rng, m: int, avoid_string: bool = False) -> np.ndarray:
    while True:
        x = rng.normal(size=(m, 3))
        norms = np.linalg.norm(x, axis=1)
        if np.min(norms) < 0.2:
            continue
        if avoid_string and np.min(norms + x[:, 2]) < 0.2 * np.min(norms):
            continue
        if m > 1 and np.linalg.norm(np.cross(x[0], x[1])) < 0.1 * norms[0] * norms[1]:
            continue
        return x


# ---------------------------------------------------------------- pipelines


def run_verify_gh(rc: RunConfig, col_tol: dict) -> Collector:
    col = Collector(
        {"bogomolny1": 1e-6, "bogomolny2": 1e-6, "closure": 1e-6, "algebraic": 1e-8, "coframe": 1e-8}, col_tol
    )
    data = _gh_data(_option(rc.config, "data", "monopole", str), rc.scheme())
    rng = rc.rng()
    triple, metric = gh.hk_forms(data), gh.hk_metric(data)
    for _ in range(rc.samples):
        x = _base_sample(rng, data.m, avoid_string=True)
        p = data.point(x, rng.uniform(-1, 1, data.m))
        col.run("bogomolny1", lambda: gh.bogomolny1_residual(data, x))
        col.run("bogomolny2", lambda: gh.bogomolny2_residual(data, x))
        col.run("closure", lambda: gh.closure_check(triple, p, data.scheme))
        col.run("algebraic", lambda: gh.algebraic_check(triple, metric, p))
        col.run("coframe", lambda: gh.quat_forms_check(data, p))
    return col


def run_verify_cone(rc: RunConfig, col_tol: dict) -> Collector:
    col = Collector(
        {
            "potential_constraints": 1e-6,
            "round_trip": 1e-6,
            "hkc_higgs": 1e-6,
            "obstruction_identities": 1e-6,
            "general_identities": 1e-6,
        },
        col_tol,
    )
    name = _option(rc.config, "potential", "three-center", str)
    if name not in CONE_POTENTIALS:
        raise ConfigError(f"unknown cone potential {name!r}; choose from {sorted(CONE_POTENTIALS)}")
    pot = CONE_POTENTIALS[name]()
    data = _gh_data(_option(rc.config, "data", name, str), rc.scheme())
    other = _gh_data(_option(rc.config, "obstruction_data", "skewed", str), rc.scheme())
    rng = rc.rng()
    for _ in range(rc.samples):
        x = _base_sample(rng, pot.m)
        col.run("potential_constraints", lambda: cone.potential_constraints(pot, x))
        col.run("round_trip", lambda: cone.higgs_round_trip(data, x))
        col.run("hkc_higgs", lambda: cone.hkc_higgs_residual(data, x))
        y = _base_sample(rng, other.m, avoid_string=True)
        p = other.point(y, rng.uniform(-1, 1, other.m))
        col.run("obstruction_identities", lambda: cone.obstruction_identity_residual(other, p))
        col.run("general_identities", lambda: cone.general_identity_residual(other, p))
    return col


def run_reduce_qk(rc: RunConfig, col_tol: dict) -> Collector:
    col = Collector(
        {
            "reduced_bogomolny1": 1e-6,
            "reduced_bogomolny2": 1e-6,
            "theta0": 1e-8,
            "ansatz_variants": 1e-8,
            "algebraic_qk": 1e-8,
            "einstein": 1e-6,
            "moment_map": 1e-6,
            "killing": 1e-6,
            "swann": 1e-6,
            "moment_lift": 1e-6,
        },
        col_tol,
    )
    data = _gh_data(_option(rc.config, "data", "two-center", str), rc.scheme())
    if data.m < 2:
        raise ConfigError("reduction needs GH data with at least two points")
    # the built-in line data are not gauge fixed: reduce the Higgs field and lift back with a basic connection
    rd = qk.ReducedData(data.m - 1, qk.reduce_higgs(data), lambda r: np.zeros((data.m, 3 * data.m - 4)), 1.0, data.scheme, data.name)
    st = qk.qk_structure(rd)
    lifted = qk.lift_to_gh(rd)
    chart = imhp.RestrictedChart(rd.n)
    rng = rc.rng()
    for _ in range(rc.samples):
        rho = chart.random_point(rng)
        p = rd.point(rho, rng.uniform(-1, 1, rd.m))
        col.run("reduced_bogomolny1", lambda: qk.red_bogo1_residual(rd, rho))
        col.run("reduced_bogomolny2", lambda: qk.red_bogo2_residual(rd, rho))
        col.run("theta0", lambda: qk.theta0_check(rd, p))
        col.run("ansatz_variants", lambda: qk.ansatz_variants_check(rd, p))
        col.run("algebraic_qk", lambda: qk.algebraic_qk_check(st, p))
        col.run("einstein", lambda: qk.einstein_residual(st, p=p))
        col.run("moment_map", lambda: max(qk.moment_map_residual(st, I, p) for I in range(rd.m)))
        col.run("killing", lambda: max(qk.killing_residual(st, I, p) for I in range(rd.m)))
        q = rng.normal(size=4)
        P = lifted.point(imhp.embed(rho, q), p[rd.nfree :])
        col.run("swann", lambda: qk.swann_consistency(lifted, rd, P))
        col.run("moment_lift", lambda: qk.moment_lift_check(lifted, rd, P))
    return col


def run_cp4d(rc: RunConfig, col_tol: dict) -> Collector:
    col = Collector(
        {
            "constraint": 1e-8,
            "eigenfunction": 1e-8,
            "higgs_hessian": 1e-6,
            "metric_vs_pipeline": 1e-8,
            "omega_vs_pipeline": 1e-8,
            "einstein": 1e-6,
        },
        col_tol,
    )
    try:
        u = cp4d.builtin_potential(_option(rc.config, "potential", "rho2sq", str), rc.config.get("params"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad potential: {exc}") from exc
    rd = cp4d.reduced_data(u)
    if rc.h is not None:
        rd.scheme = rc.scheme()
    st = qk.qk_structure(rd)
    cm = cp4d.cp_metric(u)
    rng = rc.rng()
    for _ in range(rc.samples):
        p = cp4d.random_point(rng, u=u)
        r = p[:2]
        col.run("constraint", lambda: cp4d.constraint_residual(u, r))
        col.run("eigenfunction", lambda: cp4d.eigenfunction_residual(u, r))
        col.run("higgs_hessian", lambda: sup(cp4d.higgs_from_hessian(u, r) - cp4d.higgs_4d(u, r)))
        col.run("metric_vs_pipeline", lambda: sup(cm.s_g(p) - st.s_g(p)))
        col.run("omega_vs_pipeline", lambda: sup(cm.s_omega(p) - st.s_omega(p)))
        col.run("einstein", lambda: qk.einstein_residual(st, p=p))
    return col


def _cmap_defaults(n: int) -> dict[str, float]:
    tol = {
        "homogeneity": 1e-8,
        "contour_vs_closed": 1e-8,
        "identity_suite": 1e-8,
        "shifts": 1e-8,
        "gauge_kernel": 1e-6,
        "upstairs_bogomolny": 1e-6,
        "upstairs_gauge_fix": 1e-6,
        "higgs_vs_legendre": 1e-8,
        "field_strength_vs_legendre": 1e-6,
        "kappa_vs_potential": 1e-8,
        "heisenberg_upstairs": 1e-8,
        "dualization": 1e-8,
        "reduction_vs_pipeline": 1e-8,
        "fs_vs_pipeline": 1e-8,
        "end_to_end_contour": 1e-8,
        "einstein": 1e-6,
        "heisenberg_algebra": 1e-8,
        "killing": 1e-6,
        "moment_map": 1e-6,
        "swann": 1e-6,
        "signature_violations": 0.0,
        "tau_modular": 1e-8,
    }
    if n >= 2:
        tol = {k: (v if k in ("tau_modular", "signature_violations") else max(v, 1e-5)) for k, v in tol.items()}
    return tol


def run_cmap(rc: RunConfig, col_tol: dict) -> Collector:
    F = _prepotential(rc.config)
    col = Collector(_cmap_defaults(F.n), col_tol)
    heavy = _option(rc.config, "heavy_samples", 1, int)
    if heavy < 0:
        raise ConfigError("heavy_samples must be non-negative")
    scheme = rc.scheme(4, cmap.CMAP_SCHEME)
    rd = cmap.reduce_cmap(F, scheme=scheme)
    st = qk.qk_structure(rd)
    up = cmap.cmap_gh(F)
    up.scheme = rc.scheme(2, up.scheme)
    leg = cmap.legendre_cmap_gh(F)
    L = cmap.cmap_L(F)
    fs = cmap.fs_assemble(F)
    rng = rc.rng()
    m = F.n + 1
    for k in range(rc.samples):
        pu, pb, _ = _cone_sample(F, rng)
        x, psi = pu[: 3 * m].reshape(m, 3), pu[3 * m :]
        rho = imhp.from_free(pb[: 3 * F.n - 1], m)
        eta = rng.normal(size=F.n) + 1j * rng.normal(size=F.n)
        col.run("homogeneity", lambda: cmap.homogeneity_residual(F, eta))
        col.run("contour_vs_closed", lambda: abs(cmap.L_contour(F, x) - cmap.L_closed(F, x)))
        col.run("identity_suite", lambda: cmap.identity_suite(F, x, detail=False))
        col.run(
            "shifts",
            lambda: max(
                v for key, v in cmap.shifts_and_coords(F, x, psi).items() if key in ("u_A_dual_identity", "u_0_self_dual", "shift_0", "psi_tilde_dual")
            ),
        )
        col.run(
            "gauge_kernel",
            lambda: legendre.gauge_kernel_residual(lambda y, s: cmap.holomorphic_coords(F, y, s)[1], x, psi),
        )
        col.run("upstairs_bogomolny", lambda: max(gh.bogomolny1_residual(up, x), gh.bogomolny2_residual(up, x)))
        col.run("upstairs_gauge_fix", lambda: cone.gauge_fix_residual(up, x))
        col.run("higgs_vs_legendre", lambda: sup(up.U(x) - leg.U(x)))
        col.run("field_strength_vs_legendre", lambda: sup(gh.field_strength(up, x) - gh.field_strength(leg, x)))

        def kappa():
            z, u = cmap.holomorphic_coords(F, x, psi)
            res = legendre.transform(L, z, u, guess=x[:, 0] * 1.01)
            return abs(res.kappa - cmap.hk_potential_cmap(F, x)) / max(1.0, abs(res.kappa))

        col.run("kappa_vs_potential", kappa)
        col.run("dualization", lambda: max(v for key, v in cmap.dualization(F, x, psi)[1].items() if key != "tau_modular"))
        col.run("tau_modular", lambda: cmap.dualization(F, x, psi)[1]["tau_modular"])
        col.run(
            "reduction_vs_pipeline",
            lambda: max(sup(rd.U(rho) - qk.reduce_higgs(up)(rho)), sup(rd.A(rho) - qk.reduce_connection(up)(rho))),
        )
        col.run("fs_vs_pipeline", lambda: max(sup(fs.s_g(pb) - st.s_g(pb)), sup(fs.theta(pb) - st.theta_vec(pb))))
        col.run("einstein", lambda: qk.einstein_residual(st, p=pb))
        col.run("moment_map", lambda: max(qk.moment_map_residual(st, I, pb) for I in range(m)))
        down: dict = {}
        col.run("heisenberg_algebra", lambda: down.setdefault("r", cmap.heisenberg_downstairs(F, pb)[1])["algebra"])
        col.run("killing", lambda: down["r"]["killing"])
        col.run("swann", lambda: qk.swann_consistency(up, rd, pu))
        # an empty R < 0 domain is reported as a failed check, not a crash
        col.run(
            "signature_violations",
            lambda: cmap.signature_check(F, [cmap.random_base_point(F, rng, require_negative_R=True)])[1]["violations"],
        )
        if k < heavy:
            col.run("heisenberg_upstairs", lambda: cmap.heisenberg_upstairs(F, pu, detail=False))
            col.run("end_to_end_contour", lambda: cmap.end_to_end_residual(F, [pb], "contour"))
    return col


def run_legendre(rc: RunConfig, col_tol: dict) -> Collector:
    """Legendre construction for the c-map L with its shifts."""
    col = Collector(
        {"constraints": 1e-8, "hkc": 1e-8, "bogomolny": 1e-6, "gauge_kernel": 1e-6, "round_trip": 1e-8, "kappa_vs_potential": 1e-8},
        col_tol,
    )
    F = _prepotential(rc.config)
    L = cmap.cmap_L(F)
    data = cmap.legendre_cmap_gh(F)
    data.scheme = rc.scheme(2, data.scheme)
    solver = legendre.LegendreSolver(L)
    rng = rc.rng()
    m = F.n + 1
    for _ in range(rc.samples):
        pu, _, _ = _cone_sample(F, rng)
        x, psi = pu[: 3 * m].reshape(m, 3), pu[3 * m :]
        col.run("constraints", lambda: legendre.constraints_residual(L, x))
        col.run("hkc", lambda: legendre.hkc_residual(L, x))
        col.run("bogomolny", lambda: max(gh.bogomolny1_residual(data, x), gh.bogomolny2_residual(data, x)))
        u_of = lambda y, s: legendre.u_coords(L, s, lambda w: cmap.shifts(F, w), y)
        col.run("gauge_kernel", lambda: legendre.gauge_kernel_residual(lambda y, s: cmap.holomorphic_coords(F, y, s)[1], x, psi))
        z = legendre.to_complex(x)[0]
        u = u_of(x, psi)

        def rt():
            res = solver.solve(z, u, guess=x[:, 0] * 1.01)
            return sup(res.x - x[:, 0])

        col.run("round_trip", rt)
        col.run(
            "kappa_vs_potential",
            lambda: abs(solver.solve(z, u, guess=x[:, 0]).kappa - cmap.hk_potential_cmap(F, x)),
        )
    return col


PIPELINES: dict[str, Callable[[RunConfig, dict], Collector]] = {
    "verify-gh": run_verify_gh,
    "verify-cone": run_verify_cone,
    "reduce-qk": run_reduce_qk,
    "cp4d": run_cp4d,
    "cmap": run_cmap,
    "legendre": run_legendre,
}


def run(rc: RunConfig) -> dict:
    """Deterministic report for a run configuration."""
    col = PIPELINES[rc.subcommand](rc, rc.tolerances)
    checks = col.report()
    return {
        "checks": checks,
        "config": rc.config,
        "meta": {"h": rc.h, "samples": rc.samples, "seed": rc.seed, "subcommand": rc.subcommand},
        "pass": all(c["pass"] for c in checks.values()),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- command line


def _tolerance(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        v = float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"tolerance {name!r} is not a number") from exc
    if v < 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"tolerance {name!r} must be finite and non-negative")
    return name, v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ghqk", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="JSON file with the input specification")
        sp.add_argument("--samples", type=int, default=10)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--h", type=float, default=None, help="finite-difference step (module default if omitted)")
        sp.add_argument("--out", type=Path, help="write the report here instead of stdout")
        sp.add_argument("--tolerance", type=_tolerance, action="append", default=[], metavar="NAME=VALUE")
    return parser


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    t0 = time.perf_counter()
    try:
        rc = RunConfig(
            args.subcommand,
            _load_config(args.config),
            args.samples,
            args.seed,
            args.h,
            dict(args.tolerance),
        )
        report = run(rc)
    except ConfigError as exc:
        print(f"ghqk {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2
    text = dumps(report)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    # wall time stays out of the report so identical inputs give identical bytes
    log.info("wall time %.2f s", time.perf_counter() - t0)
    return 0 if report["pass"] else 1


if __name__ == "__main__":
    sys.exit(main())
