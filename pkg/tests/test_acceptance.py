"""Acceptance criteria 1-8, one test each, printing one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` or directly with ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

from ghqk import cli, cmap, cone, cp4d, gh, qk
from ghqk.excalc import sup
from ghqk.quatmath import adjoint_arr, qmul, qnorm2

sys.path.insert(0, str(Path(__file__).parent))
from conftest import base_point  # noqa: E402


def _line(k: int, ok: bool, detail: str) -> str:
    return f"acceptance {k}: {'PASS' if ok else 'FAIL'}  {detail}"


def _fmt(res: dict) -> str:
    return ", ".join(f"{k}={v:.1e}" for k, v in res.items())


# ---------------------------------------------------------------- criteria


def criterion_1():
    """Quaternion kernel over 10^3 random cases."""
    rng = np.random.default_rng(1)
    res = {"homomorphism": 0.0, "orthogonality": 0.0, "norm": 0.0}
    for _ in range(1000):
        p, q = rng.normal(size=(2, 4))
        Rp, Rq = adjoint_arr(p), adjoint_arr(q)
        res["homomorphism"] = max(res["homomorphism"], sup(adjoint_arr(qmul(p, q)) - Rp @ Rq))
        res["orthogonality"] = max(res["orthogonality"], sup(Rq.T @ Rq - np.eye(4)))
        nrm = qnorm2(p) * qnorm2(q)
        res["norm"] = max(res["norm"], abs(qnorm2(qmul(p, q)) - nrm) / max(1.0, nrm))
    return all(v < 1e-12 for v in res.values()), res


def _cli_checks(sub: str, samples: int, config: dict | None = None, seed: int = 0):
    report = cli.run(cli.RunConfig(sub, config or {}, samples, seed))
    return report["pass"], {k: v["max_residual"] for k, v in report["checks"].items()}


def criterion_2():
    """Monopole GH data at 50 samples."""
    return _cli_checks("verify-gh", 50, {"data": "monopole"})


def criterion_3():
    """Three-center cone constraints and the obstruction identities on skewed data."""
    return _cli_checks("verify-cone", 20, {"potential": "three-center", "obstruction_data": "skewed"})


def criterion_4():
    """Four-dimensional potentials against the reduction pipeline."""
    rng = np.random.default_rng(4)
    res = {"constraint": 0.0}
    for name in ("rho2sq", "rho1", "one"):
        u = cp4d.builtin_potential(name)
        for _ in range(10):
            res["constraint"] = max(res["constraint"], cp4d.constraint_residual(u, cp4d.random_point(rng)[:2]))
    ok = res["constraint"] < 1e-12
    for name in ("rho2sq", "rho1", "linear-combo"):
        good, checks = _cli_checks("cp4d", 50, {"potential": name})
        ok = ok and good
        res.update({f"{name}:{k}": v for k, v in checks.items() if k in ("eigenfunction", "metric_vs_pipeline", "einstein")})
    combo = cp4d.rho1_potential().scale(2.0) + cp4d.rho2sq_potential().scale(3.0)
    res["superposition"] = max(cp4d.eigenfunction_residual(combo, cp4d.random_point(rng)[:2]) for _ in range(10))
    return ok and res["superposition"] < 1e-8, res


def _cmap_battery(F: cmap.Prepotential, tol: float, seed: int, n_points: int = 100, heavy: int = 1):
    """Item-5 checks for one prepotential at tolerance tol."""
    rng = np.random.default_rng(seed)
    m = F.n + 1
    rd = cmap.reduce_cmap(F)
    st = qk.qk_structure(rd)
    fs = cmap.fs_assemble(F)
    pts = [cmap.random_cone_point(F, rng) for _ in range(n_points)]
    xs = [pu[: 3 * m].reshape(m, 3) for pu, _, _ in pts[:10]]
    bases = [pb for _, pb, _ in pts]
    res = {
        "contour_vs_closed": max(abs(cmap.L_contour(F, x) - cmap.L_closed(F, x)) for x in xs),
        "identity_suite": max(cmap.identity_suite(F, x, detail=False) for x in xs),
        "einstein": max(qk.einstein_residual(st, p=p) for p in bases),
        "fs_vs_pipeline": max(max(sup(fs.s_g(p) - st.s_g(p)), sup(fs.theta(p) - st.theta_vec(p))) for p in bases[:20]),
        "moment_map": max(qk.moment_map_residual(st, I, p) for p in bases[:20] for I in range(m)),
    }
    down = [cmap.heisenberg_downstairs(F, p)[1] for p in bases[:5]]
    res["heisenberg_downstairs"] = max(d["algebra"] for d in down)
    res["killing"] = max(d["killing"] for d in down)
    res["heisenberg_upstairs"] = max(cmap.heisenberg_upstairs(F, pts[k][0], detail=False) for k in range(heavy))
    sig_pts = [cmap.random_base_point(F, rng, require_negative_R=True) for _ in range(20)]
    definite, rep = cmap.signature_check(F, sig_pts)
    res["signature_violations"] = float(rep["violations"])
    ok = definite and all(v < tol for k, v in res.items() if k != "signature_violations")
    return ok, res, pts


def criterion_5():
    """c-map with F = (i/2)(eta^1)^2."""
    ok, res, _ = _cmap_battery(cmap.quadratic_prepotential([[0.5j]]), 1e-8, 5, heavy=3)
    # Killing and moment maps carry FD error and have the looser bound
    tight = {k: v for k, v in res.items() if k not in ("einstein", "killing", "moment_map", "signature_violations")}
    ok = all(v < 1e-8 for v in tight.values()) and res["signature_violations"] == 0
    ok = ok and max(res["einstein"], res["killing"], res["moment_map"]) < 1e-6
    return ok, res


def criterion_6():
    """Rank two: monomial (eta^2)^3 / eta^1 and quadratic with N = diag(1, -1)."""
    ok, out = True, {}
    for tag, F in (
        ("monomial", cmap.monomial_prepotential(1.0, [-1, 3])),
        ("quadratic", cmap.quadratic_prepotential(np.diag([1j, -1j]))),
    ):
        good, res, pts = _cmap_battery(F, 1e-5, 6)
        taus = [cmap.dualization(F, pu[:9].reshape(3, 3), pu[9:])[1]["tau_modular"] for pu, _, _ in pts[:20]]
        res["tau_modular"] = max(taus)
        ok = ok and good and res["tau_modular"] < 1e-8
        out.update({f"{tag}:{k}": v for k, v in res.items()})
    return ok, out


def criterion_7():
    """Swann consistency and moment lift on the c-map pair at 50 points."""
    F = cmap.quadratic_prepotential([[0.5j]])
    rd = cmap.reduce_cmap(F)
    up = cmap.cmap_gh(F)
    rng = np.random.default_rng(7)
    pts = [cmap.random_cone_point(F, rng)[0] for _ in range(50)]
    res = {
        "swann": max(qk.swann_consistency(up, rd, p) for p in pts),
        "moment_lift": max(qk.moment_lift_check(up, rd, p) for p in pts),
    }
    return all(v < 1e-6 for v in res.values()), res


def criterion_8():
    """Identical report bytes for identical (config, seed)."""
    res = {}
    ok = True
    for sub, cfg in (("cp4d", {"potential": "rho1"}), ("cmap", {}), ("verify-cone", {})):
        a = cli.dumps(cli.run(cli.RunConfig(sub, dict(cfg), 2, 11)))
        b = cli.dumps(cli.run(cli.RunConfig(sub, json.loads(json.dumps(cfg)), 2, 11)))
        res[sub] = float(a != b)
        ok = ok and a == b
    return ok, res


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


# ---------------------------------------------------------------- pytest


@pytest.mark.parametrize("k", range(1, 9))
def test_acceptance(k, capsys):
    ok, res = CRITERIA[k - 1]()
    with capsys.disabled():
        print("\n" + _line(k, ok, _fmt(res)))
    assert ok, res


def test_cone_detection_sanity(rng):
    """The skewed data really are a Bogomolny solution that is not a cone."""
    data = gh.skewed_data()
    x = base_point(rng, data.m, avoid_string=True)
    assert gh.bogomolny1_residual(data, x) < 1e-6
    assert cone.hkc_higgs_residual(data, x) > 1e-2


if __name__ == "__main__":
    failed = 0
    for k, crit in enumerate(CRITERIA, 1):
        ok, res = crit()
        failed += not ok
        print(_line(k, ok, _fmt(res)))
    sys.exit(1 if failed else 0)
