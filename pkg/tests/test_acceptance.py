"""Acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers
(visible with ``pytest -s`` or by running this file directly) and then
asserts the same condition.
"""
import math
import time

import numpy as np
import pytest

from tsps.errors import OutOfValidityBand
from tsps.forms import forms_field_from_immersion, k_chebyshev
from tsps.ksurface import (build_from_cauchy, discrete_gaussian_curvature, invariant_report, kdisc_field, quad_field,
                           tetrahedron_closed_forms)
from tsps.samples import (amsler_cauchy_data, chebyshev_forms_from_omega, cylinder_immersion,
                          pseudosphere_chebyshev_immersion, semidiscrete_amsler_surface, soliton_omega_field,
                          sphere_immersion)
from tsps.timescale import (GridDomain, GridFunction, TimeScale, delta_derivative, mixed_partial_residual)
from tsps.tssurface import TimeScaleSurface, conjecture_constancy_report, ts_gaussian_curvature

HS = (0.02, 0.01, 0.005)


def verdict(n, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def halving_ratios(errs):
    return [errs[k] / errs[k + 1] for k in range(len(errs) - 1)]


def in_band(ratios, lo=3.0, hi=5.0):
    return all(lo <= r <= hi for r in ratios)


def interior_max(field, arr):
    return float(np.max(np.abs(arr[field.interior_mask()])))


@pytest.fixture(scope="module")
def amsler50():
    t0 = time.perf_counter()
    mesh = build_from_cauchy(amsler_cauchy_data(math.pi / 2, 0.1, 50, 50))
    return mesh, time.perf_counter() - t0


def test_criterion_1_discrete_k_surface(amsler50):
    mesh, elapsed = amsler50
    rep = invariant_report(mesh, tol=1e-9)
    K = kdisc_field(mesh)
    q = quad_field(mesh)
    th = np.concatenate([q["theta"].ravel(), q["theta2"].ravel()])
    theta = float(th.mean())
    checks = {
        "edge": rep.max_edge_residual < 1e-9,
        "coplanarity": rep.max_coplanarity_residual < 1e-9,
        "theta": float(np.max(np.abs(th - theta))) < 1e-8,
        "K const": float(np.max(np.abs(K - K.mean()))) < 1e-8,
        "K relation": float(np.max(np.abs(K + math.sin(theta) ** 2 / mesh.a ** 2))) < 1e-8,
        "cos theta": float(np.max(np.abs(np.cos(q["theta"]) - q["cos_theta_closed"]))) < 1e-10,
        "runtime": elapsed < 1.0,
    }
    verdict(1, all(checks.values()),
            f"edge {rep.max_edge_residual:.2e} coplanar {rep.max_coplanarity_residual:.2e} "
            f"theta dev {rep.theta_max_dev:.2e} K dev {rep.K_max_dev:.2e} "
            f"cos dev {rep.cos_theta_residual:.2e} time {elapsed:.3f}s "
            f"failed={[k for k, v in checks.items() if not v]}")


def brute_tetrahedron(a, phi, psi):
    """Place A, B, D in the plane and solve for C from |BC| = |DC| = a, |AC| = 2a sin(psi/2)."""
    A = np.zeros(3)
    B = a * np.array([1.0, 0.0, 0.0])
    D = a * np.array([math.cos(phi), math.sin(phi), 0.0])
    ac2 = (2 * a * math.sin(psi / 2)) ** 2
    x, y = np.linalg.solve(np.array([B[:2], D[:2]]), [ac2 / 2, ac2 / 2])
    C = np.array([x, y, math.sqrt(max(ac2 - x * x - y * y, 0.0))])
    return A, B, C, D


def brute_values(a, phi, psi):
    A, B, C, D = brute_tetrahedron(a, phi, psi)
    cabc = np.cross(B - A, C - A)
    det = abs(float(np.dot(cabc, D - A)))
    area = 0.5 * float(np.linalg.norm(cabc))
    # dihedral angle along AB between faces ABD and ABC
    n_abd = np.cross(B - A, D - A)
    cos_t = abs(float(np.dot(n_abd, cabc))) / (np.linalg.norm(n_abd) * np.linalg.norm(cabc))
    return {"diag_AC": float(np.linalg.norm(C - A)), "diag_BD": float(np.linalg.norm(D - B)),
            "area_ABC": area, "height_H": det / (2 * area), "det": det, "cos_theta": cos_t}


def closed_values(a, phi, psi):
    s = math.cos(phi) + math.cos(psi)
    det = 4 * a ** 3 * math.sin(phi / 2) * math.sin(psi / 2) * math.sqrt(s / 2)
    return {"diag_AC": 2 * a * math.sin(psi / 2), "diag_BD": 2 * a * math.sin(phi / 2),
            "area_ABC": 0.5 * a * a * math.sin(psi), "height_H": det / (a * a * math.sin(psi)), "det": det,
            "cos_theta": math.tan(phi / 2) * math.tan(psi / 2)}


def test_criterion_2_tetrahedron_closed_forms():
    rng = np.random.default_rng(20240601)
    worst, worst_lib, count = 0.0, 0.0, 0
    while count < 10_000:
        a = float(rng.uniform(0.01, 10.0))
        phi, psi = (float(x) for x in rng.uniform(0.05, math.pi - 0.05, 2))
        if math.cos(phi) + math.cos(psi) <= 0.01:
            continue
        count += 1
        ref = brute_values(a, phi, psi)
        ours = tetrahedron_closed_forms(a, phi, psi)
        cl = closed_values(a, phi, psi)
        for key in ("diag_AC", "diag_BD", "area_ABC", "height_H", "det"):
            worst = max(worst, abs(ref[key] - cl[key]) / abs(ref[key]))
            worst_lib = max(worst_lib, abs(ref[key] - ours[key]) / abs(ref[key]))
    spot = tetrahedron_closed_forms(1.0, math.pi / 3, math.pi / 3)
    spot_ok = (abs(spot["diag_AC"] - 1) < 1e-12 and abs(spot["height_H"] - math.sqrt(6) / 3) < 1e-12
               and abs(spot["cos_theta"] - 1 / 3) < 1e-12 and abs(spot["K"] + 8 / 9) < 1e-12)
    b = brute_values(1.0, math.pi / 3, math.pi / 3)
    spot_ok = spot_ok and abs(b["cos_theta"] - 1 / 3) < 1e-12
    verdict(2, worst < 1e-10 and worst_lib < 1e-10 and spot_ok,
            f"{count} triples, max rel dev closed {worst:.2e} library {worst_lib:.2e}, "
            f"spot AC={spot['diag_AC']:.15g} H={spot['height_H']:.15g} "
            f"cos={spot['cos_theta']:.15g} K={spot['K']:.15g}")


# the literal window [-2,2]^2 contains u+v = 0 where the coordinate angle is pi
SOLITON_WINDOW = ((-2.1, -0.1), (-2.1, -0.1))


def test_criterion_3_smooth_chebyshev_identity():
    with pytest.raises(OutOfValidityBand):
        chebyshev_forms_from_omega(soliton_omega_field((-2, 2), (-2, 2), 0.01))
    kcheb, kint, cod = [], [], []
    for h in HS:
        fld = chebyshev_forms_from_omega(soliton_omega_field(*SOLITON_WINDOW, h))
        kc = np.vectorize(k_chebyshev)(fld.F, fld.M)
        kcheb.append(float(np.max(np.abs(kc + 1))))
        kint.append(interior_max(fld, fld.K_intrinsic + 1))
        c1, c2 = fld.codazzi
        cod.append(max(interior_max(fld, c1), interior_max(fld, c2)))
    rk, rc = halving_ratios(kint), halving_ratios(cod)
    ok = max(kcheb) < 1e-12 and in_band(rk) and in_band(rc)
    verdict(3, ok, f"window {SOLITON_WINDOW} ([-2,2]^2 rejected), k_cheb dev {max(kcheb):.2e}, "
                   f"K_int errs {['%.2e' % e for e in kint]} ratios {['%.2f' % r for r in rk]}, "
                   f"Codazzi ratios {['%.2f' % r for r in rc]}")


def immersion_errors(make, window, K_exact, H_exact=None, hs=HS):
    """Max errors over a fixed physical sub-window, so every h measures the same points."""
    K, Ki, H = [], [], []
    (u0, u1), (v0, v1) = window
    for h in hs:
        fld = forms_field_from_immersion(make(h))
        U, V = fld.domain.mesh()
        eps = 1e-12
        m = fld.interior_mask() & (U >= u0 - eps) & (U <= u1 + eps) & (V >= v0 - eps) & (V <= v1 + eps)
        K.append(float(np.max(np.abs(fld.K - K_exact)[m])))
        Ki.append(float(np.max(np.abs(fld.K_intrinsic - K_exact)[m])))
        if H_exact is not None:
            H.append(float(np.max(np.abs(fld.H - H_exact)[m])))
    return K, Ki, H


def test_criterion_4_extrinsic_intrinsic_agreement():
    sK, sKi, sH = immersion_errors(
        lambda h: sphere_immersion(2.0, GridDomain.continuum((0, 1), (1, 2), h), warp=0.2),
        ((0.2, 0.8), (1.2, 1.8)), 0.25, 0.5)
    cK, cKi, _ = immersion_errors(
        lambda h: cylinder_immersion(1.0, GridDomain.continuum((0.3, 1.3), (0.5, 1.5), h), warp=0.2),
        ((0.5, 1.1), (0.7, 1.3)), 0.0)
    ratios = {name: halving_ratios(e) for name, e in
              (("sphere K", sK), ("sphere K_int", sKi), ("sphere H", sH), ("cylinder K", cK), ("cylinder K_int", cKi))}
    ok = all(in_band(r) for r in ratios.values()) and sH[-1] < 1e-3
    verdict(4, ok, " ".join(f"{k} {['%.2f' % x for x in r]}" for k, r in ratios.items())
            + f" sphere H err {sH[-1]:.2e}")


def test_criterion_5_time_scale_calculus():
    Z = TimeScale.lattice(1.0)
    f = lambda t: t ** 3 - 2 * t
    zdev = max(abs(delta_derivative(Z, f, t) - (f(t + 1) - f(t))) for t in range(-20, 21))
    q = TimeScale.geometric(2.0, -5, 5)
    dq = delta_derivative(q, lambda t: t * t, 1.0)
    dI = delta_derivative(TimeScale.interval(0.0, 1.0), lambda t: t * t, 0.5)

    rng = np.random.default_rng(5)
    mixed = TimeScale([(0, 1), (1.3, 1.3), (2, 2.5)])
    domains = [GridDomain.lattice(0.1, 12, 9), GridDomain.continuum((0, 1), (-1, 0.5), 0.05),
               GridDomain(mixed, TimeScale.geometric(2.0, -3, 4), (0, 2.5), (0.1, 20), 0.1)]
    worst = 0.0
    for dom in domains:
        U, V = dom.mesh()
        fields = [np.sin(3 * U) * np.exp(V), U ** 3 * V ** 2 + 7, np.stack([U * V, np.cos(U + V), U ** 2], -1),
                  rng.standard_normal(U.shape)]
        for vals in fields:
            g = GridFunction(dom, vals)
            for i in range(dom.shape[0] - 1):
                for j in range(dom.shape[1] - 1):
                    worst = max(worst, mixed_partial_residual(g, (i, j), relative=True))
    ok = zdev == 0.0 and dq == 3.0 and abs(dI - 1) < 1e-8 and worst < 1e-12
    verdict(5, ok, f"Z dev {zdev}, q^Z D(t^2)(1) = {dq!r}, [0,1] D(t^2)(0.5) = {dI!r}, "
                   f"max relative mixed residual {worst:.2e}")


def test_criterion_6_unification(amsler50):
    mesh, _ = amsler50
    s = TimeScaleSurface.from_mesh(mesh)
    diff = max(abs(ts_gaussian_curvature(s, (m, n)) - discrete_gaussian_curvature(mesh, m, n))
               for m in range(mesh.rows - 2) for n in range(mesh.cols - 2))
    window = ((-1.1, -0.1), (-1.1, -0.1))
    errs = [float(np.max(np.abs(TimeScaleSurface(pseudosphere_chebyshev_immersion(
        GridDomain.continuum(*window, h))).K + 1))) for h in HS]
    orders = [math.log2(r) for r in halving_ratios(errs)]
    ok = diff < 1e-14 and min(orders) >= 1.0
    verdict(6, ok, f"lattice max |K_time - K_disc| = {diff:.2e}, pseudosphere K errs "
                   f"{['%.2e' % e for e in errs]} orders {['%.2f' % o for o in orders]}")


def test_criterion_7_unit_curvature(amsler50):
    mesh, _ = amsler50
    theta = invariant_report(mesh).theta_mean
    a = math.sin(theta)
    rebuilt = build_from_cauchy(amsler_cauchy_data(math.pi / 2, a, 50, 50, theta=theta))
    rep = invariant_report(rebuilt)
    K = kdisc_field(rebuilt)
    ok = rep.a_sin_theta_residual < 1e-6 and float(np.max(np.abs(K + 1))) < 1e-6 and rep.passed
    verdict(7, ok, f"a = sin(theta) = {a:.12g}, |a - sin(theta_measured)| = {rep.a_sin_theta_residual:.2e}, "
                   f"K_mean {rep.K_mean:.15g}, max |K + 1| = {float(np.max(np.abs(K + 1))):.2e}")


def test_criterion_8_conjecture_audit():
    reports = [conjecture_constancy_report(semidiscrete_amsler_surface(0.02, 0.1)).summary() for _ in range(2)]
    r = reports[0]
    finite = all(math.isfinite(r[k]) for k in ("mean", "min", "max", "std", "max_dev"))
    finite = finite and all(math.isfinite(x) for x in r["profile_1"] + r["profile_2"])
    ok = finite and reports[0] == reports[1] and r["label"] == "conjecture audit"
    verdict(8, ok, f"{r['count']} points, mean {r['mean']:.12g}, std {r['std']:.2e}, "
                   f"max_dev {r['max_dev']:.2e}, deterministic {reports[0] == reports[1]}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
