"""Curve, branch, and cycle-integral tests."""
import numpy as np
import pytest

from dp3 import curve as C
from dp3.errors import BranchPointHit, DegenerateCurve

A0 = C.A0


def test_roots_at_real_anchor():
    # the double root is half-precision conditioned; the isolated one is not
    z0, z1, z2 = C.cubic_roots(A0)
    r = 2 ** (-1 / 3)
    assert abs(z0 - r) < 5e-8
    assert abs(z1 - r) < 5e-8
    assert abs(z2 + 4 ** (-2 / 3)) < 1e-12


def test_roots_at_rotated_anchor():
    A = A0 * np.exp(-2j * np.pi / 3)
    z0, z1, z2 = C.cubic_roots(A, labeling_phase=np.pi / 3)
    rot = np.exp(-2j * np.pi / 3)
    assert abs(z0 - 2 ** (-1 / 3) * rot) < 5e-8
    assert abs(z1 - 2 ** (-1 / 3) * rot) < 5e-8
    assert abs(z2 + 4 ** (-2 / 3) * rot) < 1e-9


def test_roots_at_zero_modulus():
    # 4z^3 + 1 = 0: the three cube roots of -1/4
    got = list(C.cubic_roots(0.0))
    want = [0.25 ** (1 / 3) * np.exp(1j * np.pi * (2 * k + 1) / 3)
            for k in range(3)]
    for w in want:
        assert min(abs(g - w) for g in got) < 1e-12


def test_polynomial_residuals_random_moduli():
    rng = np.random.default_rng(7)
    for _ in range(40):
        A = complex(*rng.uniform(-100, 100, 2))
        cur = C.curve_data(A)
        v = C.vieta_residuals(cur)
        assert max(v) < 1e-12
        assert C.polynomial_residual(cur) < 1e-9 * (1 + abs(A) ** 2)


def test_degenerate_flag():
    assert C.curve_data(A0).degenerate
    assert C.curve_data(A0 * np.exp(2j * np.pi / 3)).degenerate
    assert not C.curve_data(A0 + 0.1).degenerate


def test_labeling_rule_near_anchor():
    # positive phase: im z0 <= im z1; negative: reversed
    for phi, sgn in ((0.05, 1), (-0.05, -1)):
        from dp3.boutroux import solve_boutroux
        A = solve_boutroux(phi).A
        z0, z1, _ = C.cubic_roots(A, labeling_phase=phi)
        assert sgn * (z1.imag - z0.imag) >= 0


def test_w_leading_branch():
    cur = C.curve_data(A0)
    w = C.w_eval(cur, C.SheetPoint(1e6))
    assert abs(w / (2 * 1e6 ** 1.5) - 1) < 1e-5
    assert w.real > 0


def test_w_at_zero_by_independent_continuation():
    """Continue sqrt(4z^3 - A0 z^2 + 1) from +R to 0 along a path dodging
    the cuts, tracking the root by sign continuity."""
    cur = C.curve_data(A0)
    path = np.concatenate([
        np.linspace(10.0, 1.0 - 1.0j, 400),
        np.linspace(1.0 - 1.0j, 0.0, 200),
    ])
    w = np.sqrt(4 * path[0] ** 3 - A0 * path[0] ** 2 + 1)  # re > 0 at +R
    for z in path[1:]:
        cand = np.sqrt(4 * z ** 3 - A0 * z ** 2 + 1)
        if abs(cand - w) > abs(cand + w):
            cand = -cand
        w = cand
    assert abs(w - (-1.0)) < 1e-9
    assert abs(C.w_eval(cur, C.SheetPoint(0.0 + 0j)) - (-1.0)) < 1e-12


def test_sheet_antisymmetry():
    rng = np.random.default_rng(3)
    cur = C.curve_data(4.0 - 1.0j, labeling_phase=0.3)
    for _ in range(25):
        z = complex(*rng.uniform(-2, 2, 2))
        if min(abs(z - r) for r in cur.roots) < 1e-3:
            continue
        up = C.w_eval(cur, C.SheetPoint(z, C.UPPER))
        lo = C.w_eval(cur, C.SheetPoint(z, C.LOWER))
        assert abs(up + lo) < 1e-13 * max(1, abs(up))


def test_branch_point_hit():
    cur = C.curve_data(A0 + 0.3)
    with pytest.raises(BranchPointHit):
        C.w_eval(cur, C.SheetPoint(cur.z0))


def test_example_81_integrals():
    cur = C.curve_data(A0)
    Ia = C.cycle_integral(cur, "a", C.W_OVER_Z2_DZ)
    Ib = C.cycle_integral(cur, "b", C.W_OVER_Z2_DZ)
    assert Ia == 0
    target = -2 ** (4 / 3) * 3 ** 1.5
    assert abs(Ib - target) < 1e-9 * abs(target)


def test_degenerate_curve_raises_for_divergent_kinds():
    cur = C.curve_data(A0)
    with pytest.raises(DegenerateCurve):
        C.cycle_integral(cur, "b", C.DZ_OVER_W)
    # residue shortcut for the a-period at the collapsed cut
    oa = C.cycle_integral(cur, "a", C.DZ_OVER_W)
    r = 2 ** (-1 / 3)
    residue = 1 / (2 * np.sqrt(r + 4 ** (-2 / 3)))
    assert abs(abs(oa) - 2 * np.pi * abs(residue)) < 1e-12
    # continuity with the near-degenerate quadrature value
    oa_near = C.cycle_integral(C.curve_data(A0 + 1e-7), "a", C.DZ_OVER_W)
    assert abs(oa - oa_near) < 1e-3


def test_pairing_identity_12pi(pt02):
    cur = pt02.curve
    oa = C.cycle_integral(cur, "a", C.DZ_OVER_W)
    ob = C.cycle_integral(cur, "b", C.DZ_OVER_W)
    Ia = C.cycle_integral(cur, "a", C.W_OVER_Z2_DZ)
    Ib = C.cycle_integral(cur, "b", C.W_OVER_Z2_DZ)
    assert abs(oa * Ib - ob * Ia - 12j * np.pi) < 1e-8


def test_pairing_identity_A2_over_15(pt02):
    cur = pt02.curve
    oa = C.cycle_integral(cur, "a", C.DZ_OVER_W)
    ob = C.cycle_integral(cur, "b", C.DZ_OVER_W)
    Ja = C.cycle_integral(cur, "a", C.W_DZ)
    Jb = C.cycle_integral(cur, "b", C.W_DZ)
    target = -(cur.A ** 2 / 15) * np.pi * 1j
    assert abs(oa * Jb - ob * Ja - target) < 1e-8


def test_action_derivative_is_minus_half_period(pt02):
    A = pt02.A
    eps = 1e-6
    for cyc in ("a", "b"):
        vals = {}
        for dA in (eps, -eps):
            cur = C.curve_data(A + dA, labeling_phase=0.2,
                               near=pt02.curve.roots)
            vals[dA] = C.cycle_integral(cur, cyc, C.W_OVER_Z2_DZ)
        fd = (vals[eps] - vals[-eps]) / (2 * eps)
        om = C.cycle_integral(pt02.curve, cyc, C.DZ_OVER_W)
        assert abs(fd + om / 2) < 1e-6


def test_node_doubling_and_homotopy_invariance(pt02):
    cur = pt02.curve
    ref = C.cycle_integral(cur, "a", C.W_OVER_Z2_DZ, tol=1e-11)
    tight = C.cycle_integral(cur, "a", C.W_OVER_Z2_DZ, tol=1e-13)
    assert abs(ref - tight) < 1e-9
    # homotopic deformation: different ellipse aspect
    f = C._integrand(cur, C.W_OVER_Z2_DZ)
    import dp3.quad as quad
    c, h = cur.cut_center, cur.cut_half
    for rho in (0.3, 0.6):
        def g(th, rho=rho):
            z = c + h * np.cos(th - 1j * rho)
            dz = -h * np.sin(th - 1j * rho)
            return f(z) * dz
        val = C._A_ORIENT * quad.trapezoid_closed(g, tol=1e-12)
        assert abs(val - ref) < 1e-9


def test_omega0_tail_consistency_and_lattice_shift(pt02):
    cur = pt02.curve
    o1 = C.omega0(cur, tail_scale=1.0 + abs(cur.z2))
    o2 = C.omega0(cur, tail_scale=2.5 + abs(cur.z2))
    assert abs(o1 - o2) < 1e-9
    # adding a full a-loop changes omega0 by exactly +-Omega_a
    oa = C.cycle_integral(cur, "a", C.DZ_OVER_W)
    f = C._integrand(cur, C.DZ_OVER_W)
    loop = C._acycle_integral(cur, f, tol=1e-12)
    assert abs(abs(loop) - abs(oa)) < 1e-10
    shifted = o1 + loop
    assert min(abs(shifted - o1 - s * oa) for s in (-1, 1)) < 1e-10


def test_golden_omega0_phi03():
    """Golden value from the doubled-node high-order oracle (frozen)."""
    import json
    import pathlib
    from dp3.boutroux import solve_boutroux
    rec = json.loads((pathlib.Path(__file__).parent / "golden"
                      / "omega0_phi03.json").read_text())
    pt = solve_boutroux(0.3)
    o = C.omega0(pt.curve)
    assert abs(o - complex(rec["re"], rec["im"])) < 1e-9
