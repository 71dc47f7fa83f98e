"""Desk-scale numeric direct monodromy for the rank-two lambda system.

The system d Psi / d lambda = (t/3) B(lambda, t) Psi with

    B = b1 sigma1 + b2 sigma2 + b3 sigma3,
    b1 = -(i/2)(2 e^{i phi} y + i Gamma0 / y) + 2 i e^{i phi} / lambda^2,
    b2 = (1/2)(2 e^{i phi} y - i Gamma0 / y),
    b3 = -i e^{i phi} lambda - (Gamma0 + 3 (1/2 + i a)/t) / lambda,
    Gamma0 = y^t/y - i e^{i phi}/y - (1 + 3 i a)/t,

is integrated along a two-ray path (the rays arg lambda = phi near 0 and
arg lambda = -phi/2 near infinity are loci where the respective leading
exponentials are purely oscillatory) joined by an arc at a mid radius.

Least-squares window matching against the leading-order frames

    F_inf = lambda^{-(1/2+ia) sigma3} exp(-(i/6) e^{i phi} t lambda^2 sigma3),
    F_0   = (i/sqrt2)(sigma1 + sigma3) exp(-(2i/3) e^{i phi} t sigma3 / lambda)

yields the connection matrix G_hat (the hat data satisfy the same-form
monodromy manifold relation, so all Kitaev-Vartanian invariants
g11 g22, g12/g22, g21/g11 are twist free).  The accuracy cap is the
leading-order frame error O(lambda_small) + O(1/lambda_large); tolerances
downstream are of the 1e-4 class (experimental tier).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quad
from .curve import (DZ_OVER_W, DZ_OVER_ZW, DZ_OVER_Z2W, W_OVER_Z2_DZ,
                    SheetPoint, cauchy_kernel, curve_data, cycle_integral,
                    w_eval)
from .errors import IntegrationFailure, MatchingIllConditioned
from .monodromy import solve_stokes_from_G, manifold_residual
from .oracle import to_tau_u
from .stokes import mu_squared

_SQ2 = np.sqrt(2.0)


@dataclass(frozen=True)
class LinSysParams:
    t: float
    phi: float
    a: complex
    y: complex
    yt: complex
    epsilon: int = 1
    b: float = 2.0

    @property
    def gamma0(self):
        return self.yt / self.y - 1j * np.exp(1j * self.phi) / self.y \
            - (1 + 3j * self.a) / self.t


@dataclass(frozen=True)
class NumericConnection:
    G_hat: np.ndarray
    theta_star: complex
    G: np.ndarray
    residuals: dict = field(default_factory=dict)


def b_coeffs(lam, params: LinSysParams):
    e = np.exp(1j * params.phi)
    g0 = params.gamma0
    b1 = -(0.5j) * (2 * e * params.y + 1j * g0 / params.y) + 2j * e / lam ** 2
    b2 = 0.5 * (2 * e * params.y - 1j * g0 / params.y)
    b3 = -1j * e * lam - (g0 + 3 * (0.5 + 1j * params.a) / params.t) / lam
    return b1, b2, b3


def b_matrix(lam, params: LinSysParams):
    b1, b2, b3 = b_coeffs(lam, params)
    return np.array([[b3, b1 - 1j * b2], [b1 + 1j * b2, -b3]])


def mu_squared_check(lam, params: LinSysParams):
    """b1^2 + b2^2 + b3^2 must reproduce the characteristic mu^2 built from
    the modulus function of the same state."""
    b1, b2, b3 = b_coeffs(lam, params)
    from .oracle import a_phi_of_state
    aphi = a_phi_of_state(params.t, params.y, params.yt, params.phi, params.a)
    return b1 ** 2 + b2 ** 2 + b3 ** 2, mu_squared(lam, params.t, params.phi,
                                                   params.a, aphi)


def frame_inf(lam, t, phi, a):
    d = -(0.5 + 1j * a) * np.log(lam) - (1j / 6) * np.exp(1j * phi) * t * lam ** 2
    return np.array([[np.exp(d), 0], [0, np.exp(-d)]])


def frame_zero(lam, t, phi):
    th = -(2j / 3) * np.exp(1j * phi) * t / lam
    core = (1j / _SQ2) * np.array([[1, 1], [1, -1]], dtype=complex)
    return core @ np.array([[np.exp(th), 0], [0, np.exp(-th)]])


def _rk45_matrix(rhs, s0, s1, M0, rtol=1e-10, atol=1e-12, collect_at=()):
    """Dormand-Prince march of a matrix ODE along real parameter s; returns
    (M(s1), dict of collected M values, max |det-1| drift observed)."""
    from .oracle import _DP_A, _DP_B4, _DP_B5, _DP_C
    want = sorted(collect_at)
    got = {}
    s, M = s0, M0.astype(complex)
    h = (s1 - s0) / 200
    k1 = rhs(s, M)
    det0 = np.linalg.det(M0)
    drift = 0.0
    guard = 0
    while s < s1 - 1e-13:
        guard += 1
        if guard > 2_000_000:
            raise IntegrationFailure("step budget exhausted in lambda march")
        while want and want[0] - s <= 1e-14:
            got[want.pop(0)] = M.copy()
        h = min(h, s1 - s)
        if want and s + h > want[0]:
            h = want[0] - s          # land exactly on the collection point
        ks = [k1]
        for i in range(1, 7):
            Mi = M + h * sum(_DP_A[i][j] * ks[j] for j in range(i))
            ks.append(rhs(s + _DP_C[i] * h, Mi))
        M5 = M + h * sum(_DP_B5[j] * ks[j] for j in range(7))
        M4 = M + h * sum(_DP_B4[j] * ks[j] for j in range(7))
        sc = atol + rtol * np.maximum(np.abs(M), np.abs(M5))
        err = float(np.sqrt(np.mean(np.abs((M5 - M4) / sc) ** 2)))
        if err <= 1.0:
            s += h
            M = M5
            k1 = ks[6]
            drift = max(drift, abs(np.linalg.det(M) / det0 - 1))
            while want and want[0] - s <= 1e-12:
                got[want.pop(0)] = M.copy()
        h = h * min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0 else h * 5
    while want:
        got[want.pop(0)] = M.copy()
    return M, got, drift


def _leg(params: LinSysParams, r_from, th_from, r_mid, th_mid):
    """lambda(s) along [ray at th_from from r_from to r_mid] + [arc to th_mid].

    Integrating each frame only over its own leg halves the exponential
    swing of the connecting arc; the two legs meet at the mid anchor
    r_mid e^{i th_mid}."""
    s1 = abs(r_mid - r_from)
    sgn_r = 1.0 if r_mid >= r_from else -1.0
    s2 = r_mid * abs(th_mid - th_from)
    sgn_th = np.sign(th_mid - th_from) if th_mid != th_from else 1.0

    def lam_of(s):
        if s <= s1:
            return (r_from + sgn_r * s) * np.exp(1j * th_from)
        u = min((s - s1) / max(s2, 1e-300), 1.0)
        return r_mid * np.exp(1j * (th_from + (th_mid - th_from) * u))

    def dlam_of(s):
        if s <= s1:
            return sgn_r * np.exp(1j * th_from)
        u = min((s - s1) / max(s2, 1e-300), 1.0)
        return 1j * sgn_th * np.exp(1j * (th_from + (th_mid - th_from) * u))

    return lam_of, dlam_of, s1 + s2


def _ls_fit(frames, values):
    """Least squares C with values_j ~ frames_j @ C; returns (C, cond)."""
    A = np.vstack(frames)
    B = np.vstack(values)
    C, *_ = np.linalg.lstsq(A, B, rcond=None)
    cond = float(np.linalg.cond(A))
    return C, cond


def _phase_uniform_window(params, lam_anchor, inner, n_window, cycles):
    """Sample radii whose leading exponential phase is uniform over exactly
    `cycles` half-turns, so averaging kills the oscillatory part of the
    frame truncation error identically."""
    t = params.t
    if inner:
        # phase = (2t/3)/r: uniform grid in 1/r spanning 2 pi cycles
        span = 3 * np.pi * cycles / t
        invr = np.linspace(1 / lam_anchor - span, 1 / lam_anchor, n_window,
                           endpoint=False)
        return 1 / invr[::-1]
    # phase = (t/6) r^2: uniform grid in r^2
    span = 12 * np.pi * cycles / t
    r2 = np.linspace(lam_anchor ** 2 - span, lam_anchor ** 2, n_window,
                     endpoint=False)
    return np.sqrt(r2)


def _march_leg(params, leg, M_init, collect_s, rtol):
    lam_of, dlam_of, s_end = leg
    t = params.t

    def rhs(s, M):
        return (t / 3) * dlam_of(s) * (b_matrix(lam_of(s), params) @ M)

    M_end, got, drift = _rk45_matrix(rhs, 0.0, s_end, M_init, rtol=rtol,
                                     collect_at=[s for s in collect_s if s > 1e-14])
    got[0.0] = M_init
    return M_end, got, drift


def _window_constant(got, s_list, frames):
    """Average of N(s_j)^{-1} F(lambda_j) over the phase-uniform window;
    returns (K, det before unimodular projection)."""
    acc = np.zeros((2, 2), dtype=complex)
    for s, F in zip(s_list, frames):
        acc += np.linalg.solve(got[s], F)
    K = acc / len(s_list)
    det = np.linalg.det(K)
    return K / np.sqrt(det), det


def direct_connection(params: LinSysParams, matching_radii=(0.05, 8.0),
                      r_mid=1.6, n_window=48, window_cycles=3, rtol=1e-10,
                      cond_limit=1e12) -> NumericConnection:
    """Numeric connection matrix from two one-sided integrations.

    Each leading frame is transported from its own matching radius along
    its anti-Stokes ray (arg lambda = phi inward, arg lambda = -phi/2
    outward) and around the connecting arc to the common mid anchor at
    r_mid e^{i phi/4}; G_hat = Y0(mid)^{-1} Yinf(mid).  The residual frame
    truncation is reduced by averaging the matching constant over a
    phase-uniform window (its oscillatory part cancels exactly), and the
    matching constants are projected onto det = 1, which holds for the
    exact ones (ratio of unimodular solutions); projection sizes are
    recorded in the diagnostics.
    """
    lam_small, lam_large = matching_radii
    t, phi, a = params.t, params.phi, params.a
    th_mid = phi / 4

    # ----- inner leg -----
    lam_in = _phase_uniform_window(params, lam_small, True, n_window,
                                   window_cycles)
    leg0 = _leg(params, lam_in[0], phi, r_mid, th_mid)
    s_in = list(lam_in - lam_in[0])
    M0 = frame_zero(lam_in[0] * np.exp(1j * phi), t, phi)
    N0_mid, got0, drift0 = _march_leg(params, leg0, M0, s_in, rtol)
    F0s = [frame_zero(r * np.exp(1j * phi), t, phi) for r in lam_in]
    K0, det0 = _window_constant(got0, s_in, F0s)

    # ----- outer leg -----
    lam_out = _phase_uniform_window(params, lam_large, False, n_window,
                                    window_cycles)
    legI = _leg(params, lam_out[-1], -phi / 2, r_mid, th_mid)
    s_out = list(lam_out[-1] - lam_out[::-1])
    MI = frame_inf(lam_out[-1] * np.exp(-1j * phi / 2), t, phi, a)
    NI_mid, gotI, driftI = _march_leg(params, legI, MI, s_out, rtol)
    FIs = [frame_inf(r * np.exp(-1j * phi / 2), t, phi, a)
           for r in lam_out[::-1]]
    KI, detI = _window_constant(gotI, s_out, FIs)

    Y0_mid = N0_mid @ K0
    YI_mid = NI_mid @ KI
    cond = float(np.linalg.cond(Y0_mid))
    if cond > cond_limit:
        raise MatchingIllConditioned("dominant/recessive mixing at the anchor",
                                     cond=cond)
    G_hat = np.linalg.solve(Y0_mid, YI_mid)
    det = np.linalg.det(G_hat)
    residuals = {
        "wronskian_drift": max(drift0, driftI),
        "det_G_hat_minus_1": abs(det - 1),
        "window_projection_inner": abs(det0 - 1),
        "window_projection_outer": abs(detI - 1),
        "anchor_condition": cond,
        "matching_radii": (lam_small, lam_large),
    }
    th_star = theta_star(params)
    G = G_hat @ np.array([[1 / th_star, 0], [0, th_star]], dtype=complex)
    try:
        st = solve_stokes_from_G(G_hat / np.sqrt(det), a)
        residuals["manifold_residual"] = manifold_residual(
            G_hat / np.sqrt(det), a, st)
    except Exception as exc:   # keep diagnostics even for odd G
        residuals["manifold_residual"] = float("nan")
        residuals["manifold_error"] = repr(exc)
    return NumericConnection(G_hat, th_star, G, residuals)


def theta_star(params: LinSysParams):
    """Theta_{0,*} = Theta_0 c_0^{1/2 + i a} with the zero-phase convention
    for the auxiliary angle (the twist drops out of every Kitaev-Vartanian
    invariant, so only a phase convention is involved):

        Theta_0 = (eps b)^{1/4} tau^{-1/4} (-3 b y / (2x))^{-1/2},
        c_0 = (3/2) sqrt(eps b) tau^{1/2} / x.
    """
    e = np.exp(1j * params.phi)
    x = params.t * e
    tau, _u = to_tau_u(x, params.y, params.epsilon, params.b)
    th0 = (params.epsilon * params.b) ** 0.25 * tau ** -0.25 \
        * (-3 * params.b * params.y / (2 * x)) ** -0.5
    c0 = 1.5 * np.sqrt(params.epsilon * params.b + 0j) * np.sqrt(tau) / x
    return th0 * c0 ** (0.5 + 1j * params.a)


# ---------------------------------------------------------------------------
# closed-form predictions for the invariant log channels
# ---------------------------------------------------------------------------

def _z_pm(params: LinSysParams):
    zp = params.y
    zm = 0.5j * np.exp(-1j * params.phi) * params.gamma0 / params.y
    return zp, zm


def _sheet_point(cur, z, w_target):
    up = w_eval(cur, SheetPoint(z, +1))
    return SheetPoint(z, +1) if abs(up - w_target) <= abs(-up - w_target) \
        else SheetPoint(z, -1)


def prop61_prediction(params: LinSysParams, A_phi=None, tol=quad.DEFAULT_TOL,
                      use_rewrite=False):
    """Leading asymptotics of the invariant log channels:

        log(g12/g22)   = (i e^{i phi} t/6) int_b w/z^2
                         - (1/4) int_b W + ((1+2ia)/4) int_b dz/(zw),
        log(g11 g22)   = the a-cycle version + pi i,

    over the curve of the state's own modulus a_phi(t), with
    W = (w(z+)/(z-z+) - w(z-)/(z-z-)) / w and z+ = y,
    z- = (i/2) e^{-i phi} Gamma0 / y.  With use_rewrite the secular term is
    assembled from the equivalent combination
    -(i e^{i phi} a_phi t/6) int dz/w + (i e^{i phi} t/2) int dz/(z^2 w).
    """
    from .oracle import a_phi_of_state
    t, phi, a = params.t, params.phi, params.a
    e = np.exp(1j * phi)
    aphi = a_phi_of_state(t, params.y, params.yt, phi, a)
    near = None
    if A_phi is not None:
        near = curve_data(A_phi, labeling_phase=phi).roots
    cur = curve_data(aphi, labeling_phase=phi, near=near)
    zp, zm = _z_pm(params)
    # w-values at the state's points: w ~ 1 - i e^{-i phi} Gamma0 z
    wp_t = 1 - 1j * np.exp(-1j * phi) * params.gamma0 * zp
    wm_t = 1 - 1j * np.exp(-1j * phi) * params.gamma0 * zm
    sp = _sheet_point(cur, zp, wp_t)
    sm = _sheet_point(cur, zm, wm_t)
    wp_v = w_eval(cur, sp)
    wm_v = w_eval(cur, sm)

    out = {}
    for cyc in ("a", "b"):
        if use_rewrite:
            secular = (-1j * e * aphi * t / 6) * cycle_integral(cur, cyc, DZ_OVER_W, tol=tol) \
                + (1j * e * t / 2) * cycle_integral(cur, cyc, DZ_OVER_Z2W, tol=tol)
        else:
            secular = (1j * e * t / 6) * cycle_integral(cur, cyc, W_OVER_Z2_DZ, tol=tol)
        Wint = (wp_v * cycle_integral(cur, cyc, cauchy_kernel(sp), tol=tol)
                - wm_v * cycle_integral(cur, cyc, cauchy_kernel(sm), tol=tol))
        zw = cycle_integral(cur, cyc, DZ_OVER_ZW, tol=tol)
        out[cyc] = secular - Wint / 4 + (1 + 2j * a) * zw / 4
    res = {
        "log_g11g22": out["a"] + 1j * np.pi,
        "a_phi": aphi,
        "curve": cur,
    }
    if phi > 0:
        res["log_g12_over_g22"] = out["b"]
    else:
        res["log_g21_over_g11"] = -out["b"]
    return res
