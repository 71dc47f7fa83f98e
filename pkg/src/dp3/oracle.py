"""Direct integration of y'' = (y')^2/y - y'/x - 2y^2 + 3a/x + 1/y along rays.

The integrator is an embedded Dormand-Prince 5(4) pair marching the real
parameter s of x = e^{i phi} (t0 + s) with two charts:

* y-chart: state (y, dy/dt); the right side groups ((y')^2 + 1)/y so that
  zero crossings of y (where y' -> +-i) stay numerically benign;
* inverse chart v = 1/y: v'' = (v')^2/v - v'/x + 2 - 3 a v^2/x - v^3,
  which integrates through the double poles of y (v has a double zero, and
  (v')^2/v stays O(1) because (v')^2 ~ 4 v there).

Charts switch whenever the active variable exceeds R_SWITCH in modulus;
the incoming variable is then below 1/R_SWITCH, a structural hysteresis of
factor R_SWITCH^2/... well above the configured factor 2.

Pole detection: in the inverse chart the double zeros of v are located by
local minima of |v| followed by the double-root Newton step
t* = t - 2 v / v_t (v ~ c (t - t*)^2 near a pole).

The module also provides the modulus function

    a_phi(t) = e^{-2 i phi} (y^t/y + 1/(2t))^2 + 4 y + 1/y^2
               - 3 i e^{-i phi} (1 + 2 i a) / (t y),

seeding from the pe representation (with the square-root alternative tied
to the bounded correction B_phi), the closed-form B_phi estimate, and the
bidirectional variable change eps*tau*u = (x/3)^2 y, eps*b*tau^2 = 2(x/3)^3.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .asymptotics import AsymptoticSolution, eval_y, eval_yprime, pole_lattice
from .curve import W_OVER_Z2_DZ, cycle_integral
from .elliptic import g0_at_zero, lattice_reduce, theta_logderiv
from .errors import (BranchAmbiguity, ChartSingularity, NearPole,
                     StepUnderflow)

R_SWITCH = 10.0
_Y_FLOOR = 1e-13

Y_CHART = "y_chart"
V_CHART = "inverse_chart"


@dataclass(frozen=True)
class OdeState:
    x: complex
    y: complex
    yp: complex            # dy/dx
    chart: str = Y_CHART


@dataclass(frozen=True)
class RayRun:
    phi: float
    t_start: complex
    t_end: complex
    samples: tuple         # (t, y, yp) triples, yp = dy/dx
    detected_poles: tuple  # x-plane locations
    seed_source: str
    charts: tuple
    n_steps: int
    n_switches: int


@dataclass
class Controls:
    rtol: float = 1e-10
    atol: float = 1e-12
    hmax: float = np.inf
    fixed_step: float | None = None   # disables adaptivity (order tests)
    pole_threshold: float = 0.25      # |v| below which dips count as transits
    max_steps: int = 500_000


def p3_rhs(x, y, yp, a):
    """Right side of the y-equation; yp = dy/dx."""
    if abs(y) < _Y_FLOOR:
        raise ChartSingularity(f"|y| = {abs(y):.2e} below floor in the y-chart")
    return (yp ** 2 + 1) / y - yp / x - 2 * y ** 2 + 3 * a / x


def p3_rhs_inverse(x, v, vp, a):
    """Right side for v = 1/y: v'' = (v')^2/v - v'/x + 2 - 3 a v^2/x - v^3."""
    if abs(v) < 1e-300:
        raise ChartSingularity("v = 0 exactly")
    return vp ** 2 / v - vp / x + 2 - 3 * a * v ** 2 / x - v ** 3


# Dormand-Prince 5(4) tableau
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)


def _flip_state(st):
    w, wt = st
    return np.array([1 / w, -wt / w ** 2])


def integrate_ray(seed: OdeState, phi: float, t_end, controls: Controls | None = None,
                  dense_ts=None, seed_source="user") -> RayRun:
    """March from seed.x = e^{i phi} t0 to e^{i phi} t_end (t may be complex
    with a fixed imaginary offset; the step parameter is re t)."""
    c = controls or Controls()
    e = np.exp(1j * phi)
    t0 = seed.x / e
    span = complex(t_end) - t0
    if abs(span.imag) > 1e-9 * max(1.0, abs(span)):
        raise ValueError("t_end must share the imaginary offset of the seed")
    return _march(seed, phi, t0, complex(t_end), c, dense_ts, seed_source)


def _march(seed: OdeState, phi, t0, t_end, c: Controls, dense_ts, seed_source):
    e = np.exp(1j * phi)
    a = getattr(seed, "a", 0.0)
    # allow the formal exponent to ride along on the seed
    a = seed_a(seed)

    def f_y(t, st):
        x = e * t
        y, yt = st
        return np.array([yt, e * e * p3_rhs(x, y, yt / e, a)])

    def f_v(t, st):
        x = e * t
        v, vt = st
        return np.array([vt, e * e * p3_rhs_inverse(x, v, vt / e, a)])

    chart = seed.chart
    st = np.array([seed.y, e * seed.yp])        # track d/dt internally
    if chart == Y_CHART and abs(seed.y) > R_SWITCH:
        st = _flip_state(st)
        chart = V_CHART

    span = (t_end - t0).real
    sgn = 1.0 if span >= 0 else -1.0
    h = c.fixed_step if c.fixed_step else sgn * min(1e-2, abs(span) / 10)
    smax = abs(span)
    s = 0.0

    samples = [(t0, *(st if chart == Y_CHART else _flip_state(st)))]
    charts = [chart]
    dips = []           # (t, v, vt) candidates in the v-chart
    poles = []
    n_switch = 0
    nst = 0
    f = f_y if chart == Y_CHART else f_v
    k1 = f(t0, st)
    dense = list(dense_ts) if dense_ts is not None else []
    dense_out = []

    while s < smax - 1e-13:
        if nst >= c.max_steps:
            raise StepUnderflow("step budget exhausted", location=t0 + sgn * s)
        nst += 1
        if c.fixed_step:
            h = sgn * min(c.fixed_step, smax - s)
        else:
            h = sgn * min(abs(h), smax - s, c.hmax)
        t = t0 + sgn * s
        ks = [k1]
        try:
            for i in range(1, 7):
                yi = st + h * sum(_DP_A[i][j] * ks[j] for j in range(i))
                ks.append(f(t + _DP_C[i] * h, yi))
        except ChartSingularity:
            h = h / 2
            if abs(h) < 1e-14:
                raise StepUnderflow("unresolved singularity", location=t)
            continue
        y5 = st + h * sum(_DP_B5[j] * ks[j] for j in range(7))
        y4 = st + h * sum(_DP_B4[j] * ks[j] for j in range(7))
        sc = c.atol + c.rtol * np.maximum(np.abs(st), np.abs(y5))
        err = float(np.sqrt(np.mean(np.abs((y5 - y4) / sc) ** 2)))
        if c.fixed_step or err <= 1.0:
            prev = st
            s += abs(h)
            t = t0 + sgn * s
            st = y5
            k1 = ks[6]
            if dense:
                # cubic Hermite fill-in for requested output points
                t_prev = t0 + sgn * (s - abs(h))
                while dense and (complex(dense[0]) - t).real * sgn <= 1e-12:
                    td = complex(dense.pop(0))
                    theta = (td - t_prev).real / (sgn * abs(h))
                    yv = _hermite(theta, prev, st, ks[0], k1, h)
                    if chart == Y_CHART:
                        dense_out.append((td, yv[0], yv[1] / e))
                    else:
                        w = _flip_state(yv)
                        dense_out.append((td, w[0], w[1] / e))
            if chart == V_CHART:
                dips.append((t, st[0], st[1]))
                if len(dips) >= 3:
                    (ta, va, _), (tb, vb, vtb), (tc, vc, _) = dips[-3:]
                    if abs(vb) < abs(va) and abs(vb) < abs(vc) \
                            and abs(vb) < c.pole_threshold:
                        poles.append(e * (tb - 2 * vb / vtb))
            if abs(st[0]) > R_SWITCH:
                st = _flip_state(st)
                chart = Y_CHART if chart == V_CHART else V_CHART
                f = f_y if chart == Y_CHART else f_v
                k1 = f(t, st)
                n_switch += 1
                dips.clear()
            samples.append((t, *(st if chart == Y_CHART else _flip_state(st))))
            charts.append(chart)
        if not c.fixed_step:
            h = h * min(5.0, max(0.2, 0.9 * err ** -0.2)) if err > 0 else h * 5
            if abs(h) < 1e-14:
                raise StepUnderflow("step underflow", location=t0 + sgn * s)

    out = [(t, y, yt / e) for (t, y, yt) in samples]
    if dense_ts is not None:
        out = dense_out
    # deduplicate pole hits from adjacent dips
    poles_u = []
    for p in poles:
        if not poles_u or abs(p - poles_u[-1]) > 0.05:
            poles_u.append(p)
    return RayRun(phi, t0, t_end, tuple(out), tuple(poles_u), seed_source,
                  tuple(charts), nst, n_switch)


def _hermite(theta, y0, y1, f0, f1, h):
    h00 = 2 * theta ** 3 - 3 * theta ** 2 + 1
    h10 = theta ** 3 - 2 * theta ** 2 + theta
    h01 = -2 * theta ** 3 + 3 * theta ** 2
    h11 = theta ** 3 - theta ** 2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def seed_a(seed: OdeState):
    return getattr(seed, "_a", 0.0)


@dataclass(frozen=True)
class SeededState(OdeState):
    _a: complex = 0.0


def a_phi_of_state(t, y, yt, phi, a):
    """The modulus function a_phi(t) of a state (y, y^t) on the ray."""
    e = np.exp(1j * phi)
    return (np.exp(-2j * phi) * (yt / y + 1 / (2 * t)) ** 2 + 4 * y + 1 / y ** 2
            - 3j * np.exp(-1j * phi) * (1 + 2j * a) / (t * y))


def seed_from_asymptotics(sol: AsymptoticSolution, t, use_sqrt_form=False) -> SeededState:
    """OdeState on the pe representation at x = e^{i phi} t.

    The default derivative is the exact pe' evaluation; the square-root
    alternative (which feeds on the bounded correction B_phi) is available
    for cross-checking and must agree to O(1/t).
    """
    e = np.exp(1j * sol.phi)
    x = e * t
    from .asymptotics import require_clear_of_poles
    require_clear_of_poles(sol, x)
    y = eval_y(sol, x)
    ypx = eval_yprime(sol, x)
    if use_sqrt_form:
        yt = yt_sqrt_form(sol, t)
    else:
        yt = e * ypx
    return SeededState(x=x, y=y, yp=yt / e, chart=Y_CHART, _a=sol.a)


def yt_sqrt_form(sol: AsymptoticSolution, t):
    """dy/dt from the square-root seeding formula

        y^t = -y/(2t) + i e^{i phi} sqrt(4y^3 - A y^2 + 1
              - (3 i e^{-i phi}(1+2ia) + B y) y / t),

    branch resolved against the exact pe' derivative."""
    e = np.exp(1j * sol.phi)
    x = e * t
    y = eval_y(sol, x)
    B = bphi_asymptotic(sol, t)
    rad = (4 * y ** 3 - sol.A * y ** 2 + 1
           - (3j * np.exp(-1j * sol.phi) * (1 + 2j * sol.a) + B * y) * y / t)
    root = np.sqrt(rad)
    cand = -y / (2 * t) + 1j * e * root
    ref = e * eval_yprime(sol, x)
    if abs(cand - ref) > abs(-y / (2 * t) - 1j * e * root - ref):
        cand = -y / (2 * t) - 1j * e * root
    return cand


_BPHI_CAL: dict = {}


def _bphi_raw(sol: AsymptoticSolution, t):
    ctx = sol.ctx
    e = np.exp(1j * sol.phi)
    x = e * t
    Ja = cycle_integral(ctx.curve, "a", W_OVER_Z2_DZ)
    u = 1j * (x - sol.x0)
    ld1 = theta_logderiv(u / ctx.omega_a + ctx.nu, ctx.tau)
    ld2 = theta_logderiv((u - sol.omega0) / ctx.omega_a + ctx.nu, ctx.tau)
    g00 = g0_at_zero(ctx)
    G = sol.G_used
    g11g22 = G[0, 0] * G[1, 1]
    rhs = (3 * (ld1 + ld2) + 1.5 * (1 + 2j * sol.a) * g00 * ctx.omega_a
           + 6 * np.log(g11g22) - 6j * np.pi)
    return (2 / ctx.omega_a) * (t * Ja - rhs / (1j * e))


def bphi_asymptotic(sol: AsymptoticSolution, t, t_ref=120.0):
    """Closed-form bounded correction B_phi(t) of the modulus function:

        i e^{i phi}(t J_a - (Omega_a/2) B) =
            3[ (theta'/theta)(i(x-x0)/Omega_a + nu)
               + (theta'/theta)((i(x-x0) - Omega_0)/Omega_a + nu) ]
            + (3/2)(1+2ia) g0(0+) Omega_a + 6 log(g11 g22) - 6 pi i.

    The display fixes the additive class of the right side only through the
    contour constructions behind it (principal log of g11 g22 and the
    lattice classes of the theta arguments contribute multiples of 6 pi i,
    shifting B by multiples of -12 pi e^{-i phi}/Omega_a).  The integer is
    pinned once per solution by matching the drift of the modulus function
    along the pe representation itself at a clear reference point; that
    calibration is cached and reused.
    """
    key = (id(sol), float(t_ref))
    if key not in _BPHI_CAL:
        e = np.exp(1j * sol.phi)
        tr, _ = clear_ray_start(sol, t_ref, 1.0)
        seed = seed_from_asymptotics(sol, tr)
        aphi = a_phi_of_state(tr, seed.y, e * seed.yp, sol.phi, sol.a)
        b_def = (aphi - sol.A) * tr
        unit = -12 * np.pi * np.exp(-1j * sol.phi) / sol.ctx.omega_a
        raw = _bphi_raw(sol, tr)
        m = int(np.round(np.real((b_def - raw) * np.conj(unit)) / abs(unit) ** 2))
        _BPHI_CAL[key] = m * unit
    return _bphi_raw(sol, t) + _BPHI_CAL[key]


# ---------------------------------------------------------------------------
# variable change between the two normalizations
# ---------------------------------------------------------------------------

def to_tau_u(x, y, epsilon=1, b=2.0):
    """(x, y) -> (tau, u) via eps*b*tau^2 = 2(x/3)^3, eps*tau*u = (x/3)^2 y.

    Principal square root; BranchAmbiguity at x = 0."""
    if x == 0:
        raise BranchAmbiguity("x = 0")
    tau = np.sqrt(2 * (x / 3) ** 3 / (epsilon * b))
    u = (x / 3) ** 2 * y / (epsilon * tau)
    return tau, u


def to_x_y(tau, u, epsilon=1, b=2.0):
    """(tau, u) -> (x, y), principal cube root; BranchAmbiguity at tau = 0."""
    if tau == 0:
        raise BranchAmbiguity("tau = 0")
    x = 3 * (epsilon * b * tau ** 2 / 2) ** (1 / 3)
    y = epsilon * tau * u / (x / 3) ** 2
    return x, y


# ---------------------------------------------------------------------------
# verification protocol helpers
# ---------------------------------------------------------------------------

def lattice_matched_start(sol: AsymptoticSolution, t_base, t_target):
    """Translate t_base by lattice vectors (in the t-plane) to land near
    t_target: windows then see an identical pole geometry."""
    e = np.exp(1j * sol.phi)
    la = -1j * sol.ctx.omega_a / e
    lb = -1j * sol.ctx.omega_b / e
    best = t_base
    # greedy descent over neighbor steps is enough for our spans
    improved = True
    while improved:
        improved = False
        for dm, dn in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1),
                       (1, -1), (-1, 1)):
            cand = best + dm * la + dn * lb
            if abs(cand - t_target) < abs(best - t_target):
                best = cand
                improved = True
    return best


def clear_ray_start(sol: AsymptoticSolution, T, length, kappa0=1.5, n_scan=61):
    """Starting t (complex, |im| <= kappa0) whose window [t, t+length]
    maximizes the distance to the pole lattice."""
    e = np.exp(1j * sol.phi)
    win = pole_lattice(sol, _window_box(e, T, length, kappa0 + 2))
    pts = [p / e for p in win]
    best, best_d = T, -1.0
    for sig in np.linspace(-kappa0, kappa0, n_scan):
        d = np.inf
        for p in pts:
            tt = min(max(p.real, T), T + length)
            d = min(d, abs(tt + 1j * sig - p))
        if d > best_d:
            best_d, best = d, T + 1j * sig
    return best, best_d


def _window_box(e, T, length, kappa):
    corners = [e * (T + 1j * s) for s in (-kappa, kappa)] + \
              [e * (T + length + 1j * s) for s in (-kappa, kappa)]
    re0 = min(c.real for c in corners)
    re1 = max(c.real for c in corners)
    im0 = min(c.imag for c in corners)
    im1 = max(c.imag for c in corners)
    return (re0, re1, im0, im1)


def window_sup_error(sol: AsymptoticSolution, t_start, length,
                     controls: Controls | None = None, exclusion=None):
    """Integrate one window from the asymptotic seed and return
    sup |y_num - y_as| over samples outside pole disks."""
    e = np.exp(1j * sol.phi)
    seed = seed_from_asymptotics(sol, t_start)
    run = integrate_ray(seed, sol.phi, t_start + length, controls)
    delta0 = exclusion if exclusion is not None else 0.25 * sol.ctx.min_period
    sup = 0.0
    from .asymptotics import distance_to_poles
    for (t, y, yp) in run.samples:
        x = e * t
        if distance_to_poles(sol, x) > delta0:
            sup = max(sup, abs(y - eval_y(sol, x)))
    return sup, run


def decay_table(sol: AsymptoticSolution, T_list, length=None, kappa0=1.5,
                controls: Controls | None = None):
    """Sup-error table over lattice-matched windows at the requested seed
    times; returns (rows, fitted_exponent) with rows (T_eff, sup_error)."""
    L = length if length is not None else abs(sol.ctx.omega_a) + abs(sol.ctx.omega_b)
    base, _ = clear_ray_start(sol, T_list[0], L, kappa0)
    rows = []
    for T in T_list:
        t0 = lattice_matched_start(sol, base, T)
        sup, run = window_sup_error(sol, t0, L, controls)
        rows.append((t0, sup))
    Ts = np.array([abs(t) for t, _ in rows])
    es = np.array([s for _, s in rows])
    slope = np.polyfit(np.log(Ts), np.log(es), 1)[0]
    return rows, -slope
