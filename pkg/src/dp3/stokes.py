"""Turning points and Stokes graphs of the lambda-plane characteristic roots.

The characteristic exponent of the rank-two system satisfies

    mu^2 = -e^{2 i phi} lambda^2 + e^{2 i phi} a_phi lambda^-2
           - 4 e^{2 i phi} lambda^-4 + 3 i e^{i phi} (1 + 2 i a) / t,

so turning points are the six roots of

    lambda^6 - 3 i e^{-i phi} (1 + 2 i a) lambda^4 / t - a_phi lambda^2 + 4,

an even polynomial: substituting z = lambda^-2 recovers the curve cubic
4 z^3 - a_phi z^2 + ... + 1 (exactly at t = infinity), which labels the
roots: lambda_k = 1/sqrt(z_k) with the branch containing 2^(1/6) for the
coalescing pair (k = 0, 1), the branch near 2^(2/3) i for lambda_2, and
the primed points their negatives.

Stokes curves are the level sets re int_{lambda_*}^lambda mu = 0 traced by
arclength continuation of the direction field arg(d lambda) = -arg(mu) +-
pi/2 with re-projection of the accumulated integral after every step.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LabelingAmbiguity, TraceStalled

LAMBDA_MAX = 1e3
LAMBDA_MIN = 1e-3
_PROJ_TOL = 1e-9


@dataclass(frozen=True)
class TurningPointSet:
    lambdas: tuple          # (l0, l1, l2, l0p, l1p, l2p)
    t: float                # may be inf
    phi: float
    a: complex
    a_phi: complex

    @property
    def unprimed(self):
        return self.lambdas[:3]

    def as_dict(self):
        names = ("lambda0", "lambda1", "lambda2",
                 "lambda0p", "lambda1p", "lambda2p")
        return dict(zip(names, self.lambdas))


@dataclass(frozen=True)
class StokesCurve:
    origin: complex
    origin_label: str
    polyline: tuple
    terminal: str           # 'zero' | 'infinity' | 'turning_point'
    terminal_label: str     # '0', 'inf', or the turning point name
    integral_drift: float   # max |re int mu| along the polyline


def mu_squared(lam, t, phi, a, a_phi):
    e2 = np.exp(2j * phi)
    base = -e2 * lam ** 2 + e2 * a_phi / lam ** 2 - 4 * e2 / lam ** 4
    if np.isinf(t):
        return base
    return base + 3j * np.exp(1j * phi) * (1 + 2j * a) / t


def _z_cubic_roots(t, phi, a, a_phi):
    """Roots of the z-image cubic 4z^3 - a_phi z^2 + p z + 1,
    p = -3 i e^{-i phi} (1+2ia)/t (0 at t = inf)."""
    p = 0.0 if np.isinf(t) else -3j * np.exp(-1j * phi) * (1 + 2j * a) / t
    return np.roots([4.0, -a_phi, p, 1.0]).astype(complex)


def turning_points(t, phi, a, a_phi, label_tol=1e-8) -> TurningPointSet:
    """The six turning points, labeled by continuity from the phi=0,
    t=inf anchor (pair coalescing at 2^(1/6), third point at 2^(2/3) i).

    The z-image (z = lambda^-2) of the t=inf turning-point polynomial is
    the curve cubic, so its continuity labels are reused; at finite t the
    roots are matched to their t=inf positions (LabelingAmbiguity if two
    of them come closer than label_tol without being the structural pair).
    """
    from .curve import cubic_roots, _match_to
    z_inf = cubic_roots(a_phi, labeling_phase=phi)
    if np.isinf(t):
        z0, z1, iso = z_inf
    else:
        r = _z_cubic_roots(t, phi, a, a_phi)
        (z0, z1, iso), ratio = _match_to(r, np.asarray(z_inf, dtype=complex))
        if ratio < 1.05 and min(abs(r[i] - r[j]) for i in range(3)
                                for j in range(i + 1, 3)) < label_tol:
            raise LabelingAmbiguity(
                "two turning points closer than tolerance; labels would be a guess")
    lam0 = _sqrt_branch(1 / z0, anchor=2 ** (1 / 6))
    lam1 = _sqrt_branch(1 / z1, anchor=2 ** (1 / 6))
    lam2 = _sqrt_branch(1 / iso, anchor=2 ** (2 / 3) * 1j)
    return TurningPointSet((lam0, lam1, lam2, -lam0, -lam1, -lam2),
                           float(t), float(phi), complex(a), complex(a_phi))


def _sqrt_branch(w, anchor):
    r = np.sqrt(w)
    return r if abs(r - anchor) <= abs(-r - anchor) else -r


def _mu_continuous(lam, t, phi, a, a_phi, prev_mu):
    mu = np.sqrt(mu_squared(lam, t, phi, a, a_phi))
    if prev_mu is not None and abs(mu - prev_mu) > abs(mu + prev_mu):
        mu = -mu
    return mu


def _initial_directions(lam0, t, phi, a, a_phi, r0):
    """Three departure angles from a simple turning point: for
    mu^2 ~ kappa (lam - lam0), re[(2/3) sqrt(kappa) (lam-lam0)^{3/2}] = 0
    gives theta_k = (2/3)(pi/2 + k pi - arg sqrt(kappa))."""
    kappa = (mu_squared(lam0 + r0, t, phi, a, a_phi)
             - mu_squared(lam0 - r0, t, phi, a, a_phi)) / (2 * r0)
    ang = np.angle(np.sqrt(kappa))
    return [(2 / 3) * (np.pi / 2 + k * np.pi - ang) for k in range(3)]


def trace_stokes_curves(tps: TurningPointSet, step0=1e-3, step_max=0.1,
                        capture=4e-2, max_points=40000):
    """All Stokes curves of the graph: three per simple turning point.

    Curves terminate at |lambda| > LAMBDA_MAX ('infinity'), < LAMBDA_MIN
    ('zero'), or within `capture` of another turning point
    ('turning_point').  Duplicate curves between the same pair of turning
    points are kept (each endpoint traces its own copy).
    """
    names = ("lambda0", "lambda1", "lambda2", "lambda0p", "lambda1p", "lambda2p")
    tp_list = list(zip(names, tps.lambdas))
    curves = []
    for name, lam0 in tp_list:
        for th in _initial_directions(lam0, tps.t, tps.phi, tps.a, tps.a_phi,
                                      step0):
            curve = _trace_one(tps, name, lam0, th, tp_list, step0, step_max,
                               capture, max_points)
            curves.append(curve)
    return curves


def _F_increment(lam_a, lam_b, t, phi, a, a_phi, mu_a):
    """int mu d lambda over the straight step, 3-point Gauss with branch
    continuity from mu_a; returns (value, mu_b)."""
    xs = (0.1127016653792583, 0.5, 0.8872983346207417)
    ws = (5 / 18, 8 / 18, 5 / 18)
    acc = 0.0 + 0.0j
    prev = mu_a
    mus = []
    for xi in xs:
        lam = lam_a + (lam_b - lam_a) * xi
        mu = _mu_continuous(lam, t, phi, a, a_phi, prev)
        mus.append(mu)
        prev = mu
    mu_b = _mu_continuous(lam_b, t, phi, a, a_phi, prev)
    for mu, wgt in zip(mus, ws):
        acc += wgt * mu
    return acc * (lam_b - lam_a), mu_b


def _trace_one(tps, name, lam0, theta, tp_list, step0, step_max, capture,
               max_points):
    t, phi, a, a_phi = tps.t, tps.phi, tps.a, tps.a_phi
    lam = lam0 + step0 * np.exp(1j * theta)
    # departure leg: mu ~ sqrt: integrate with the s^2 substitution
    F = _departure_integral(lam0, lam, t, phi, a, a_phi)
    mu = _mu_continuous(lam, t, phi, a, a_phi, None)
    # fix the local branch so the first step continues outward
    u = 1j * np.conj(mu) / abs(mu)
    if np.real(np.conj(lam - lam0) * u) < 0:
        u = -u
    pts = [lam0, lam]
    drift = abs(np.real(F))
    arclen = abs(lam - lam0)
    prev_u = u
    for _ in range(max_points):
        lam_here = pts[-1]
        d_origin = abs(lam_here - lam0)
        step = max(step0, 0.15 * d_origin)
        # nearby foreign turning point shrinks the step
        d_tp = min(abs(lam_here - lp) for nm, lp in tp_list if nm != name)
        step = min(step, max(step0, 0.3 * d_tp))
        # direction field turns on the scale |lambda| near 0 and infinity
        step = min(step, 0.25 * abs(lam_here), max(step_max, 0.12 * abs(lam_here)))
        u = 1j * np.conj(mu) / abs(mu)
        if np.real(np.conj(prev_u) * u) < 0:
            u = -u
        lam_new = pts[-1] + step * u
        dF, mu_new = _F_increment(pts[-1], lam_new, t, phi, a, a_phi, mu)
        F_new = F + dF
        # re-project onto re F = 0 along the gradient direction conj(mu)/|mu|
        for _ in range(3):
            if abs(np.real(F_new)) < _PROJ_TOL:
                break
            corr = -np.real(F_new) / abs(mu_new) * np.conj(mu_new) / abs(mu_new)
            dF2, mu2 = _F_increment(lam_new, lam_new + corr, t, phi, a, a_phi,
                                    mu_new)
            lam_new = lam_new + corr
            F_new += dF2
            mu_new = mu2
        if abs(lam_new - pts[-1]) < 1e-13:
            raise TraceStalled(f"stalled near {lam_new}", polyline=pts)
        arclen += abs(lam_new - pts[-1])
        drift = max(drift, abs(np.real(F_new)))
        pts.append(lam_new)
        prev_u = u
        F, mu = F_new, mu_new
        if abs(lam_new) > LAMBDA_MAX:
            return StokesCurve(lam0, name, tuple(pts), "infinity", "inf", drift)
        if abs(lam_new) < LAMBDA_MIN:
            return StokesCurve(lam0, name, tuple(pts), "zero", "0", drift)
        for nm, lp in tp_list:
            if nm != name and abs(lam_new - lp) < capture:
                pts.append(lp)
                return StokesCurve(lam0, name, tuple(pts), "turning_point",
                                   nm, drift)
    raise TraceStalled("point budget exhausted", polyline=pts)


def _departure_integral(lam0, lam, t, phi, a, a_phi, n=24):
    """int_{lam0}^{lam} mu with the sqrt vanishing absorbed (lam0 simple)."""
    xs, ws = np.polynomial.legendre.leggauss(n)
    s = (xs + 1) / 2
    acc = 0.0 + 0.0j
    prev = None
    d = lam - lam0
    for si, wi in zip(s, ws):
        z = lam0 + d * si ** 2
        mu = _mu_continuous(z, t, phi, a, a_phi, prev)
        prev = mu
        acc += wi * mu * 2 * d * si
    return acc / 2


def graph_adjacency(curves):
    """Edge multiset of the traced graph as a set of frozensets of labels."""
    edges = set()
    for c in curves:
        edges.add(frozenset((c.origin_label, c.terminal_label)))
    return edges


def reference_adjacency(side):
    """Adjacency of the two generic limit graphs.

    side '+' is the 0 < phi < pi/3 topology (chain 0 - lambda0 - lambda1 -
    inf), side '-' its mirror for -pi/3 < phi < 0.
    """
    plus = {frozenset(p) for p in [
        ("lambda0", "0"), ("lambda0", "lambda1"), ("lambda0", "lambda2"),
        ("lambda1", "inf"), ("lambda1", "lambda2p"),
        ("lambda2", "inf"), ("lambda2", "lambda1p"),
        ("lambda0p", "0"), ("lambda0p", "lambda1p"), ("lambda0p", "lambda2p"),
        ("lambda1p", "inf"), ("lambda2p", "inf"),
    ]}
    if side == "+":
        return plus
    swap = {"lambda2": "lambda2p", "lambda2p": "lambda2"}
    return {frozenset(swap.get(x, x) for x in e) for e in plus}
