"""Phase shifts from monodromy data and the pe representation of y(x).

Along a ray arg x = phi with 0 < phi < pi/3 (and g11 g12 g22 != 0),

    y(x) = pe(i (x - x0+); g2(A_phi), g3(A_phi)) + A_phi / 12,
    -i x0+ = (i/2pi) (Omega_a log(g12/g22) - Omega_b (log(g11 g22) - pi i))
             - i a Omega_0     (mod Omega_a Z + Omega_b Z),

and for -pi/3 < phi < 0 (g11 g21 g22 != 0)

    -i x0- = (-i/2pi) (Omega_a log(g21/g11) + Omega_b (log(g11 g22) - pi i))
             - i a Omega_0.

y'(x) = i pe'(i(x - x0)), and the companion representation

    (i y' + 1) / (2 y^2) = pe(i (x - xhat0)) + A_phi/12,  i xhat0 = i x0 + Omega_0.

Poles of y lie on x0 - i Omega_a Z - i Omega_b Z.  All logs are principal;
the theorems fix x0 modulo the lattice, so i*x0 is reduced into the
fundamental cell and the branch integers used are recorded.

Sectors |phi - 2 m pi/3| < pi/3 with m != 0 reduce to the base sector by
rotating the modulus and the periods by e^{2 m pi i/3} and replacing G by
the sector-shifted matrix G^(m).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quad
from .boutroux import solve_boutroux
from .curve import curve_data, omega0 as curve_omega0
from .elliptic import (EllipticContext, _laurent_coeffs, elliptic_context,
                       lattice_reduce, reduce_to_cell, wp_both)
from .errors import HypothesisViolated, NearPole, SectorBoundary
from .monodromy import MonodromyData, shift_G

PLUS = "plus"
MINUS = "minus"

_HYPO_TOL = 1e-13


@dataclass(frozen=True)
class PhaseShift:
    x0: complex
    side: str
    log_branch_record: tuple   # (m, n) lattice integers removed from i*x0


@dataclass(frozen=True)
class StripSpec:
    phi: float
    t_inf: float
    kappa0: float
    delta0: float


@dataclass(frozen=True)
class AsymptoticSolution:
    ctx: EllipticContext
    x0: complex
    omega0: complex
    side: str
    G_used: np.ndarray
    a: complex
    phi: float
    m_sector: int = 0

    @property
    def A(self):
        return self.ctx.A

    def default_strip(self, t_inf=40.0, kappa0=1.5):
        return StripSpec(self.phi, t_inf, kappa0, 0.1 * self.ctx.min_period)


def phase_shift(G, a, phi, periods, omega_0, side=None) -> PhaseShift:
    """x0 from the monodromy data, lattice reduced (i*x0 in the fundamental
    cell of Omega_a Z + Omega_b Z)."""
    G = np.asarray(G, dtype=complex)
    oa, ob = periods
    g11, g12 = G[0]
    g21, g22 = G[1]
    if side is None:
        side = PLUS if phi > 0 else MINUS
    scale = max(abs(g11), abs(g22), abs(g12), abs(g21))
    if side == PLUS:
        for name, v in (("g11", g11), ("g12", g12), ("g22", g22)):
            if abs(v) < _HYPO_TOL * scale:
                raise HypothesisViolated(f"{name} = 0 not allowed on the plus side",
                                         vanishing=name)
        ix0 = -(1j / (2 * np.pi)) * (oa * np.log(g12 / g22)
                                     - ob * (np.log(g11 * g22) - 1j * np.pi)) \
            + 1j * a * omega_0
        # -i x0 = (i/2pi)(...) - i a Omega_0  =>  i x0 = -(i/2pi)(...) + i a Omega_0
    else:
        for name, v in (("g11", g11), ("g21", g21), ("g22", g22)):
            if abs(v) < _HYPO_TOL * scale:
                raise HypothesisViolated(f"{name} = 0 not allowed on the minus side",
                                         vanishing=name)
        ix0 = (1j / (2 * np.pi)) * (oa * np.log(g21 / g11)
                                    + ob * (np.log(g11 * g22) - 1j * np.pi)) \
            + 1j * a * omega_0
    ix0_red, m, n = reduce_to_cell(ix0, oa, ob)
    return PhaseShift(-1j * ix0_red, side, (m, n))


def asymptotic_solution(G, a, phi, qtol=quad.DEFAULT_TOL) -> AsymptoticSolution:
    """Assemble the full pe representation for the base sector |phi| < pi/3."""
    pt = solve_boutroux(phi, qtol=qtol)
    ctx = elliptic_context(pt.curve, tol=qtol)
    om0 = curve_omega0(pt.curve, tol=qtol)
    ps = phase_shift(G, a, phi, (ctx.omega_a, ctx.omega_b), om0)
    return AsymptoticSolution(ctx, ps.x0, om0, ps.side, np.asarray(G, complex),
                              complex(a), float(phi))


def _wp_shifted(sol: AsymptoticSolution, x, shift=0.0):
    u = 1j * (x - sol.x0) + shift
    return wp_both(u, sol.ctx)


def eval_y(sol: AsymptoticSolution, x):
    """y(x) = pe(i(x - x0)) + A/12."""
    p, _ = _wp_shifted(sol, x)
    return p + sol.A / 12


def eval_yprime(sol: AsymptoticSolution, x):
    """y'(x) = i pe'(i(x - x0))."""
    _, pp = _wp_shifted(sol, x)
    return 1j * pp


def eval_y_hat(sol: AsymptoticSolution, x):
    """pe(i(x - xhat0)) + A/12 with i xhat0 = i x0 + Omega_0 (the companion
    representation of (i y' + 1)/(2 y^2))."""
    p, _ = wp_both(1j * (x - sol.x0) - sol.omega0, sol.ctx)
    return p + sol.A / 12


def distance_to_poles(sol: AsymptoticSolution, x):
    u = 1j * (x - sol.x0)
    ur, _, _ = lattice_reduce(u, sol.ctx.omega_a, sol.ctx.omega_b)
    return abs(ur)


def require_clear_of_poles(sol: AsymptoticSolution, x, delta0=None):
    d = distance_to_poles(sol, x)
    lim = delta0 if delta0 is not None else 0.1 * sol.ctx.min_period
    if d < lim:
        raise NearPole(f"x within {d:.3e} of the pole lattice", x=x, distance=d)


def pole_lattice(sol: AsymptoticSolution, window) -> list:
    """All points of {x0 - i Omega_a Z - i Omega_b Z} in the closed box
    window = (re_min, re_max, im_min, im_max)."""
    re0, re1, im0, im1 = window
    oa, ob = sol.ctx.omega_a, sol.ctx.omega_b
    corners = [complex(re0, im0), complex(re0, im1),
               complex(re1, im0), complex(re1, im1)]
    # bounding range of (m, n) from the corner coordinates in the basis
    M = np.array([[(-1j * oa).real, (-1j * ob).real],
                  [(-1j * oa).imag, (-1j * ob).imag]])
    mn = [np.linalg.solve(M, [(c - sol.x0).real, (c - sol.x0).imag])
          for c in corners]
    mlo = int(np.floor(min(v[0] for v in mn))) - 1
    mhi = int(np.ceil(max(v[0] for v in mn))) + 1
    nlo = int(np.floor(min(v[1] for v in mn))) - 1
    nhi = int(np.ceil(max(v[1] for v in mn))) + 1
    out = []
    for m in range(mlo, mhi + 1):
        for n in range(nlo, nhi + 1):
            s = sol.x0 - 1j * oa * m - 1j * ob * n
            if re0 - 1e-12 <= s.real <= re1 + 1e-12 and im0 - 1e-12 <= s.imag <= im1 + 1e-12:
                out.append(s)
    return sorted(out, key=lambda s: (s.real, s.imag))


def sector_index(phi: float, guard=1e-3) -> int:
    """m with |phi - 2 m pi/3| < pi/3; SectorBoundary inside the guard band."""
    m = int(np.round(phi / (2 * np.pi / 3)))
    k = np.round(phi / (np.pi / 3))
    if abs(phi - k * np.pi / 3) < guard:
        raise SectorBoundary(f"phi within {guard} of {int(k)} pi/3")
    return m


def eval_general_sector(G, a, phi, x, qtol=quad.DEFAULT_TOL):
    """y(x) for any non-boundary phi: rotate to the base sector, shift G.

    Returns (y, solution) where the solution carries the rotated periods:
    Omega^phi = e^{2 m pi i/3} Omega^{phi - 2 m pi/3} and the sector index m.
    """
    m = sector_index(phi)
    if m == 0:
        sol = asymptotic_solution(G, a, phi, qtol=qtol)
        return eval_y(sol, x), sol
    phit = phi - 2 * m * np.pi / 3
    rot = np.exp(2j * np.pi * m / 3)
    Gm = shift_G(m, MonodromyData(np.asarray(G, complex), complex(a)))
    base = solve_boutroux(phit, qtol=qtol)
    ctx_t = elliptic_context(base.curve, tol=qtol)
    om0_t = curve_omega0(base.curve, tol=qtol)
    # rotated modulus and periods
    A_phi = rot * base.A
    cur = curve_data(A_phi, labeling_phase=phit)
    periods = (rot * ctx_t.omega_a, rot * ctx_t.omega_b)
    om0 = rot * om0_t
    ps = phase_shift(Gm, a, phit, periods, om0)
    g2 = A_phi ** 2 / 12
    g3 = A_phi ** 3 / 216 - 1
    ctx = EllipticContext(A_phi, g2, g3, periods[0], periods[1],
                          periods[1] / periods[0], (1 + periods[1] / periods[0]) / 2,
                          cur, _laurent_coeffs(g2, g3))
    sol = AsymptoticSolution(ctx, ps.x0, om0, ps.side, np.asarray(Gm, complex),
                             complex(a), float(phi), m_sector=m)
    return eval_y(sol, x), sol
