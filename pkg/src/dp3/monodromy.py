"""Connection-matrix algebra: Stokes parameters and sector shifts.

The monodromy manifold ties G = (g_ij) in SL2(C) and a formal exponent a
to three Stokes parameters through

    G S0inf S1inf sigma3 e^{pi (i/2 - a) sigma3} = S0zero sigma1 G,

with S0inf lower unitriangular (s_inf_0), S1inf upper unitriangular
(s_inf_1) and S0zero upper unitriangular (s_0_0).  Higher-index Stokes
matrices follow the recursions

    S^inf_{k+2} = sigma3 e^{-pi(a-i/2) sigma3} S^inf_k e^{pi(a-i/2) sigma3} sigma3,
    S^0_k = sigma1 S^0_{k+1} sigma1,

which extend the relation to products over m sectors and give the shifted
connection matrices G^(m) used to continue the pe representation across
sector boundaries.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NonGenericG

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
IDENT = np.eye(2, dtype=complex)

_GENERIC_TOL = 1e-13


@dataclass(frozen=True)
class StokesMatrices:
    s_inf_0: complex
    s_inf_1: complex
    s_0_0: complex

    @property
    def S_inf_0(self):
        return np.array([[1, 0], [self.s_inf_0, 1]], dtype=complex)

    @property
    def S_inf_1(self):
        return np.array([[1, self.s_inf_1], [0, 1]], dtype=complex)

    @property
    def S_0_0(self):
        return np.array([[1, self.s_0_0], [0, 1]], dtype=complex)


@dataclass(frozen=True)
class MonodromyData:
    G: np.ndarray
    a: complex
    stokes: StokesMatrices | None = None

    def with_stokes(self):
        if self.stokes is not None:
            return self
        return MonodromyData(self.G, self.a, solve_stokes_from_G(self.G, self.a))


def exp_sigma3(c):
    """e^{c sigma3} as a diagonal matrix (principal exponential)."""
    return np.array([[np.exp(c), 0], [0, np.exp(-c)]], dtype=complex)


def manifold_residual(G, a, st: StokesMatrices) -> float:
    lhs = G @ st.S_inf_0 @ st.S_inf_1 @ SIGMA3 @ exp_sigma3(np.pi * (0.5j - a))
    rhs = st.S_0_0 @ SIGMA1 @ G
    return float(np.linalg.norm(lhs - rhs))


def solve_stokes_from_G(G, a) -> StokesMatrices:
    """The unique Stokes triple satisfying the manifold relation.

    Elimination order: entry (2,1) gives s_inf_0, entry (2,2) gives
    s_inf_1, entry (1,1) gives s_0_0; entry (1,2) is the consistency
    residual (it vanishes automatically by det G = 1).
    """
    G = np.asarray(G, dtype=complex)
    g11, g12 = G[0]
    g21, g22 = G[1]
    det = g11 * g22 - g12 * g21
    if abs(det - 1) > 1e-9:
        raise NonGenericG(f"det G = {det}, expected 1")
    if abs(g22) < _GENERIC_TOL or abs(g11) < _GENERIC_TOL:
        raise NonGenericG("g11 or g22 vanishes; elimination would divide by ~0")
    E1 = np.exp(np.pi * (0.5j - a))
    s_inf_0 = (g11 / E1 - g21) / g22
    s_inf_1 = -E1 * (g12 * E1 + g22) / g11
    s_0_0 = (E1 * (g11 + g12 * s_inf_0) - g21) / g11
    return StokesMatrices(s_inf_0, s_inf_1, s_0_0)


def stokes_inf(k: int, st: StokesMatrices, a) -> np.ndarray:
    """S^inf_k for k >= 0 via the two-step recursion from S^inf_0, S^inf_1."""
    if k == 0:
        return st.S_inf_0
    if k == 1:
        return st.S_inf_1
    E = exp_sigma3(np.pi * (a - 0.5j))
    prev = stokes_inf(k - 2, st, a)
    return SIGMA3 @ np.linalg.inv(E) @ prev @ E @ SIGMA3


def stokes_zero(k: int, st: StokesMatrices) -> np.ndarray:
    """S^0_k for k >= 0 from S^0_0 via S^0_{k+1} = sigma1 S^0_k sigma1."""
    M = st.S_0_0
    for _ in range(k):
        M = SIGMA1 @ M @ SIGMA1
    return M


def shift_G(m: int, data: MonodromyData) -> np.ndarray:
    """The sector-shifted connection matrix G^(m).

    m >= 1:  (S^0_0 sigma1)^m G sigma3^m e^{(m pi/3)(a - i/2) sigma3}
    m <= -1: (sigma1 (S^0_0)^-1)^n G sigma3^n e^{(n pi/3)(i/2 - a) sigma3}, n = -m

    The negative branch follows from the solution-function chain
    Y_{j+1} = Y_j S_j walked downward (Y_{-2n} = Y_0 S_{-1}^-1 ... S_{-2n}^-1)
    together with the half-turn symmetries; it is the unique form for which
    a one-sector walk right followed by one left is the identity.
    """
    data = data.with_stokes()
    G = np.asarray(data.G, dtype=complex)
    a = data.a
    st = data.stokes
    if m == 0:
        return G.copy()
    if m >= 1:
        lead = np.linalg.matrix_power(st.S_0_0 @ SIGMA1, m)
        tail = np.linalg.matrix_power(SIGMA3, m) @ exp_sigma3((m * np.pi / 3) * (a - 0.5j))
        return lead @ G @ tail
    n = -m
    s0_inv = np.array([[1, -st.s_0_0], [0, 1]], dtype=complex)
    lead = np.linalg.matrix_power(SIGMA1 @ s0_inv, n)
    tail = np.linalg.matrix_power(SIGMA3, n) @ exp_sigma3((n * np.pi / 3) * (0.5j - a))
    return lead @ G @ tail


def shift_G_alt(m: int, data: MonodromyData) -> np.ndarray:
    """Equivalent form of G^(m) written with the S^inf side.

    m >= 1:  G (S^inf_0 S^inf_1 sigma3 e^{pi(i/2-a) sigma3})^m sigma3^m e^{(m pi/3)(a-i/2) sigma3}
    m <= -1: G S^inf_-1^-1 ... S^inf_-2n^-1 e^{(-2 n pi i/3)(1/2 + i a) sigma3},
             with the negative-index matrices from the downward recursion
             S^inf_k = e^{pi(a-i/2) sigma3} sigma3 S^inf_{k+2} sigma3 e^{-pi(a-i/2) sigma3}.
    """
    data = data.with_stokes()
    G = np.asarray(data.G, dtype=complex)
    a = data.a
    st = data.stokes
    if m == 0:
        return G.copy()
    if m >= 1:
        block = st.S_inf_0 @ st.S_inf_1 @ SIGMA3 @ exp_sigma3(np.pi * (0.5j - a))
        mid = np.linalg.matrix_power(block, m)
        tail = np.linalg.matrix_power(SIGMA3, m) @ exp_sigma3((m * np.pi / 3) * (a - 0.5j))
        return G @ mid @ tail
    n = -m
    E = exp_sigma3(np.pi * (a - 0.5j))
    Einv = exp_sigma3(-np.pi * (a - 0.5j))

    def s_inf(k):
        if k >= 0:
            return stokes_inf(k, st, a)
        return E @ SIGMA3 @ s_inf(k + 2) @ SIGMA3 @ Einv

    mid = IDENT.copy()
    for k in range(1, 2 * n + 1):
        mid = mid @ np.linalg.inv(s_inf(-k))
    tail = exp_sigma3((-2 * n * np.pi * 1j / 3) * (0.5 + 1j * a))
    return G @ mid @ tail


def extended_relation_check(data: MonodromyData, m: int) -> float:
    """Frobenius residual of the m-sector extension of the manifold relation,

        G S^inf_0 ... S^inf_{2m-1} sigma3^m e^{m pi(i/2-a) sigma3}
            = S^0_0 ... S^0_{m-1} sigma1^m G,

    together with the collapsed product form (S^0_0 sigma1)^m G; the larger
    of the two residuals is returned.
    """
    if m < 1:
        raise ValueError("m >= 1")
    data = data.with_stokes()
    G = np.asarray(data.G, dtype=complex)
    a = data.a
    st = data.stokes
    lhs = G.copy()
    for k in range(2 * m):
        lhs = lhs @ stokes_inf(k, st, a)
    lhs = lhs @ np.linalg.matrix_power(SIGMA3, m) @ exp_sigma3(m * np.pi * (0.5j - a))
    rhs = IDENT.copy()
    for k in range(m):
        rhs = rhs @ stokes_zero(k, st)
    rhs = rhs @ np.linalg.matrix_power(SIGMA1, m) @ G
    r1 = float(np.linalg.norm(lhs - rhs))
    rhs2 = np.linalg.matrix_power(st.S_0_0 @ SIGMA1, m) @ G
    r2 = float(np.linalg.norm(lhs - rhs2))
    return max(r1, r2)


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

def monodromy_to_json_obj(data: MonodromyData):
    G = np.asarray(data.G, dtype=complex)
    obj = {"G": [[v.real, v.imag] for v in G.flatten()],
           "a": [np.real(data.a), np.imag(data.a)]}
    if data.stokes is not None:
        st = data.stokes
        obj["s_inf_0"] = [st.s_inf_0.real, st.s_inf_0.imag]
        obj["s_inf_1"] = [st.s_inf_1.real, st.s_inf_1.imag]
        obj["s_0_0"] = [st.s_0_0.real, st.s_0_0.imag]
    return obj


def monodromy_from_json_obj(obj) -> MonodromyData:
    flat = [complex(re, im) for re, im in obj["G"]]
    G = np.array(flat, dtype=complex).reshape(2, 2)
    a = complex(obj["a"][0], obj["a"][1])
    st = None
    if "s_inf_0" in obj:
        st = StokesMatrices(complex(*obj["s_inf_0"]), complex(*obj["s_inf_1"]),
                            complex(*obj["s_0_0"]))
    return MonodromyData(G, a, st)


def load_monodromy(path) -> MonodromyData:
    with open(path) as fh:
        return monodromy_from_json_obj(json.load(fh))


def save_monodromy(path, data: MonodromyData):
    with open(path, "w") as fh:
        json.dump(monodromy_to_json_obj(data), fh, indent=1)
