import numpy as np
import pytest

from dp3 import asymptotics as asym
from dp3 import boutroux as btx
from dp3 import elliptic as ell
from dp3.curve import omega0 as curve_omega0

G_GENERIC = np.array([[2.0, 1.0], [1.0, 1.0]], dtype=complex)


@pytest.fixture(scope="session")
def pt02():
    """Boutroux point at phi = 0.2 (shared; expensive to recompute)."""
    return btx.solve_boutroux(0.2)


@pytest.fixture(scope="session")
def ctx02(pt02):
    return ell.elliptic_context(pt02.curve)


@pytest.fixture(scope="session")
def sol02():
    """Full pe representation for the generic G at phi = 0.2, a = 0."""
    return asym.asymptotic_solution(G_GENERIC, 0.0, 0.2)


@pytest.fixture(scope="session")
def omega0_02(pt02):
    return curve_omega0(pt02.curve)


@pytest.fixture(scope="session")
def traj12():
    """The 12-sample identity-suite trajectory phi in +-{0.1..0.9}."""
    phis = list(np.linspace(0.1, 0.9, 6))
    return {phi: btx.solve_boutroux(float(phi))
            for phi in phis + [-p for p in phis]}
