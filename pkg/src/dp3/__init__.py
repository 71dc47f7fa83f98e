"""dp3: elliptic asymptotics of the degenerate Painleve III transcendents.

Subpackages map one-to-one onto the pipeline: `curve` (elliptic curve and
cycle quadrature), `boutroux` (modulus trajectory), `elliptic` (theta / pe /
Abel map), `monodromy` (connection matrix algebra), `asymptotics` (phase
shifts and the pe representation), `oracle` (direct ODE integration checks),
`stokes` (turning points and Stokes graphs), `linsys` (desk-scale numeric
monodromy of the linear system), `cli` (command line front end).
"""

__version__ = "0.1.0"
