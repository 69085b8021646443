"""Physical constants (CODATA 2018 via scipy) in SI units.

Every formula in the package pulls its constants from here.
"""

from scipy import constants as _c

MU_B: float = _c.physical_constants["Bohr magneton"][0]  # J/T
MU_N: float = _c.physical_constants["nuclear magneton"][0]  # J/T
H: float = _c.h  # J s
HBAR: float = _c.hbar  # J s
MU_0: float = _c.mu_0  # T m / A
K_B: float = _c.k  # J/K

#: Bohr magneton over Planck constant, Hz/T.
MU_B_OVER_H: float = MU_B / H
