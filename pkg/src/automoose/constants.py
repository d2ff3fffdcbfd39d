"""Physical constants shared across the package.

All values are pinned (not pulled from CODATA) so that fitted activation
energies are reproducible bit-for-bit across releases.
"""

# Boltzmann constant in eV/K, pinned exactly.
BOLTZMANN_EV = 8.617e-5

# Conversion factors used by the embedded material model to map the
# pass-through input units (J/m^2, m^4/(J s)) onto the reduced eV/nm/ns
# system the solver integrates in.  1 J = 1/e eV with e the elementary
# charge (2019 SI exact value).
JOULE_TO_EV = 1.0 / 1.602176634e-19
LENGTH_SCALE = 1.0e-9   # metres per internal length unit (nm)
TIME_SCALE = 1.0e-9     # seconds per internal time unit (ns)
