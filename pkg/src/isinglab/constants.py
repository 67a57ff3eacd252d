"""Model constants and numerical tolerances, kept in one place."""

import math

# Critical coupling of the square-lattice Ising model.
BETA_C = 0.5 * math.log(math.sqrt(2.0) + 1.0)

# Low-temperature contour weight per unit edge, alpha = exp(-2 beta_c).
ALPHA = math.sqrt(2.0) - 1.0

# Infinite-volume nearest-neighbour correlation <s_i s_j> at criticality;
# the energy density is eps(e) = MU - s_i s_j.
MU = math.sqrt(2.0) / 2.0

# Fusion constant: merging the two endpoints of an observable onto an edge e
# subtracts (1 + mu_tilde(e))/2 times the unfused observable, where
# mu_tilde(e) is the full-plane limit of the corresponding pair correlation.
# Without monodromy mu_tilde = MU for every edge.
FUSION_C = 0.5 * (1.0 + MU)

# Numerical tolerances.
TOL_SHOL = 1e-10         # s-holomorphicity residual of solved fields
TOL_HARMONIC = 1e-10     # discrete harmonicity residual
TOL_SOLVER = 1e-10       # linear-solve residual (relative)
TOL_PATH_INDEP = 1e-12   # harmonic conjugate path independence
TOL_QUAD = 1e-12         # slit-plane quadrature target
TOL_SERIES = 1e-10       # truncated series absolute tail bound
