"""
closed-r3bp - Configuration Module

Physical constants of the reference Sun-Jupiter system and the numerical defaults used
across the series engine, the normalizer, the propagators and the diagnostics.
Units throughout: astronomical units, years, radians, with Gm0 = 4 pi^2.
"""

import math

# =============================================================================
# SUN-JUPITER SYSTEM
# =============================================================================

SUN_JUPITER_MU: float = 9.5364e-4
GM0: float = 4.0 * math.pi**2
JUPITER_A: float = 5.2044
JUPITER_PERIOD: float = 11.86
JUPITER_E: float = 0.0489
JUPITER_N: float = 2.0 * math.pi / JUPITER_PERIOD

# =============================================================================
# SERIES ENGINE
# =============================================================================
# Symbol order of the exponent vector of every monomial. J1 is the action conjugate
# to the secondary's mean anomaly; it only ever appears linearly in Z0.

SYMBOLS: tuple[str, ...] = ("dL", "e", "eta", "ic", "is", "phi1", "r1", "J1")
ANGLES: tuple[str, ...] = ("f", "g", "h", "E1")

# A merged coefficient is dropped when it is below this fraction of the summed
# magnitudes that produced it (cancellation down to round-off)
PURGE_THRESHOLD: float = 1e-13

# Significant digits of every float written to disk
OUTPUT_DIGITS: int = 17

# =============================================================================
# NORMALIZATION
# =============================================================================

# Divisors |s1 n* + s4 n1| below this fraction of n1 abort the step
DIVISOR_THRESHOLD_FACTOR: float = 1e-3

# Relative size above which a residue at or below the target order is a real violation
RESIDUE_TOLERANCE: float = 1e-8

# Extra sigma orders kept inside brackets and Lie sums; the derivative factors carry
# sigma^-1 and sigma^-2 weights, so products above nbk fall back below it
BRACKET_HEADROOM: int = 2

# Hard cap on the number of brackets of a Lie series without a guaranteed order gain
LIE_DEPTH_SLACK: int = 1

# =============================================================================
# PROPAGATION AND DIAGNOSTICS
# =============================================================================

INTEGRATOR_METHOD: str = "DOP853"
INTEGRATOR_RTOL: float = 1e-12
INTEGRATOR_ATOL: float = 1e-12

# Close-approach radius in units of the secondary's Hill radius
ENCOUNTER_HILL_RADII: float = 3.0

# FLI integration span in secondary periods
FLI_SPAN_PERIODS: float = 50.0

# Isocontour of the remainder bound separating the secular domain
BOUNDARY_THRESHOLD: float = 1e-2

# Remainder maps normalize to min(nu * (k_mu - 1), MAP_STEP_CAP) steps
MAP_STEP_CAP: int = 7

# Octupole fast harmonics cos(s1 f + s2 (g - M1)) used for divisor scans
OCTUPOLE_HARMONICS: tuple[tuple[int, int], ...] = (
    (1, 3), (2, 3), (3, 3), (4, 3), (5, 3), (6, 3), (7, 3),
    (1, 2), (2, 2), (3, 2), (4, 2), (5, 2),
    (1, 1), (2, 1), (3, 1), (4, 1), (5, 1),
    (1, -1), (2, -1), (3, -1),
    (1, -2), (1, -3),
)  # fmt: skip
