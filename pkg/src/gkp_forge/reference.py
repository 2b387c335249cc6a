"""Published optimized codewords at r = 1.1 with M = 3 (k = -3..3).

The coefficients are printed as if normalized, yet the Gram sums give norms
of about 0.88 and 0.77; every consumer renormalizes.  The f entries are
rounded to six decimals, so use ``FMatrix.from_printed`` to restore an exact
unit determinant.
"""

import numpy as np

from .algebra import CodewordSpec, FMatrix

R = 1.1
M = 3

_C0 = np.array([0.053086, 0.22733, 0.314502, 0.349696, 0.281129, 0.227219, 0.10026]) + 1j * np.array(
    [-0.069034, -0.219535, -0.280702, -0.318202, -0.254336, -0.216339, -0.11228]
)
_C1 = np.array([0.124631, 0.243408, 0.300107, 0.278471, 0.230698, 0.16376, 0.009765]) + 1j * np.array(
    [-0.128982, -0.226925, -0.272479, -0.251869, -0.200419, -0.137301, -0.053407]
)
_F = (1.000214 + 0.000054j, -0.000001 + 0.110828j, 0.002603 - 0.025265j, 1.002585 + 0.00023j)

_C0_REAL = np.array([0.054826, 0.228328, 0.381576, 0.470909, 0.334463, 0.243658, 0.118351])
_C1_REAL = np.array([0.114688, 0.258726, 0.375942, 0.354715, 0.229235, 0.163002, -0.039539])
_F_REAL = (0.999531 + 0.000695j, -0.000088 + 0.110767j, -0.000067 - 0.032467j, 1.004067 - 0.000703j)

# reported per-state optimal-recovery fidelities for |0>, |1>, |+>, |->, |+i>, |-i>
# at kappa*tau = 0.0004, kappa_phi*tau = 0.0004/1.5
RECOVERY_SCALE = (0.0004, 0.0004 / 1.5)
RECOVERY_FIDELITY_OPTIMAL = (0.999968, 0.999978, 0.999964, 0.999957, 0.999954, 0.999954)
RECOVERY_FIDELITY_CONVENTIONAL = (0.999918, 0.999926, 0.999925, 0.999919, 0.999919, 0.999919)


def complex_optimum() -> tuple[CodewordSpec, CodewordSpec]:
    return CodewordSpec(0, M, R, _C0), CodewordSpec(1, M, R, _C1)


def complex_optimum_f() -> FMatrix:
    return FMatrix.from_printed(*_F)


def real_optimum() -> tuple[CodewordSpec, CodewordSpec]:
    return CodewordSpec(0, M, R, _C0_REAL), CodewordSpec(1, M, R, _C1_REAL)


def real_optimum_f() -> FMatrix:
    return FMatrix.from_printed(*_F_REAL)
