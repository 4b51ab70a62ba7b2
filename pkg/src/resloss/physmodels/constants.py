"""CODATA-2018 physical constants (SI)."""
from dataclasses import dataclass
import math


@dataclass(frozen=True)
class Constants:
    h: float = 6.62607015e-34
    hbar: float = 6.62607015e-34 / (2 * math.pi)
    k_B: float = 1.380649e-23
    mu_0: float = 1.25663706212e-6
    e_charge: float = 1.602176634e-19


CONST = Constants()
H = CONST.h
HBAR = CONST.hbar
K_B = CONST.k_B
MU_0 = CONST.mu_0
E_CHARGE = CONST.e_charge
TWO_PI = 2 * math.pi
