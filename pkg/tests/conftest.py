import math

import numpy as np
import pytest
from hypothesis import settings

from toralcent import IntMatrix, IntPoly, companion
from toralcent.dynamics import Mode, TorusMap

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

# independent mpmath oracle (40 digits): log of the largest root of t^4 - 3t^3 + 3t^2 - 3t + 1
D4_EXPONENT = 0.76719721825131944
# ln((3 + sqrt 5) / 2)
CAT_EXPONENT = 0.962423650119206895


@pytest.fixture(scope="session")
def d4() -> IntMatrix:
    return companion(IntPoly([1, -3, 3, -3, 1]))


@pytest.fixture(scope="session")
def cat() -> IntMatrix:
    return IntMatrix([[2, 1], [1, 1]])


def d4_mode() -> Mode:
    # v depends on x_1 only and points along e_3; e_1^T L^-1 e_3 = 0 keeps det DF = 1
    return Mode(np.array([1, 0, 0, 0]), np.zeros(4), np.array([0, 0, 1 / (2 * math.pi), 0]))


def cat_mode() -> Mode:
    s = 1 / (2 * math.pi * math.sqrt(2))
    return Mode(np.array([1, 0]), np.zeros(2), np.array([s, s]))


def d4_map(L: IntMatrix, eps: float) -> TorusMap:
    return TorusMap(L, [d4_mode()], eps)


def cat_map(C: IntMatrix, eps: float) -> TorusMap:
    return TorusMap(C, [cat_mode()], eps)
