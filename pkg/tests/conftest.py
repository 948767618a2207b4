import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spintorus import quantize, symbol  # noqa: E402


@pytest.fixture(scope="session")
def cfg():
    return symbol.coulomb()


@pytest.fixture(scope="session")
def nr_cfg():
    # c scaled by 10^3 with the Coulomb strength kappa held fixed
    return symbol.coulomb(symbol.ALPHA_FS / 1000, c=1000.0)


@pytest.fixture(scope="session")
def strong_cfg():
    return symbol.coulomb(0.3)


@pytest.fixture(scope="session")
def torus(cfg):
    """(binding, L) of the torus with I_r = hbar/2, L = hbar."""
    return quantize.solve_binding(0.5, 1.0, cfg), 1.0
