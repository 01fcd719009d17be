import pytest

from fuelbound.instance import generate_synthetic
from fuelbound.preprocess import tighten_time_windows


def leq(a, b, tol=1e-8):
    """a <= b up to absolute tolerance after relative normalization."""
    return a <= b + tol * max(1.0, abs(a), abs(b))


def close(a, b, tol=1e-8):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@pytest.fixture(scope="session")
def micro():
    """One small instance with nontrivial binaries, shared across tests."""
    inst = generate_synthetic(5, (1, 2, 1, 2, 8, 4))
    return inst, tighten_time_windows(inst)
