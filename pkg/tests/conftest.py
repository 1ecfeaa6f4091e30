import numpy as np
import pytest


class FixedRng:
    """Deterministic stand-in for numpy Generator: pops preset uniforms."""

    def __init__(self, values):
        self.values = list(values)

    def random(self, n=None):
        if n is None:
            return self.values.pop(0)
        out = np.array([self.values.pop(0) for _ in range(n)])
        return out


@pytest.fixture
def fixed_rng():
    return FixedRng
