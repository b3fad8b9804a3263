import numpy as np
import pytest


def rand_spd(m, rng, lo=0.5, hi=2.0):
    """Random SPD matrix with eigenvalues in [lo, hi]."""
    Q, _ = np.linalg.qr(rng.normal(size=(m, m)))
    S = Q @ np.diag(rng.uniform(lo, hi, size=m)) @ Q.T
    return 0.5 * (S + S.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
