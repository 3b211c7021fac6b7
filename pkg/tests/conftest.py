import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def matrices(draw, min_dim=1, max_dim=6, rows=None, cols=None):
    """Dense float matrices with entries in [-1, 1], built from a drawn seed."""
    r = rows if rows is not None else draw(st.integers(min_dim, max_dim))
    c = cols if cols is not None else draw(st.integers(min_dim, max_dim))
    seed = draw(st.integers(0, 2**32 - 1))
    return np.random.default_rng(seed).uniform(-1, 1, size=(r, c))


def unit_norm_rows(rng, rows, d):
    """Random ``rows x d`` matrix rescaled so its spectral norm is at most one."""
    x = rng.normal(size=(rows, d))
    return x / max(1.0, np.linalg.norm(x, 2))


def random_unit_ball(rng, d):
    v = rng.normal(size=d)
    return v / np.linalg.norm(v) * rng.uniform(0.2, 1.0)
