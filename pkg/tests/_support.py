"""Shared hypothesis strategies and small helpers for the test suite."""

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

SQRT3 = np.sqrt(3.0)

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
vec8 = arrays(np.float64, 8, elements=finite)
unit_interval = st.floats(min_value=0.0, max_value=1.0)


@st.composite
def states(draw, rank=None):
    """Random Bloch vectors of density matrices (Ginibre, seeded by hypothesis)."""
    from qutritflow.state_space import random_state

    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    r = rank if rank is not None else draw(st.integers(min_value=1, max_value=3))
    return random_state(np.random.default_rng(seed), rank=r)


def e(i):
    """Unit vector e_i (1-based, as in the Bloch coordinates)."""
    v = np.zeros(8)
    v[i - 1] = 1.0
    return v
