import numpy as np
import pytest
import torch

torch.set_num_threads(1)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


def random_sparse_dense(rng: np.random.Generator, s: int, sparsity: float) -> np.ndarray:
    """Dense vector with an exact-zero complement of a random support."""
    n_nonzero = int(round(s * (1.0 - sparsity)))
    x = np.zeros(s, dtype=np.float64)
    if n_nonzero:
        dims = rng.choice(s, size=n_nonzero, replace=False)
        vals = rng.normal(size=n_nonzero) * 10.0 ** rng.uniform(-3, 3, size=n_nonzero)
        vals[vals == 0.0] = 1.0
        x[dims] = vals
    return x
