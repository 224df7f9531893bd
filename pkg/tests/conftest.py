import numpy as np
import pytest


def naive_tprod(A, B):
    """Circular convolution of tubes, straight from the definition."""
    n1, _, n3 = A.shape
    C = np.zeros((n1, B.shape[1], n3))
    for k in range(n3):
        for m in range(n3):
            C[:, :, k] += A[:, :, m] @ B[:, :, (k - m) % n3]
    return C


def naive_bcirc(X):
    n1, n2, n3 = X.shape
    out = np.zeros((n1 * n3, n2 * n3))
    for p in range(n3):
        for q in range(n3):
            out[p * n1:(p + 1) * n1, q * n2:(q + 1) * n2] = X[:, :, (p - q) % n3]
    return out


def naive_ttranspose(X):
    """Transpose each slice, then reverse the order of slices 2..n3."""
    n3 = X.shape[2]
    order = [0] + list(range(n3 - 1, 0, -1))
    return np.stack([X[:, :, k].T for k in order], axis=2)


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
