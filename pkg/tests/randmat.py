"""Random matrices for tests."""

import numpy as np


def hermitian(rng, n, scale=1.0):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (z + z.conj().T) / 2


def traceless_hermitian(rng, n):
    h = hermitian(rng, n)
    return h - np.trace(h) / n * np.eye(n)


def skew(rng, n, scale=1.0):
    return 1j * hermitian(rng, n, scale)


def unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def state(rng, n, rank=None):
    rank = n if rank is None else rank
    z = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    m = z @ z.conj().T
    return m / np.trace(m).real


def kraus_ops(rng, n, k):
    """``k`` Kraus operators from a random isometry, so sum K^* K = I."""
    z = rng.normal(size=(k * n, n)) + 1j * rng.normal(size=(k * n, n))
    q, _ = np.linalg.qr(z)
    return [q[i * n : (i + 1) * n] for i in range(k)]


def clustered_hermitian(rng, n):
    """Random traceless Hermitian matrix with exactly repeated eigenvalues."""
    while True:
        labels = rng.integers(0, rng.integers(2, n + 1), size=n)
        if len(set(labels.tolist())) >= 2:
            break
    levels = np.cumsum(rng.uniform(0.3, 1.5, size=n))
    vals = levels[labels]
    vals = vals - vals.mean()
    u = unitary(rng, n)
    return u @ np.diag(vals) @ u.conj().T, vals
