"""Complex dense matrix utilities.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; the
helpers here cover the handful of operations every rank and rate chain in
the package leans on.
"""

import numpy as np

from . import kernels
from .exceptions import InvalidParameterError

DEFAULT_RANK_TOL = 1e-9


def as_generator(seed_state):
    """Return a ``numpy.random.Generator`` for `seed_state`.

    Accepts a Generator (returned unchanged, so draws advance its state),
    a ``SeedSequence``, or a non-negative integer seed.
    """
    if isinstance(seed_state, np.random.Generator):
        return seed_state
    if isinstance(seed_state, np.random.SeedSequence):
        return np.random.default_rng(seed_state)
    if seed_state is None:
        raise InvalidParameterError("an explicit seed is required")
    seed = int(seed_state)
    if seed < 0 or seed >= 2**64:
        raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {seed_state!r}")
    return np.random.default_rng(seed)


def split_seeds(seed, count):
    """Spawn `count` independent child seed sequences from a root seed."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return root.spawn(count)


def sample_gaussian(rows, cols, variance, seed_state):
    """Draw a rows x cols matrix of i.i.d. circularly symmetric complex Gaussians.

    Real and imaginary parts are independent with variance ``variance / 2``
    each, so ``E|h|^2 == variance``.
    """
    if rows < 0 or cols < 0:
        raise InvalidParameterError("matrix dimensions must be non-negative")
    if not variance > 0:
        raise InvalidParameterError(f"variance must be positive, got {variance}")
    rng = as_generator(seed_state)
    scale = np.sqrt(variance / 2.0)
    z = rng.standard_normal((rows, cols, 2))
    return scale * (z[..., 0] + 1j * z[..., 1])


def block_diagonal(blocks):
    """Assemble ``bd{X_1, ..., X_k}`` with exact zeros off the diagonal blocks."""
    blocks = list(blocks)
    if not blocks:
        raise InvalidParameterError("block_diagonal needs at least one block")
    blocks = [np.atleast_2d(np.asarray(b, dtype=np.complex128)) for b in blocks]
    return kernels.block_diag(blocks)


def singular_values(m):
    m = np.asarray(m)
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def numeric_rank(m, tol=DEFAULT_RANK_TOL):
    """Count singular values above ``tol`` times the largest one.

    Parameters
    ----------
    m : array_like
        Matrix (empty matrices have rank 0).
    tol : float
        Relative threshold in ``(0, 1)``.

    Returns
    -------
    int
    """
    if not 0 < tol < 1:
        raise InvalidParameterError(f"tol must be in (0, 1), got {tol}")
    s = singular_values(m)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def logdet_capacity(h, snr):
    """Return ``log2 det(I + snr * h h^H)`` in bits.

    Evaluated on the smaller Gram matrix via a Cholesky factor, which is
    exact by Sylvester's determinant identity.
    """
    if snr < 0:
        raise InvalidParameterError(f"snr must be non-negative, got {snr}")
    if snr == 0:
        return 0.0
    return max(kernels.logdet(h, snr), 0.0)


def stack(rows):
    """``numpy.block`` for lists of block rows, tolerant of zero-width blocks."""
    return np.block([[np.asarray(b, dtype=np.complex128) for b in row] for row in rows])
