"""Closed-form diffusion-kernel features on the Boolean hypercube.

The similarity between two n-bit strings under a graph diffusion kernel on
the hypercube factorizes over coordinates, which gives both an exact product
formula and an explicit finite feature map: one feature per variable subset S
with value exp(-beta*|S|) * (-1)^(parity of x on S).  Truncating at a maximum
subset size gives the low-order feature maps the surrogate model works with.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError


def validate_point(x, n=None):
    """Coerce ``x`` to a 1-D int8 0/1 array, checking length against ``n``."""
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"binary point must be 1-D, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise DimensionMismatchError(f"expected dimension {n}, got {arr.shape[0]}")
    if arr.shape[0] < 1:
        raise ConfigurationError("binary point must have dimension >= 1")
    out = arr.astype(np.int8, copy=True)
    if not np.array_equal(out, arr) or np.any((out != 0) & (out != 1)):
        raise ConfigurationError("binary point entries must be exactly 0 or 1")
    return out


@dataclass
class FeatureBasis:
    """Canonical subset enumeration defining a truncated feature map.

    Subsets are ordered by size, then lexicographically; the empty set comes
    first.  A subset of size k sits on the Laplacian eigenvalue 2k, so its
    feature weight is sqrt(exp(-beta*2k)) = exp(-beta*k).
    """

    n: int
    max_order: int
    beta: float
    subsets: tuple = field(repr=False)
    orders: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)  # (D, n) 0/1 membership
    weights: np.ndarray = field(repr=False)

    @property
    def size(self):
        return len(self.subsets)

    def eigenvalues(self):
        """Laplacian eigenvalue attached to each feature (2 * subset size)."""
        return 2.0 * self.orders

    def with_beta(self, beta):
        """Same subset enumeration under a different diffusion scale."""
        if beta < 0:
            raise ConfigurationError(f"beta must be >= 0, got {beta}")
        return FeatureBasis(
            n=self.n,
            max_order=self.max_order,
            beta=float(beta),
            subsets=self.subsets,
            orders=self.orders,
            mask=self.mask,
            weights=np.exp(-float(beta) * self.orders),
        )


def enumerate_subsets(n, max_order, beta=1.0):
    """Enumerate all variable subsets up to ``max_order`` as a FeatureBasis."""
    if n < 1:
        raise ConfigurationError(f"dimension must be >= 1, got {n}")
    if not 0 <= max_order <= n:
        raise ConfigurationError(
            f"max_order must lie in [0, {n}], got {max_order}")
    if beta < 0:
        raise ConfigurationError(f"beta must be >= 0, got {beta}")
    subsets = []
    for k in range(max_order + 1):
        subsets.extend(itertools.combinations(range(n), k))
    subsets = tuple(subsets)
    d = len(subsets)
    mask = np.zeros((d, n), dtype=np.int64)
    for row, s in enumerate(subsets):
        mask[row, list(s)] = 1
    orders = mask.sum(axis=1).astype(np.float64)
    return FeatureBasis(
        n=n,
        max_order=max_order,
        beta=float(beta),
        subsets=subsets,
        orders=orders,
        mask=mask,
        weights=np.exp(-float(beta) * orders),
    )


def parity_signs(points, basis):
    """(-1)^(parity of x on S) for each point row and basis subset, as float."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.int64))
    if pts.shape[1] != basis.n:
        raise DimensionMismatchError(
            f"points have dimension {pts.shape[1]}, basis expects {basis.n}")
    par = (pts @ basis.mask.T) & 1
    return 1.0 - 2.0 * par


def mercer_features(x, basis):
    """Feature vector of one point: weight * parity sign per subset."""
    x = validate_point(x, basis.n)
    return basis.weights * parity_signs(x[None, :], basis)[0]


def feature_matrix(points, basis):
    """Stack of feature vectors, one row per point."""
    return basis.weights * parity_signs(points, basis)


def exact_kernel(x, y, beta):
    """Diffusion-kernel value from the closed product form.

    Equals (1 + e^{-2b})^(n-d) * (1 - e^{-2b})^d with d the Hamming distance,
    which is the full sum over all 2^n subset features.
    """
    x = validate_point(x)
    y = validate_point(y, x.shape[0])
    if beta < 0:
        raise ConfigurationError(f"beta must be >= 0, got {beta}")
    n = x.shape[0]
    d = int(np.sum(x != y))
    q = math.exp(-2.0 * beta)
    return (1.0 + q) ** (n - d) * (1.0 - q) ** d


def kernel_from_features(x, y, basis):
    """Inner product of truncated feature vectors; exact at max_order == n."""
    return float(np.dot(mercer_features(x, basis), mercer_features(y, basis)))


def hypercube_laplacian(n):
    """Dense Laplacian of the 2^n-vertex Hamming graph via Kronecker sums.

    Vertex index encodes the point with bit 1 most significant.  Test oracle
    only: the optimizer itself never materializes this graph.
    """
    l1 = np.array([[1.0, -1.0], [-1.0, 1.0]])
    lap = l1
    for _ in range(n - 1):
        m = lap.shape[0]
        lap = np.kron(lap, np.eye(2)) + np.kron(np.eye(m), l1)
    return lap


def laplacian_eigens_oracle(n, max_dim=4):
    """Numerically eigendecompose the explicit hypercube Laplacian.

    Returns (eigenvalues ascending, eigenvector matrix with matching columns).
    Refuses dimensions above ``max_dim`` since the matrix is 2^n x 2^n.
    """
    if n < 1:
        raise ConfigurationError(f"dimension must be >= 1, got {n}")
    if n > max_dim:
        raise ConfigurationError(
            f"oracle cap is {max_dim} dimensions, got {n}")
    vals, vecs = np.linalg.eigh(hypercube_laplacian(n))
    return vals, vecs
