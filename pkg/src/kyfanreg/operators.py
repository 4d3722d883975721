"""Forward operators: SVD-represented compact linear maps, the generalized
inverse, the discrete autoconvolution map with derivative and adjoint, the
orthonormal Haar transform, and Besov weight generation.

Conventions
-----------
* An ``SvdOperator`` acts as A x = sum_n sigma_n <x, v_n> u_n.  A diagonal
  operator has implicit identity bases.
* The autoconvolution of x on [0, 1] with m grid points uses the
  left-rectangle sum y_k = h * sum_{j<=k} x_j x_{k-j}, h = 1/m, which keeps
  the quadratic expansion F(x+v) = F(x) + F'(x)v + F(v) exact.
* The Haar transform is orthonormal with full decomposition.  Coefficient
  layout: index 0 is the overall scaling coefficient, followed by detail
  blocks from finest to coarsest (sizes m/2, m/4, ..., 1).  Levels are
  numbered 0 for the scaling coefficient up to log2(m) for the finest block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdOperator",
    "AutoconvGrid",
    "BesovWeights",
    "autoconv_apply",
    "autoconv_derivative_apply",
    "autoconv_derivative_adjoint_apply",
    "haar_forward",
    "haar_inverse",
    "haar_level_indices",
    "besov_weights",
]

_ORTHO_TOL = 1e-10


def _as_vector(x, n: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != n:
        raise ValueError(f"{what}: expected a vector of length {n}, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class SvdOperator:
    """Compact linear operator given by its singular system.

    ``singular_values`` must be non-increasing and nonnegative.  When
    ``left_basis``/``right_basis`` are None the operator is diagonal (both
    bases are the identity); otherwise they are column-orthonormal matrices
    whose columns are u_n (data side, m x r) and v_n (solution side, n x r).
    """

    singular_values: np.ndarray
    left_basis: np.ndarray | None = None
    right_basis: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.singular_values, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("singular_values must be a non-empty 1-d array")
        if np.any(s < 0):
            raise ValueError("singular values must be nonnegative")
        if np.any(np.diff(s) > 1e-12 * max(1.0, s[0])):
            raise ValueError("singular values must be non-increasing")
        object.__setattr__(self, "singular_values", s)
        if (self.left_basis is None) != (self.right_basis is None):
            raise ValueError("either give both bases or neither")
        if self.left_basis is not None:
            u = np.asarray(self.left_basis, dtype=float)
            v = np.asarray(self.right_basis, dtype=float)
            for name, b in (("left_basis", u), ("right_basis", v)):
                if b.ndim != 2 or b.shape[1] != s.size:
                    raise ValueError(f"{name} must have one column per singular value")
                gram = b.T @ b
                if not np.allclose(gram, np.eye(s.size), atol=_ORTHO_TOL):
                    raise ValueError(f"{name} columns are not orthonormal")
            object.__setattr__(self, "left_basis", u)
            object.__setattr__(self, "right_basis", v)

    # -- constructors ---------------------------------------------------

    @classmethod
    def diagonal(cls, singular_values) -> "SvdOperator":
        return cls(singular_values=np.asarray(singular_values, dtype=float))

    @classmethod
    def from_matrix(cls, matrix) -> "SvdOperator":
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2:
            raise ValueError("operator matrix must be 2-d")
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        return cls(singular_values=s, left_basis=u, right_basis=vt.T)

    @classmethod
    def from_csv(cls, path) -> "SvdOperator":
        try:
            a = np.loadtxt(path, delimiter=",", ndmin=2)
        except OSError as exc:
            raise OSError(f"cannot read operator matrix from {path}: {exc}") from exc
        return cls.from_matrix(a)

    # -- geometry -------------------------------------------------------

    @property
    def is_diagonal(self) -> bool:
        return self.left_basis is None

    @property
    def data_dim(self) -> int:
        return self.singular_values.size if self.is_diagonal else self.left_basis.shape[0]

    @property
    def solution_dim(self) -> int:
        return self.singular_values.size if self.is_diagonal else self.right_basis.shape[0]

    def data_coeffs(self, y) -> np.ndarray:
        """Coefficients <y, u_n> of a data-space vector."""
        y = _as_vector(y, self.data_dim, "data vector")
        return y if self.is_diagonal else self.left_basis.T @ y

    def solution_coeffs(self, x) -> np.ndarray:
        """Coefficients <x, v_n> of a solution-space vector."""
        x = _as_vector(x, self.solution_dim, "solution vector")
        return x if self.is_diagonal else self.right_basis.T @ x

    def from_solution_coeffs(self, c: np.ndarray) -> np.ndarray:
        return c if self.is_diagonal else self.right_basis @ c

    def from_data_coeffs(self, c: np.ndarray) -> np.ndarray:
        return c if self.is_diagonal else self.left_basis @ c

    # -- actions ---------------------------------------------------------

    def apply(self, x) -> np.ndarray:
        """A x = sum_n sigma_n <x, v_n> u_n."""
        return self.from_data_coeffs(self.singular_values * self.solution_coeffs(x))

    def apply_adjoint(self, y) -> np.ndarray:
        """A* y = sum_n sigma_n <y, u_n> v_n."""
        return self.from_solution_coeffs(self.singular_values * self.data_coeffs(y))

    def generalized_inverse_apply(self, y) -> np.ndarray:
        """A^+ y: invert on the positive singular directions, drop the kernel."""
        c = self.data_coeffs(y)
        s = self.singular_values
        out = np.zeros_like(c)
        pos = s > 0.0
        out[pos] = c[pos] / s[pos]
        return self.from_solution_coeffs(out)

    def source_element(self, exponent: float, w) -> np.ndarray:
        """(A* A)^exponent w, i.e. the spectral multiplier sigma^(2*exponent).

        The caller passes the exponent explicitly (nu/2 for range conditions
        written with (A*A)^(nu/2), nu when the condition uses (A*A)^nu).
        """
        w = _as_vector(w, self.solution_dim, "source element")
        if exponent == 0.0:
            return w.copy()
        c = self.solution_coeffs(w)
        s = self.singular_values
        mult = np.zeros_like(s)
        pos = s > 0.0
        mult[pos] = s[pos] ** (2.0 * exponent)
        return self.from_solution_coeffs(mult * c)


@dataclass(frozen=True)
class AutoconvGrid:
    """Uniform grid of m points on [0, 1] with mesh width h = 1/m."""

    m: int

    def __post_init__(self):
        if not (isinstance(self.m, (int, np.integer)) and self.m >= 1):
            raise ValueError(f"m must be a positive integer, got {self.m!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.m


def autoconv_apply(grid: AutoconvGrid, x) -> np.ndarray:
    """[F(x)]_k = h * sum_{j<=k} x_j x_{k-j}, the discrete autoconvolution."""
    x = _as_vector(x, grid.m, "autoconvolution input")
    return grid.h * np.convolve(x, x)[: grid.m]


def autoconv_derivative_apply(grid: AutoconvGrid, x, v) -> np.ndarray:
    """F'(x) v = 2 h * (truncated convolution of x and v)."""
    x = _as_vector(x, grid.m, "linearization point")
    v = _as_vector(v, grid.m, "direction")
    return 2.0 * grid.h * np.convolve(x, v)[: grid.m]


def autoconv_derivative_adjoint_apply(grid: AutoconvGrid, x, r) -> np.ndarray:
    """F'(x)* r, the transpose of the truncated-convolution matrix."""
    x = _as_vector(x, grid.m, "linearization point")
    r = _as_vector(r, grid.m, "residual")
    # (F'(x)* r)_j = 2h * sum_{k>=j} x_{k-j} r_k: correlation at nonnegative lags
    return 2.0 * grid.h * np.correlate(r, x, mode="full")[grid.m - 1 :]


_SQRT2 = math.sqrt(2.0)


def _check_power_of_two(n: int):
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"length must be a power of two, got {n}")


def haar_forward(x) -> np.ndarray:
    """Orthonormal discrete Haar transform, fully decomposed.

    Output layout: [scaling, finest detail block, ..., coarsest detail block].
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("haar_forward expects a 1-d array")
    _check_power_of_two(x.size)
    blocks = []
    s = x
    while s.size > 1:
        even, odd = s[0::2], s[1::2]
        blocks.append((even - odd) / _SQRT2)
        s = (even + odd) / _SQRT2
    return np.concatenate([s] + blocks) if blocks else s.copy()


def haar_inverse(c) -> np.ndarray:
    """Inverse of :func:`haar_forward` (exact up to roundoff)."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 1:
        raise ValueError("haar_inverse expects a 1-d array")
    _check_power_of_two(c.size)
    n = c.size
    if n == 1:
        return c.copy()
    # detail blocks are stored finest first; rebuild from the coarsest
    offsets = []
    off, size = 1, n // 2
    while size >= 1:
        offsets.append((off, size))
        off += size
        size //= 2
    s = c[:1]
    for off, size in reversed(offsets):
        d = c[off : off + size]
        out = np.empty(2 * size)
        out[0::2] = (s + d) / _SQRT2
        out[1::2] = (s - d) / _SQRT2
        s = out
    return s


def haar_level_indices(n: int) -> np.ndarray:
    """Level of each Haar coefficient: 0 = scaling, log2(n) = finest details."""
    _check_power_of_two(n)
    levels = int(round(math.log2(n)))
    out = np.zeros(n, dtype=int)
    off, size, lev = 1, n // 2, levels
    while size >= 1:
        out[off : off + size] = lev
        off += size
        size //= 2
        lev -= 1
    return out


@dataclass(frozen=True)
class BesovWeights:
    """Level-dependent weights w = 2^(zeta * level * p) for a weighted lp penalty.

    zeta = s - d*(1/2 - 1/p) must be positive for the weighted penalty to be
    a Besov-norm power; weights are non-decreasing in level.
    """

    s: float
    p: float
    d: int
    levels: int
    zeta: float
    weights: np.ndarray


def besov_weights(s: float, p: float, d: int, levels: int) -> BesovWeights:
    """Weights for all 2^levels Haar coefficients, grouped by level."""
    if not (1.0 <= p <= 2.0):
        raise ValueError(f"p must lie in [1, 2], got {p!r}")
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise ValueError(f"d must be a positive integer, got {d!r}")
    if not (isinstance(levels, (int, np.integer)) and levels >= 1):
        raise ValueError(f"levels must be a positive integer, got {levels!r}")
    zeta = s - d * (0.5 - 1.0 / p)
    if not (zeta > 0.0):
        raise ValueError(f"smoothness too low: zeta = s - d(1/2 - 1/p) = {zeta} <= 0")
    lev = haar_level_indices(2**levels)
    w = 2.0 ** (zeta * p * lev)
    return BesovWeights(s=float(s), p=float(p), d=int(d), levels=int(levels), zeta=zeta, weights=w)
