"""Gaussian kernel, its analytic derivative operators, and the regularized Gram factor."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.lapack import dpocon

MAX_CONDITION = 1e12
DUPLICATE_TOL = 1e-9
SYMMETRY_TOL = 1e-9


class IllConditionedError(np.linalg.LinAlgError):
    """Raised when (lambda*I + K) cannot be factorized reliably."""


class DuplicateStateError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel ``c * exp(-0.5 * sum_i (d_i / l_i)**2)``.

    Parameters
    ----------
    amplitude : float
        The constant ``c``.
    lengthscales : array_like
        Per-dimension lengthscales (the diagonal of ``Sigma ** 0.5``).
    wrap_mask : array_like of bool, optional
        Dimensions that are angles with period ``2*pi``. Differences along them
        are wrapped into ``(-pi, pi]`` before the kernel is applied.
    """

    amplitude: float
    lengthscales: np.ndarray
    wrap_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if ls.ndim != 1 or ls.size == 0:
            raise ValueError("lengthscales must be a non-empty vector")
        if not np.all(ls > 0):
            raise ValueError("every lengthscale must be positive")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")
        if self.wrap_mask is None:
            wm = np.zeros(ls.size, dtype=bool)
        else:
            wm = np.atleast_1d(np.asarray(self.wrap_mask, dtype=bool))
            if wm.shape != ls.shape:
                raise ValueError("wrap_mask must match lengthscales")
        ls.setflags(write=False)
        wm.setflags(write=False)
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "lengthscales", ls)
        object.__setattr__(self, "wrap_mask", wm)

    @classmethod
    def isotropic(cls, lengthscale, dim, amplitude=1.0, wrap_mask=None):
        return cls(amplitude, np.full(dim, float(lengthscale)), wrap_mask)

    @property
    def dim(self) -> int:
        return self.lengthscales.size

    @property
    def inv_sq(self) -> np.ndarray:
        """Diagonal of ``Sigma^{-1}``."""
        return 1.0 / self.lengthscales**2

    def difference(self, a, b) -> np.ndarray:
        """``a - b`` with periodic dimensions wrapped to ``(-pi, pi]``."""
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if diff.shape[-1] != self.dim:
            raise ValueError(
                f"state dimension {diff.shape[-1]} does not match kernel dimension {self.dim}"
            )
        if self.wrap_mask.any():
            diff = np.array(diff, copy=True)
            diff[..., self.wrap_mask] = wrap_angle(diff[..., self.wrap_mask])
        return diff


def wrap_angle(theta):
    """Map angles to ``(-pi, pi]``."""
    theta = np.asarray(theta, dtype=float)
    out = np.pi - np.mod(np.pi - theta, 2.0 * np.pi)
    return out if out.ndim else float(out)


def _check_pair(spec, s1, s2):
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    if s1.shape != (spec.dim,) or s2.shape != (spec.dim,):
        raise ValueError(
            f"expected states of shape ({spec.dim},), got {s1.shape} and {s2.shape}"
        )
    return s1, s2


def _check_sigma(sigma, dim):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape[-2:] != (dim, dim):
        raise ValueError(f"sigma must be {dim}x{dim}, got {sigma.shape}")
    if np.max(np.abs(sigma - np.swapaxes(sigma, -1, -2)), initial=0.0) > SYMMETRY_TOL:
        raise ValueError("sigma must be symmetric")
    return sigma


def kernel_eval(spec: KernelSpec, s1, s2) -> float:
    s1, s2 = _check_pair(spec, s1, s2)
    diff = spec.difference(s1, s2)
    return spec.amplitude * float(np.exp(-0.5 * np.sum(diff**2 * spec.inv_sq)))


def kernel_grad(spec: KernelSpec, s1, s2) -> np.ndarray:
    """Gradient of ``k(s1, s2)`` with respect to ``s1``."""
    s1, s2 = _check_pair(spec, s1, s2)
    diff = spec.difference(s1, s2)
    return -(diff * spec.inv_sq) * kernel_eval(spec, s1, s2)


def kernel_diffusion(spec: KernelSpec, s1, s2, mu, sigma) -> float:
    """Drift-diffusion operator ``mu . grad + 0.5 * div(sigma grad)`` applied to
    ``k(., s2)`` at ``s1``. No discount factor is applied here."""
    s1, s2 = _check_pair(spec, s1, s2)
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (spec.dim,):
        raise ValueError(f"mu must have shape ({spec.dim},)")
    sigma = _check_sigma(sigma, spec.dim)
    out = diffusion_matrix(spec, s1[None], s2[None], mu[None], sigma[None])
    return float(out[0, 0])


def kernel_matrix(spec: KernelSpec, X, Y) -> np.ndarray:
    """``K[i, j] = k(X[i], Y[j])``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    diff = spec.difference(X[:, None, :], Y[None, :, :])
    return spec.amplitude * np.exp(-0.5 * np.sum(diff**2 * spec.inv_sq, axis=-1))


def diffusion_matrix(spec: KernelSpec, X, Y, mu, sigma) -> np.ndarray:
    """Row-wise drift-diffusion operator on kernel columns.

    ``out[i, j]`` applies ``mu[i] . grad + 0.5 * div(sigma[i] grad)`` to
    ``k(., Y[j])`` at ``X[i]``. ``mu`` is ``(n, d)`` and ``sigma`` ``(n, d, d)``.
    Reductions run over the trailing axes only, so each entry is independent of
    how many rows are evaluated together.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    d = spec.dim
    mu = np.asarray(mu, dtype=float).reshape(X.shape)
    sigma = np.asarray(sigma, dtype=float).reshape(X.shape[0], d, d)
    inv_sq = spec.inv_sq
    # loop over the (small) state dimension so every term is an (n, m) array
    u = []
    expo = 0.0
    drift = 0.0
    for i in range(d):
        di = X[:, i, None] - Y[None, :, i]
        if spec.wrap_mask[i]:
            di = wrap_angle(di)
        expo = expo + di * di * inv_sq[i]
        u.append(di * inv_sq[i])
        drift = drift - u[i] * mu[:, i, None]
    quad = 0.0
    for i in range(d):
        quad = quad + u[i] * u[i] * sigma[:, i, i, None]
        for j in range(i + 1, d):
            quad = quad + u[i] * u[j] * (sigma[:, i, j, None] + sigma[:, j, i, None])
    trace = np.sum(np.diagonal(sigma, axis1=1, axis2=2) * inv_sq, axis=-1)
    k = spec.amplitude * np.exp(-0.5 * expo)
    return k * (drift + 0.5 * (quad - trace[:, None]))


def weighted_derivatives(spec: KernelSpec, X, Y, weights):
    """Value, gradient and Hessian of ``f(x) = sum_j weights[j] k(x, Y[j])`` at
    each row of ``X``. Shapes ``(n,)``, ``(n, d)`` and ``(n, d, d)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    w = np.asarray(weights, dtype=float)
    d = spec.dim
    inv_sq = spec.inv_sq
    u = []
    expo = 0.0
    for i in range(d):
        di = X[:, i, None] - Y[None, :, i]
        if spec.wrap_mask[i]:
            di = wrap_angle(di)
        expo = expo + di * di * inv_sq[i]
        u.append(di * inv_sq[i])
    wk = spec.amplitude * np.exp(-0.5 * expo) * w
    value = np.sum(wk, axis=1)
    grad = np.empty((X.shape[0], d))
    hess = np.empty((X.shape[0], d, d))
    for i in range(d):
        grad[:, i] = -np.sum(wk * u[i], axis=1)
        for j in range(i, d):
            hess[:, i, j] = hess[:, j, i] = np.sum(wk * u[i] * u[j], axis=1)
        hess[:, i, i] -= inv_sq[i] * value
    return value, grad, hess


@dataclass(frozen=True, eq=False)
class GramFactor:
    """Gram matrix of the supporting states with the Cholesky factor of
    ``lambda*I + K``."""

    states: np.ndarray
    gram: np.ndarray
    lam: float
    factorization: tuple
    condition_estimate: float

    @property
    def n(self) -> int:
        return self.states.shape[0]

    def solve(self, b) -> np.ndarray:
        """Apply ``(lambda*I + K)^{-1}`` to a vector or the columns of a matrix."""
        return cho_solve(self.factorization, np.asarray(b, dtype=float))

    def matvec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.gram @ x + self.lam * x


def build_gram(spec: KernelSpec, states, lam: float) -> GramFactor:
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = states.shape[0]
    if n < 1:
        raise ValueError("need at least one supporting state")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if n > 1:
        diff = spec.difference(states[:, None, :], states[None, :, :])
        dist = np.sqrt(np.sum(diff**2, axis=-1))
        dist[np.diag_indices(n)] = np.inf
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        if dist[i, j] < DUPLICATE_TOL:
            raise DuplicateStateError(f"supporting states {i} and {j} coincide")
    gram = kernel_matrix(spec, states, states)
    gram = 0.5 * (gram + gram.T)
    gram[np.diag_indices(n)] = spec.amplitude
    a = gram + lam * np.eye(n)
    try:
        factor = cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError(
            f"lambda*I + K is not positive definite (lambda={lam}); increase lambda"
        ) from exc
    anorm = np.max(np.sum(np.abs(a), axis=0))
    rcond, info = dpocon(factor[0], anorm, uplo="L")
    cond = np.inf if rcond <= 0 else 1.0 / rcond
    if info != 0 or cond > MAX_CONDITION:
        raise IllConditionedError(
            f"lambda*I + K has condition estimate {cond:.3g} > {MAX_CONDITION:.0e} "
            f"(lambda={lam}); increase lambda"
        )
    states = states.copy()
    for arr in (states, gram):
        arr.setflags(write=False)
    return GramFactor(states, gram, float(lam), factor, float(cond))
