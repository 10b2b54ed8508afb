"""Globally low-rank sparse regression solved by inexact ALM / ADMM.

Solves::

    min_{Z, E}  lam * ||Z||_1 + alpha * ||E||_*   s.t.  Y = X Z + E

by splitting ``Z = J`` and iterating closed-form updates of Z, J and E
followed by dual ascent on the two multipliers and a geometric increase of the
shared penalty ``mu``.
"""

import csv
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, NumericalError, ParameterError
from .linalg import as_matrix, gram_inverse, nuclear_norm, soft_threshold, svt

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("iter", "mu", "feasibility_inf", "l1_term", "nuclear_term", "wall_ms")


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 0.01
    alpha: float = 1.0
    mu0: float = 0.1
    rho: float = 1.1
    mu_max: float = 1e10
    tol: float = 1e-6
    max_iter: int = 500

    def __post_init__(self):
        for name in ("lam", "alpha", "mu0", "mu_max"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be positive, got {value}")
        if not self.rho > 1:
            raise ParameterError(f"rho must exceed 1, got {self.rho}")
        if not self.tol >= 0:
            raise ParameterError(f"tol must be non-negative, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ParameterError(f"max_iter must be >= 1, got {self.max_iter}")


@dataclass
class SolverState:
    z: np.ndarray
    j: np.ndarray
    e: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    mu: float
    iter: int = 0

    @classmethod
    def zeros(cls, d, n, m, mu0):
        return cls(
            z=np.zeros((n, m)), j=np.zeros((n, m)), e=np.zeros((d, m)),
            t1=np.zeros((d, m)), t2=np.zeros((n, m)), mu=float(mu0),
        )

    def copy(self):
        return replace(self, z=self.z.copy(), j=self.j.copy(), e=self.e.copy(),
                       t1=self.t1.copy(), t2=self.t2.copy())

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in (self.z, self.j, self.e, self.t1, self.t2))


@dataclass
class SolveReport:
    z: np.ndarray
    e: np.ndarray
    j: np.ndarray
    iterations: int
    converged: bool
    feasibility: float
    objective_trace: list
    wall_time: float
    trace: list = field(default_factory=list, repr=False)

    @property
    def objective(self):
        return self.objective_trace[-1] if self.objective_trace else 0.0

    def write_trace(self, path):
        """Dump the per-iteration trace as CSV."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for row in self.trace:
                writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _check_problem(x_tr, y):
    x_tr = as_matrix(x_tr, "x_tr")
    y = as_matrix(y, "y")
    if x_tr.shape[0] != y.shape[0]:
        raise DimensionError(
            f"x_tr has {x_tr.shape[0]} rows but y has {y.shape[0]}"
        )
    return x_tr, y


def update_z(state, x_tr, y, c):
    """Closed-form minimizer of the Z-subproblem,
    ``C [X^T (Y - E + T1/mu) + J - T2/mu]`` with ``C = (X^T X + I)^{-1}``."""
    d, n = x_tr.shape
    if c.shape != (n, n) or state.e.shape != y.shape or state.j.shape != (n, y.shape[1]):
        raise DimensionError("inconsistent shapes in Z update")
    mu = state.mu
    rhs = x_tr.T @ (y - state.e + state.t1 / mu) + state.j - state.t2 / mu
    return c @ rhs


def update_j(state, lam):
    """``J = S_{lam/mu}(Z + T2/mu)``."""
    return soft_threshold(state.z + state.t2 / state.mu, lam / state.mu)


def update_e(state, x_tr, y, alpha, return_sigma=False, xz=None):
    """``E = SVT_{alpha/mu}(Y - X Z + T1/mu)``.  `xz` may supply a cached ``X Z``."""
    if xz is None:
        xz = x_tr @ state.z
    w = y - xz + state.t1 / state.mu
    return svt(w, alpha / state.mu, return_sigma=return_sigma)


def feasibility(x_tr, y, z, e, j, xz=None):
    """``max(||Y - X Z - E||_inf, ||Z - J||_inf)`` with entrywise max norms."""
    if xz is None:
        xz = x_tr @ z
    r1 = np.max(np.abs(y - xz - e))
    r2 = np.max(np.abs(z - j))
    return float(max(r1, r2))


def objective(j, e, lam, alpha):
    return lam * float(np.sum(np.abs(j))) + alpha * nuclear_norm(e)


def iterate(state, x_tr, y, c, config):
    """Run one full sweep in place: Z, J, E, T1, T2, then mu.

    Returns ``(xz, nuclear)``: the product ``X Z`` for the new Z and the
    nuclear norm of the new E (a by-product of its SVT).
    """
    state.z = update_z(state, x_tr, y, c)
    xz = x_tr @ state.z
    state.j = update_j(state, config.lam)
    state.e, sigma = update_e(state, x_tr, y, config.alpha, return_sigma=True, xz=xz)
    mu = state.mu
    state.t1 = state.t1 + mu * (y - xz - state.e)
    state.t2 = state.t2 + mu * (state.z - state.j)
    state.mu = min(config.mu_max, config.rho * mu)
    state.iter += 1
    return xz, float(np.sum(sigma))


def solve(x_tr, y, config=None, *, c=None, record_trace=True):
    """Solve the low-rank sparse regression of `y` on the columns of `x_tr`.

    Parameters
    ----------
    x_tr : array_like, shape (d, n)
        Dictionary of training features, one sample per column.
    y : array_like, shape (d, m)
        Samples to represent; all columns are coded jointly so the nuclear
        norm couples their residuals.
    config : SolverConfig, optional
    c : ndarray, optional
        Precomputed ``(x_tr^T x_tr + I)^{-1}``, reused across calls with the
        same dictionary.

    Returns
    -------
    SolveReport
        ``converged`` is False when `max_iter` is hit; that is not an error.

    Raises
    ------
    NumericalError
        If an iterate becomes non-finite.  ``exc.state`` holds the last
        finite :class:`SolverState`.
    """
    config = config or SolverConfig()
    x_tr, y = _check_problem(x_tr, y)
    d, n = x_tr.shape
    m = y.shape[1]
    start = time.perf_counter()
    if c is None:
        c = gram_inverse(x_tr)
    state = SolverState.zeros(d, n, m, config.mu0)
    objective_trace, trace = [], []
    feas = np.inf
    converged = False
    while state.iter < config.max_iter:
        previous = state.copy()
        t0 = time.perf_counter()
        try:
            xz, e_nuclear = iterate(state, x_tr, y, c, config)
        except NumericalError as exc:
            raise NumericalError(f"iteration {previous.iter + 1} failed: {exc}",
                                 state=previous) from exc
        if not state.is_finite():
            raise NumericalError(
                f"non-finite iterate at iteration {state.iter} (mu={previous.mu:.3e})",
                state=previous,
            )
        feas = feasibility(x_tr, y, state.z, state.e, state.j, xz=xz)
        l1 = config.lam * float(np.sum(np.abs(state.j)))
        nuc = config.alpha * e_nuclear
        objective_trace.append(l1 + nuc)
        if record_trace:
            trace.append((state.iter, previous.mu, feas, l1, nuc,
                          1e3 * (time.perf_counter() - t0)))
        if feas < config.tol:
            converged = True
            break
    if not converged:
        logger.info("solver stopped at max_iter=%d with feasibility %.3e",
                    config.max_iter, feas)
    return SolveReport(
        z=state.z, e=state.e, j=state.j, iterations=state.iter, converged=converged,
        feasibility=feas, objective_trace=objective_trace,
        wall_time=time.perf_counter() - start, trace=trace,
    )


def solve_batched(x_tr, y, config=None, batch_size=None):
    """Solve column batches of `y` independently.

    Each batch has its own nuclear-norm term, so this only matches
    :func:`solve` when a single batch covers all columns.  Meant for runs where
    the full residual matrix does not fit in memory.
    """
    x_tr, y = _check_problem(x_tr, y)
    m = y.shape[1]
    if not batch_size or batch_size >= m:
        return solve(x_tr, y, config)
    c = gram_inverse(x_tr)
    reports = [solve(x_tr, y[:, i:i + batch_size], config, c=c, record_trace=False)
               for i in range(0, m, batch_size)]
    return SolveReport(
        z=np.hstack([r.z for r in reports]),
        e=np.hstack([r.e for r in reports]),
        j=np.hstack([r.j for r in reports]),
        iterations=max(r.iterations for r in reports),
        converged=all(r.converged for r in reports),
        feasibility=max(r.feasibility for r in reports),
        objective_trace=[sum(r.objective for r in reports)],
        wall_time=sum(r.wall_time for r in reports),
    )
