"""Discrete optimal transport solvers on dense cost matrices.

Two solvers share one result type: an exact transportation simplex that
returns an optimal vertex plan together with dual potentials, and a
log-domain Sinkhorn iteration for entropic regularization. A brute-force
permutation oracle and a plan verifier are included so optimality can be
checked independently of either solver.

Cost matrices are dense nonnegative float arrays; weight vectors live on the
probability simplex (they are validated to sum to 1 within 1e-12 and then
renormalized exactly).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError, InputError, SolverError
from ._simplex import (
    STATUS_OPTIMAL,
    STATUS_PIVOT_LIMIT,
    _sinkhorn_log,
    _solve_transport,
)

__all__ = [
    "OtResult",
    "solve_exact",
    "solve_sinkhorn",
    "brute_force_oracle",
    "verify_plan",
    "warmup_jit",
]

# |sum - 1| beyond this is rejected rather than silently renormalized
_SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class OtResult:
    """Outcome of one OT solve.

    Attributes
    ----------
    cost : float
        Transport objective <plan, C>.
    plan : ndarray, shape (m, n)
        Feasible coupling. For the exact solver this is an optimal vertex;
        for Sinkhorn it is the entropic plan at the final iterate.
    duals : (ndarray, ndarray) or None
        Potentials (u, v). The exact solver guarantees u_i + v_j <= C_ij
        up to float noise, with equality on the support of the plan;
        Sinkhorn reports its scaled log potentials.
    iterations : int
        Simplex pivots or Sinkhorn iterations performed.
    converged : bool
        False only when Sinkhorn stopped at the iteration cap with the
        marginal tolerance unmet.
    solver_tag : str
        "exact" or "sinkhorn".
    meta : dict
        Solver-specific extras (epsilon, marginal error, support size, ...).
    """

    cost: float
    plan: np.ndarray
    duals: Optional[tuple[np.ndarray, np.ndarray]]
    iterations: int
    converged: bool
    solver_tag: str
    meta: dict = field(default_factory=dict)


def _check_cost(cost: np.ndarray) -> np.ndarray:
    arr = np.asarray(cost, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError("cost must be a 2-D matrix with at least one row and column")
    if not np.all(np.isfinite(arr)):
        raise DataError("cost matrix contains non-finite entries")
    if arr.min() < 0.0:
        raise DataError("cost matrix entries must be nonnegative")
    return np.ascontiguousarray(arr)


def _check_weights(w: Optional[np.ndarray], size: int, name: str) -> np.ndarray:
    if w is None:
        return np.full(size, 1.0 / size)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (size,):
        raise InputError(f"{name} must have shape ({size},) to match the cost matrix")
    if not np.all(np.isfinite(w)):
        raise DataError(f"{name} contains non-finite entries")
    if w.min() < 0.0:
        raise InputError(f"{name} must be nonnegative")
    s = float(w.sum())
    if abs(s - 1.0) > _SIMPLEX_TOL:
        raise InputError(
            f"{name} must lie on the probability simplex (sum={s!r})"
        )
    return np.ascontiguousarray(w / s)


def solve_exact(
    cost: np.ndarray,
    a: Optional[np.ndarray] = None,
    b: Optional[np.ndarray] = None,
) -> OtResult:
    """Solve the transportation problem exactly.

    Parameters
    ----------
    cost : ndarray, shape (m, n)
        Dense cost matrix, finite nonnegative entries.
    a, b : ndarray, optional
        Source / target weights on the probability simplex. Default uniform
        (1/m, 1/n).

    Returns
    -------
    OtResult
        Optimal vertex plan, objective, and dual certificates: the duals
        satisfy u_i + v_j <= C_ij everywhere (up to float noise) and bind
        exactly on basic arcs, so primal and dual objectives coincide.
    """
    C = _check_cost(cost)
    m, n = C.shape
    a = _check_weights(a, m, "a")
    b = _check_weights(b, n, "b")

    block = max(64, int(math.isqrt(m * n)))
    stall_limit = 50 * (m + n) + 1000
    max_pivots = 2000 * (m + n) + 100_000

    plan, pot, pivots, status = _solve_transport(
        C, a, b, block, stall_limit, max_pivots
    )
    if status == STATUS_PIVOT_LIMIT:
        raise SolverError(
            f"transportation simplex hit the pivot cap ({max_pivots}); "
            "the instance may be numerically pathological"
        )
    if status != STATUS_OPTIMAL:
        raise SolverError("transportation simplex lost basis connectivity")

    # kernel potentials satisfy C_ij + pi_i - pi_{m+j} = 0 on the basis;
    # report duals in the u_i + v_j <= C_ij convention
    u = -pot[:m]
    v = pot[m:].copy()
    value = float(np.dot(plan.ravel(), C.ravel()))
    return OtResult(
        cost=value,
        plan=plan,
        duals=(u, v),
        iterations=int(pivots),
        converged=True,
        solver_tag="exact",
        meta={"support_size": int(np.count_nonzero(plan))},
    )


def solve_sinkhorn(
    cost: np.ndarray,
    a: Optional[np.ndarray] = None,
    b: Optional[np.ndarray] = None,
    epsilon: Optional[float] = None,
    max_iter: int = 10000,
    tol: float = 1e-9,
) -> OtResult:
    """Entropic OT via log-domain Sinkhorn iterations.

    Parameters
    ----------
    cost : ndarray, shape (m, n)
        Dense cost matrix, finite nonnegative entries.
    a, b : ndarray, optional
        Simplex weights, uniform by default.
    epsilon : float, optional
        Regularization strength. Default 0.01 * mean(cost) (1.0 for an
        all-zero cost). Must be positive when given.
    max_iter : int
        Iteration cap. Hitting it is reported, not raised.
    tol : float
        L1 row-marginal violation at which iteration stops.

    Returns
    -------
    OtResult
        `cost` is <plan, C> without the entropy term, so it upper-bounds the
        unregularized optimum. `converged` is False if the cap was hit
        first; a RuntimeWarning is emitted in that case.
    """
    C = _check_cost(cost)
    m, n = C.shape
    a = _check_weights(a, m, "a")
    b = _check_weights(b, n, "b")
    if epsilon is None:
        epsilon = 0.01 * float(np.mean(C))
        if epsilon <= 0.0:
            epsilon = 1.0
    elif epsilon <= 0.0:
        raise InputError("epsilon must be positive")
    if max_iter < 1:
        raise InputError("max_iter must be at least 1")

    # zero-mass rows/cols are legal: log(0) = -inf drops them from the plan
    with np.errstate(divide="ignore"):
        loga = np.log(a)
        logb = np.log(b)

    plan, f, g, iters, err = _sinkhorn_log(
        C, loga, logb, float(epsilon), int(max_iter), float(tol), 10
    )
    converged = bool(err <= tol)
    if not converged:
        warnings.warn(
            f"Sinkhorn stopped after {iters} iterations with marginal "
            f"violation {err:.3e} > tol {tol:.3e}",
            RuntimeWarning,
            stacklevel=2,
        )
    value = float(np.dot(plan.ravel(), C.ravel()))
    return OtResult(
        cost=value,
        plan=plan,
        duals=(f.copy(), g.copy()),
        iterations=int(iters),
        converged=converged,
        solver_tag="sinkhorn",
        meta={"epsilon": float(epsilon), "marginal_err": float(err)},
    )


def brute_force_oracle(cost: np.ndarray, max_size: int = 8) -> float:
    """Exact OT value for square cost matrices with uniform marginals.

    Enumerates all n! permutation couplings, which are the vertices of the
    Birkhoff polytope scaled by 1/n, and returns the cheapest objective.
    Intended as an independent check of the simplex solver on tiny inputs.

    Raises
    ------
    InputError
        If the matrix is not square or has more than `max_size` rows.
    """
    C = _check_cost(cost)
    m, n = C.shape
    if m != n:
        raise InputError("the permutation oracle needs a square cost matrix")
    if n > max_size:
        raise InputError(f"the permutation oracle is capped at n={max_size}")
    best = math.inf
    for perm in itertools.permutations(range(n)):
        s = 0.0
        for i, j in enumerate(perm):
            s += C[i, j]
        if s < best:
            best = s
    return best / n


def verify_plan(
    plan: np.ndarray,
    a: Optional[np.ndarray] = None,
    b: Optional[np.ndarray] = None,
    tol: float = 1e-9,
) -> bool:
    """True iff the plan is entrywise >= -tol and hits both marginals.

    Parameters
    ----------
    plan : ndarray, shape (m, n)
        Candidate coupling.
    a, b : ndarray, optional
        Required marginals, uniform by default.
    tol : float
        Absolute tolerance on nonnegativity and on every row/column sum.
    """
    P = np.asarray(plan, dtype=np.float64)
    if P.ndim != 2:
        raise InputError("plan must be a 2-D matrix")
    m, n = P.shape
    a = _check_weights(a, m, "a")
    b = _check_weights(b, n, "b")
    if not np.all(np.isfinite(P)):
        return False
    if P.min() < -tol:
        return False
    if np.max(np.abs(P.sum(axis=1) - a)) > tol:
        return False
    if np.max(np.abs(P.sum(axis=0) - b)) > tol:
        return False
    return True


def warmup_jit() -> None:
    """Compile the numba kernels on a tiny instance (cached across runs)."""
    rng = np.random.default_rng(0)
    C = rng.random((3, 4))
    solve_exact(C)
    solve_sinkhorn(C, epsilon=0.5, max_iter=50, tol=1e-6)
