"""Discrete optimal transport between weight rows under uniform marginals.

With both marginals uniform and a square cost matrix, the transport problem
is a linear assignment problem: its optimum is a permutation matrix scaled
by 1/m.  ``solve_exact`` finds that vertex with an O(m^3) shortest
augmenting path solver, then refines ties to the lexicographically smallest
optimal assignment so results are bit-reproducible.  ``solve_sinkhorn``
returns the entropic soft coupling, switching to log-domain updates when
the kernel would underflow.  ``brute_force_ot`` enumerates all m!
permutations and exists purely as an oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, SinkhornUnderflowError, ValidationError
from .linalg import as_matrix

MARGINAL_TOL = 1e-8
BRUTE_FORCE_MAX_SIDE = 8
_LOG_DOMAIN_THRESHOLD = 700.0  # exp(-x) underflows to subnormals past this


@dataclass(frozen=True, eq=False)
class TransportMap:
    """Non-negative m x m coupling whose rows and columns each sum to 1/m."""

    matrix: np.ndarray

    @property
    def side(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class OtSolution:
    map: TransportMap
    objective: float
    solver: str
    iterations: int
    converged: bool = True


def validate_transport_map(tm: TransportMap, atol: float = MARGINAL_TOL) -> TransportMap:
    t = tm.matrix
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValidationError(f"transport map must be square, got {t.shape}")
    if not np.isfinite(t).all():
        raise ValidationError("transport map contains non-finite entries")
    if (t < 0).any():
        raise ValidationError("transport map has negative entries")
    m = t.shape[0]
    target = 1.0 / m
    row_err = np.abs(t.sum(axis=1) - target).max()
    col_err = np.abs(t.sum(axis=0) - target).max()
    mass_err = abs(t.sum() - 1.0)
    if row_err > atol or col_err > atol or mass_err > atol:
        raise ValidationError(
            f"transport map marginals violate uniform constraints: "
            f"row {row_err:.3e}, col {col_err:.3e}, mass {mass_err:.3e} (atol {atol:g})"
        )
    return tm


def identity_map(m: int) -> TransportMap:
    if m < 1:
        raise ValidationError("map side must be positive")
    return TransportMap(np.eye(m) / m)


def hard_permutation(tm: TransportMap, rtol: float = 1e-9) -> np.ndarray | None:
    """Exact 0/1 permutation matrix if the map is a scaled permutation, else None."""
    t = tm.matrix
    m = t.shape[0]
    nonzero = t > (0.5 / m)
    if not (
        (nonzero.sum(axis=0) == 1).all()
        and (nonzero.sum(axis=1) == 1).all()
        and np.abs(t[nonzero] - 1.0 / m).max() <= rtol / m
        and np.abs(t[~nonzero]).max() <= rtol / m
    ):
        return None
    return nonzero.astype(np.float64)


def ot_objective(tm, cost) -> float:
    """Frobenius inner product of the coupling and the cost matrix."""
    t = tm.matrix if isinstance(tm, TransportMap) else as_matrix(tm, "coupling")
    cost = as_matrix(cost, "cost")
    if t.shape != cost.shape:
        raise ValidationError(
            f"coupling shape {t.shape} does not match cost shape {cost.shape}"
        )
    return float(np.sum(t * cost))


def _check_cost(cost) -> np.ndarray:
    d = np.asarray(cost, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"cost matrix must be square, got shape {d.shape}")
    if not np.isfinite(d).all():
        raise ValidationError("cost matrix contains NaN or infinite entries")
    if (d < 0).any():
        raise ValidationError("cost matrix has negative entries")
    return np.ascontiguousarray(d)


def _lap_shortest_path(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Min-cost perfect assignment via successive shortest augmenting paths.

    Returns (col_for_row, u, v) where u, v are 1-indexed dual potentials
    (index 0 is a sentinel).
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    row_for_col = np.zeros(n + 1, dtype=np.int64)  # 1-indexed, 0 = unassigned
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        row_for_col[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = row_for_col[j0]
            free = ~used
            free[0] = False
            idx = np.nonzero(free)[0]
            cur = cost[i0 - 1, idx - 1] - u[i0] - v[idx]
            better = cur < minv[idx]
            minv[idx] = np.where(better, cur, minv[idx])
            way[idx[better]] = j0
            k = int(np.argmin(minv[idx]))  # ties resolve to the lowest column
            j1 = int(idx[k])
            delta = minv[j1]
            u[row_for_col[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if row_for_col[j0] == 0:
                break
        while j0:
            j1 = int(way[j0])
            row_for_col[j0] = row_for_col[j1]
            j0 = j1
    col_for_row = np.zeros(n, dtype=np.int64)
    col_for_row[row_for_col[1:] - 1] = np.arange(n)
    return col_for_row, u, v


def _has_perfect_matching(adj: np.ndarray) -> bool:
    """Kuhn's algorithm on a boolean rows-by-cols adjacency matrix."""
    nrows, ncols = adj.shape
    match_col = np.full(ncols, -1, dtype=np.int64)

    def try_row(r: int, visited: np.ndarray) -> bool:
        for c in np.nonzero(adj[r])[0]:
            if not visited[c]:
                visited[c] = True
                if match_col[c] < 0 or try_row(int(match_col[c]), visited):
                    match_col[c] = r
                    return True
        return False

    for r in range(nrows):
        if not try_row(r, np.zeros(ncols, dtype=bool)):
            return False
    return True


def _lex_smallest_assignment(zero: np.ndarray) -> np.ndarray:
    """Lexicographically smallest perfect matching inside the zero graph.

    ``zero[i, j]`` marks edges of zero reduced cost; by complementary
    slackness these are exactly the edges optimal assignments may use.
    """
    n = zero.shape[0]
    free_cols: list[int] = list(range(n))
    assign = np.empty(n, dtype=np.int64)
    for i in range(n):
        rest = np.arange(i + 1, n)
        for pos, j in enumerate(free_cols):
            if not zero[i, j]:
                continue
            rem = free_cols[:pos] + free_cols[pos + 1 :]
            if rest.size == 0 or _has_perfect_matching(zero[np.ix_(rest, np.asarray(rem, dtype=np.int64))]):
                assign[i] = j
                free_cols.pop(pos)
                break
        else:
            raise NumericalError("tie refinement lost feasibility; duals inconsistent")
    return assign


def _permutation_solution(cost: np.ndarray, assign: np.ndarray, solver: str, iterations: int) -> OtSolution:
    n = cost.shape[0]
    t = np.zeros((n, n))
    t[np.arange(n), assign] = 1.0 / n
    tm = validate_transport_map(TransportMap(t))
    return OtSolution(tm, ot_objective(tm, cost), solver, iterations)


def solve_exact(cost) -> OtSolution:
    """Globally optimal coupling under uniform marginals.

    The optimum is a permutation matrix scaled by 1/m; ties between equally
    cheap assignments break toward the lowest row index, then the lowest
    column index.
    """
    d = _check_cost(cost)
    n = d.shape[0]
    col_for_row, u, v = _lap_shortest_path(d)
    tol = 1e-9 * max(1.0, float(d.max()))
    reduced = d - u[1:, None] - v[None, 1:]
    assign = _lex_smallest_assignment(reduced <= tol)
    return _permutation_solution(d, assign, "exact", iterations=n)


def brute_force_ot(cost) -> OtSolution:
    """Exhaustive m! enumeration; the independent oracle for solve_exact."""
    d = _check_cost(cost)
    n = d.shape[0]
    if n > BRUTE_FORCE_MAX_SIDE:
        raise ValidationError(
            f"brute_force_ot is limited to side <= {BRUTE_FORCE_MAX_SIDE}, got {n}"
        )
    rows = np.arange(n)
    best_perm = None
    best_total = np.inf
    count = 0
    for perm in itertools.permutations(range(n)):
        count += 1
        total = float(d[rows, perm].sum())
        if total < best_total:
            best_total = total
            best_perm = perm
    return _permutation_solution(
        d, np.asarray(best_perm, dtype=np.int64), "brute-force", iterations=count
    )


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = a.max(axis=axis, keepdims=True)
    return np.log(np.exp(a - m).sum(axis=axis)) + np.squeeze(m, axis=axis)


def _marginal_residuals(t: np.ndarray) -> tuple[float, float]:
    m = t.shape[0]
    target = 1.0 / m
    return (
        float(np.abs(t.sum(axis=1) - target).max()),
        float(np.abs(t.sum(axis=0) - target).max()),
    )


def _round_to_polytope(t: np.ndarray) -> np.ndarray:
    """Project a near-feasible coupling onto exact uniform marginals.

    Rows and columns are scaled down to at most the target mass and the
    remaining deficiency is spread as a rank-one non-negative correction,
    so the result is feasible up to float rounding.  The perturbation is
    of the order of the marginal residuals.
    """
    m = t.shape[0]
    target = 1.0 / m
    rows = t.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(rows > target, target / rows, 1.0)
    t = t * scale[:, None]
    cols = t.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(cols > target, target / cols, 1.0)
    t = t * scale[None, :]
    err_r = np.maximum(target - t.sum(axis=1), 0.0)
    err_c = np.maximum(target - t.sum(axis=0), 0.0)
    deficit = err_r.sum()
    if deficit > 0.0:
        t = t + np.outer(err_r, err_c) / deficit
    return t


def solve_sinkhorn(cost, eps: float | None = None, tol: float = 1e-9, max_iter: int = 10000) -> OtSolution:
    """Entropic-regularized coupling via alternating marginal scaling.

    ``eps`` defaults to 0.01 * mean(cost) so the softness is scale free.
    Iteration stops once both marginal residuals (max norm) drop to ``tol``;
    hitting ``max_iter`` first returns the last iterate flagged as
    unconverged rather than raising.  Either way the final iterate is
    rounded onto the uniform-marginal polytope before being returned.
    """
    d = _check_cost(cost)
    n = d.shape[0]
    if eps is None:
        mean = float(d.mean())
        eps = 0.01 * mean if mean > 0 else 1.0
    if eps <= 0:
        raise ValidationError("sinkhorn eps must be positive")
    if tol <= 0 or max_iter < 1:
        raise ValidationError("sinkhorn tol must be positive and max_iter >= 1")

    with np.errstate(over="ignore"):
        scaled = d / eps
    if not np.isfinite(scaled).all():
        raise SinkhornUnderflowError(
            f"eps={eps:g} is too small for this cost matrix: kernel exponent overflows"
        )
    target = np.full(n, 1.0 / n)
    log_domain = float(scaled.max()) > _LOG_DOMAIN_THRESHOLD
    iterations = 0
    converged = False

    if log_domain:
        log_kernel = -scaled
        log_target = np.log(target)
        f = np.zeros(n)
        g = np.zeros(n)
        t = np.exp(log_kernel)
        for iterations in range(1, max_iter + 1):
            f = log_target - _logsumexp(log_kernel + g[None, :], axis=1)
            g = log_target - _logsumexp(log_kernel + f[:, None], axis=0)
            if not (np.isfinite(f).all() and np.isfinite(g).all()):
                raise SinkhornUnderflowError(
                    f"eps={eps:g} is too small: scaling potentials diverged"
                )
            t = np.exp(log_kernel + f[:, None] + g[None, :])
            row_res, col_res = _marginal_residuals(t)
            if row_res <= tol and col_res <= tol:
                converged = True
                break
    else:
        kernel = np.exp(-scaled)
        u = np.full(n, 1.0)
        v = np.full(n, 1.0)
        t = kernel / (n * n)
        for iterations in range(1, max_iter + 1):
            kv = kernel @ v
            if (kv <= 0).any() or not np.isfinite(kv).all():
                raise SinkhornUnderflowError(
                    f"eps={eps:g} is too small: kernel column sums underflowed"
                )
            u = target / kv
            ku = kernel.T @ u
            if (ku <= 0).any() or not np.isfinite(ku).all():
                raise SinkhornUnderflowError(
                    f"eps={eps:g} is too small: kernel row sums underflowed"
                )
            v = target / ku
            t = u[:, None] * kernel * v[None, :]
            row_res, col_res = _marginal_residuals(t)
            if row_res <= tol and col_res <= tol:
                converged = True
                break

    if not np.isfinite(t).all():
        raise SinkhornUnderflowError(f"eps={eps:g} produced a non-finite coupling")
    # the last iterate is near-feasible (within the stopping residuals);
    # rounding it onto the polytope keeps every returned map a valid
    # coupling and its objective a true upper bound on the exact optimum
    tm = TransportMap(_round_to_polytope(t))
    validate_transport_map(tm, atol=MARGINAL_TOL)
    return OtSolution(
        tm,
        ot_objective(tm, d),
        solver=f"sinkhorn(eps={eps:g})",
        iterations=iterations,
        converged=converged,
    )
