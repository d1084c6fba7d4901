"""Joint learning of a sparse self-representation, a graph affinity and
nonnegative node weights by a linearized alternating-direction method.

Given a column data matrix ``X`` (d x n) and seed labels, the solver
alternates closed-form updates of four blocks:

* ``Z``  sparse self-representation with ``X = X Z + E``
* ``E``  column-structured residual (l2,1 penalty)
* ``Q``  auxiliary copy of ``Z`` carrying the graph smoothness term
* ``A``  row-stochastic affinity, at most ``xi`` nonzeros per row
* ``w``  nonnegative weights diffused from seeds along ``A``

Two couplings, ``X = X Z + E`` and ``Z = Q``, are enforced with
multipliers ``Y1``, ``Y2`` and an increasing penalty ``mu``.  The loop
stops when the largest element change across all blocks falls under
``tol`` or after ``max_iter`` sweeps.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (FormatError, InputError, NumericalError,
                     ParameterError)

VARIANTS = ("full", "wpg_a", "wpg_z", "wpg_e", "wpg_w")


@dataclass
class GraphParams:
    """Solver weights and schedule.

    Defaults follow the reference operating point: sparsity ``alpha``,
    residual weight ``beta``, graph smoothness ``gamma``, weight
    smoothness ``lambda1``, seed fit ``lambda2``, affinity Tikhonov
    ``lambda3``, weight Tikhonov ``lambda4``, neighbourhood size ``xi``,
    and the penalty schedule ``mu0 * rho**k`` capped at ``mu_max``.
    """

    alpha: float = 0.1
    beta: float = 0.1
    gamma: float = 10.0
    lambda1: float = 5.0
    lambda2: float = 0.5
    lambda3: float = 1.0
    lambda4: float = 1.0
    xi: int = 6
    mu0: float = 0.1
    mu_max: float = 1e10
    rho: float = 1.1
    tol: float = 1e-6
    max_iter: int = 100
    # Compatibility switch: scale the Q-system smoothness by gamma instead
    # of gamma / mu.  The default solves the penalized subproblem exactly.
    unscaled_q: bool = False

    def validate(self):
        for name in ("alpha", "beta", "gamma", "lambda1", "lambda2", "lambda3"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be nonnegative")
        if self.lambda3 <= 0:
            raise ParameterError("lambda3 must be positive")
        if self.lambda4 <= 0:
            raise ParameterError("lambda4 must be positive")
        if self.xi < 1:
            raise ParameterError("xi must be at least 1")
        if self.mu0 <= 0 or self.mu_max < self.mu0:
            raise ParameterError("need 0 < mu0 <= mu_max")
        if self.rho < 1.0:
            raise ParameterError("rho must be >= 1")
        if self.tol <= 0:
            raise ParameterError("tol must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")


@dataclass
class SeedAssignment:
    """Seed labels: target weight ``r`` and determinacy indicator ``gamma``.

    ``gamma[i] = 1`` marks node ``i`` as seeded (its weight is pulled
    toward ``r[i]``); ``gamma[i] = 0`` leaves the node free.
    """

    r: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float).ravel()
        self.gamma = np.asarray(self.gamma, dtype=float).ravel()
        if self.r.shape != self.gamma.shape:
            raise ParameterError("r and gamma must have the same length")
        if np.any((self.gamma != 0.0) & (self.gamma != 1.0)):
            raise ParameterError("gamma entries must be 0 or 1")
        if np.any(self.r < 0):
            raise ParameterError("r entries must be nonnegative")

    @property
    def n(self):
        return self.r.size


@dataclass
class SolverState:
    """Mutable iterate shared by the sub-updates."""

    Z: np.ndarray
    Q: np.ndarray
    E: np.ndarray
    A: np.ndarray
    w: np.ndarray
    Y1: np.ndarray
    Y2: np.ndarray
    mu: float
    iteration: int = 0


@dataclass
class GraphSolution:
    """Final iterate plus the convergence trace.

    ``trace[k]`` is the largest element change during sweep ``k``.  For
    the representation-diffusion variant ``A`` holds the symmetrized
    ``|Z|`` affinity used for the weight solve; it is not row-stochastic.
    """

    Z: np.ndarray
    E: np.ndarray
    A: np.ndarray
    w: np.ndarray
    converged: bool
    iterations: int
    trace: np.ndarray
    variant: str = "full"


def soft_threshold(m, tau):
    """Elementwise shrinkage sign(m) * max(|m| - tau, 0)."""
    if tau < 0:
        raise ParameterError("threshold must be nonnegative")
    m = np.asarray(m, dtype=float)
    return np.sign(m) * np.maximum(np.abs(m) - tau, 0.0)


def shrink_l21(m, tau):
    """Columnwise shrinkage: scale each column toward zero by ``tau``.

    Column c maps to max(||c|| - tau, 0) / ||c|| * c; zero columns stay
    zero.  This is the proximal operator of ``tau * sum_j ||m_j||_2``.
    """
    if tau < 0:
        raise ParameterError("threshold must be nonnegative")
    m = np.asarray(m, dtype=float)
    norms = np.linalg.norm(m, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    scale = np.maximum(norms - tau, 0.0) / safe
    return m * scale[None, :]


def laplacian(a):
    """Unnormalized graph Laplacian D - A with row-sum degrees."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError("affinity must be square")
    return np.diag(a.sum(axis=1)) - a


def _require_finite(name, arr, iteration=None, trace=None):
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values in {name}", iteration=iteration, trace=trace)


def update_Z(state, X, params, eta=None):
    """Linearized proximal step on the sparse representation.

    The smooth coupling terms are linearized at the current ``Z`` with
    curvature bound ``eta = ||X||_F**2``, then the l1 proximal map is
    applied with threshold ``alpha / (eta * mu)``.
    """
    X = np.asarray(X, dtype=float)
    if eta is None:
        eta = float((X * X).sum())
    if eta <= 0:
        raise ParameterError("eta must be positive (X must be nonzero)")
    mu = state.mu
    resid = X - X @ state.Z - state.E + state.Y1 / mu
    grad = -mu * (X.T @ resid - (state.Z - state.Q + state.Y2 / mu))
    _require_finite("Z gradient", grad, state.iteration)
    step = 1.0 / (eta * mu)
    return soft_threshold(state.Z - step * grad, params.alpha * step)


def update_Z_ridge(state, X, params, XtX=None):
    """Closed-form representation update when the l1 term is replaced by
    a squared Frobenius penalty (variant ``wpg_z``)."""
    X = np.asarray(X, dtype=float)
    if XtX is None:
        XtX = X.T @ X
    mu = state.mu
    n = state.Z.shape[0]
    M = ((params.alpha + mu) / mu) * np.eye(n) + XtX
    rhs = X.T @ (X - state.E + state.Y1 / mu) + state.Q - state.Y2 / mu
    try:
        return scipy.linalg.solve(M, rhs, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"ridge representation solve failed: {exc}", state.iteration)


def update_Q(state, params):
    """Exact minimizer of the graph-smoothness subproblem.

    The affinity enters through its symmetrized form (A + A^T) / 2, so
    the smoothness term is a proper undirected Laplacian.  Solves
    Q (I + s (L + L^T)) = Z + Y2 / mu with L the symmetrized Laplacian
    and s = gamma / mu, or s = gamma when ``unscaled_q`` keeps the
    coupling at full strength.  The system matrix is identity plus a
    positive-semidefinite term, hence positive definite.
    """
    # laplacian(A + A^T) equals L + L^T for L built from (A + A^T) / 2
    sym = laplacian(state.A + state.A.T)
    s = params.gamma if params.unscaled_q else params.gamma / state.mu
    n = sym.shape[0]
    M = np.eye(n) + s * sym
    B = state.Z + state.Y2 / state.mu
    try:
        return scipy.linalg.solve(M, B.T, assume_a="pos").T
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"graph smoothing solve failed: {exc}", state.iteration)


def update_E(state, X, params):
    """Columnwise shrinkage of the fit residual X - X Z + Y1 / mu."""
    X = np.asarray(X, dtype=float)
    return shrink_l21(X - X @ state.Z + state.Y1 / state.mu, params.beta / state.mu)


def update_E_ridge(state, X, params):
    """Closed-form residual update for the squared-penalty variant."""
    X = np.asarray(X, dtype=float)
    mu = state.mu
    return (mu / (mu + params.beta)) * (X - X @ state.Z + state.Y1 / mu)


def _simplex_project_sorted(v):
    """Project rows of ``v`` (sorted descending) onto the probability simplex."""
    n, k = v.shape
    css = np.cumsum(v, axis=1) - 1.0
    idx = np.arange(1, k + 1, dtype=float)
    rho = np.sum(v - css / idx > 0, axis=1) - 1
    theta = css[np.arange(n), rho] / (rho + 1.0)
    return np.maximum(v - theta[:, None], 0.0)


def _pairwise_costs(Q, w, params):
    """u[i, j] = ((gamma / 2) ||q_i - q_j||^2 + lambda1 (w_i - w_j)^2) / lambda3."""
    Q = np.asarray(Q, dtype=float)
    w = np.asarray(w, dtype=float).ravel()
    g = Q.T @ Q
    sq = np.diag(g)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * g, 0.0)
    wd = (w[:, None] - w[None, :]) ** 2
    return (0.5 * params.gamma * d2 + params.lambda1 * wd) / params.lambda3


def _affinity_rows(Q, w, params):
    """All affinity rows at once; rows only read ``Q`` and ``w``.

    Each row restricts support to the ``xi`` smallest costs (stable
    ascending order, ties to the lower index; the zero self cost is
    always a candidate) and places the exact simplex projection of the
    negated costs on that support.  When every projected entry is
    positive this coincides with the waterfilling closed form
    (1 + sum of kept costs) / xi - u_ij.
    """
    u = _pairwise_costs(Q, w, params)
    xi = min(params.xi, u.shape[1])
    order = np.argsort(u, axis=1, kind="stable")[:, :xi]
    usel = np.take_along_axis(u, order, axis=1)
    rows = _simplex_project_sorted(-usel)
    A = np.zeros_like(u)
    np.put_along_axis(A, order, rows, axis=1)
    return A


def update_A_row(i, Q, w, params):
    """Row ``i`` of the affinity update; see ``_affinity_rows``."""
    return _affinity_rows(Q, w, params)[i]


def update_w(A, seeds, params):
    """Weight diffusion: solve the seeded smoothness system and clamp.

    Solves (2 lambda1 (D - A - A^T) + lambda2 diag(gamma) + lambda4 I) w
    = lambda2 (gamma * r) with D the symmetrized degree matrix.  The
    system matrix is a symmetric M-matrix with nonnegative right-hand
    side, so the solution is already nonnegative; the clamp only guards
    round-off.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    assert params.lambda4 > 0, "lambda4 > 0 keeps the weight system positive definite"
    sym = A + A.T
    M = 2.0 * params.lambda1 * (np.diag(sym.sum(axis=1)) - sym)
    M[np.diag_indices(n)] += params.lambda2 * seeds.gamma + params.lambda4
    rhs = params.lambda2 * seeds.gamma * seeds.r
    try:
        w = scipy.linalg.solve(M, rhs, assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"weight solve failed: {exc}")
    return np.maximum(w, 0.0)


def _check_inputs(X, seeds):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ParameterError("X must be a d x n matrix")
    d, n = X.shape
    if n < 2:
        raise ParameterError("need at least two columns")
    if not np.all(np.isfinite(X)):
        raise ParameterError("X contains non-finite values")
    if seeds.n != n:
        raise ParameterError(f"seed length {seeds.n} does not match n={n}")
    return X, d, n


def solve(X, seeds, params=None, callback=None):
    """Run the full alternating solver.

    Parameters
    ----------
    X : array, shape (d, n)
        Column data matrix.
    seeds : SeedAssignment
        Seed weights ``r`` and determinacy indicator ``gamma``.
    params : GraphParams, optional
    callback : callable, optional
        Called after every sweep with the live ``SolverState``; intended
        for tests and tracing.

    Returns
    -------
    GraphSolution
    """
    params = params or GraphParams()
    params.validate()
    X, d, n = _check_inputs(X, seeds)
    eta = float((X * X).sum())
    if eta <= 0:
        raise ParameterError("X must be nonzero")

    state = SolverState(
        Z=np.zeros((n, n)),
        Q=np.zeros((n, n)),
        E=np.zeros((d, n)),
        A=np.zeros((n, n)),
        w=np.ones(n),
        Y1=np.zeros((d, n)),
        Y2=np.zeros((n, n)),
        mu=params.mu0,
    )
    trace = []
    converged = False
    iterations = 0
    for it in range(1, params.max_iter + 1):
        state.iteration = it
        iterations = it
        Z0, Q0, E0, A0, w0 = state.Z, state.Q, state.E, state.A, state.w

        state.Z = update_Z(state, X, params, eta=eta)
        state.Q = update_Q(state, params)
        state.E = update_E(state, X, params)
        state.A = _affinity_rows(state.Q, state.w, params)
        state.w = update_w(state.A, seeds, params)

        mu = state.mu
        state.Y1 = state.Y1 + mu * (X - X @ state.Z - state.E)
        state.Y2 = state.Y2 + mu * (state.Z - state.Q)
        state.mu = min(params.mu_max, params.rho * mu)

        change = max(
            np.max(np.abs(state.Z - Z0)),
            np.max(np.abs(state.Q - Q0)),
            np.max(np.abs(state.E - E0)),
            np.max(np.abs(state.A - A0)),
            np.max(np.abs(state.w - w0)),
        )
        trace.append(change)
        for name, arr in (("Z", state.Z), ("Q", state.Q), ("E", state.E),
                          ("A", state.A), ("w", state.w)):
            _require_finite(name, arr, it, trace=np.asarray(trace))
        if callback is not None:
            callback(state)
        if change < params.tol:
            converged = True
            break

    return GraphSolution(
        Z=state.Z, E=state.E, A=state.A, w=state.w,
        converged=converged, iterations=iterations,
        trace=np.asarray(trace), variant="full",
    )


def _solve_diffuse_through_z(X, seeds, params, callback=None):
    """Variant without the affinity block: weights diffuse through the
    symmetrized ``|Z|`` coefficients instead of a learned ``A``."""
    X, d, n = _check_inputs(X, seeds)
    eta = float((X * X).sum())
    if eta <= 0:
        raise ParameterError("X must be nonzero")
    Z = np.zeros((n, n))
    E = np.zeros((d, n))
    Y1 = np.zeros((d, n))
    w = np.ones(n)
    S = np.zeros((n, n))
    mu = params.mu0
    trace = []
    converged = False
    iterations = 0
    state = SolverState(Z=Z, Q=np.zeros((n, n)), E=E, A=S, w=w,
                        Y1=Y1, Y2=np.zeros((n, n)), mu=mu)
    for it in range(1, params.max_iter + 1):
        state.iteration = it
        iterations = it
        Z0, E0, w0 = state.Z, state.E, state.w

        resid = X - X @ state.Z - state.E + state.Y1 / state.mu
        grad = -state.mu * (X.T @ resid)
        _require_finite("Z gradient", grad, it)
        step = 1.0 / (eta * state.mu)
        state.Z = soft_threshold(state.Z - step * grad, params.alpha * step)
        state.E = update_E(state, X, params)
        S = 0.5 * (np.abs(state.Z) + np.abs(state.Z).T)
        state.A = S
        state.w = update_w(S, seeds, params)

        state.Y1 = state.Y1 + state.mu * (X - X @ state.Z - state.E)
        state.mu = min(params.mu_max, params.rho * state.mu)

        change = max(
            np.max(np.abs(state.Z - Z0)),
            np.max(np.abs(state.E - E0)),
            np.max(np.abs(state.w - w0)),
        )
        trace.append(change)
        for name, arr in (("Z", state.Z), ("E", state.E), ("w", state.w)):
            _require_finite(name, arr, it, trace=np.asarray(trace))
        if callback is not None:
            callback(state)
        if change < params.tol:
            converged = True
            break
    return GraphSolution(Z=state.Z, E=state.E, A=state.A, w=state.w,
                         converged=converged, iterations=iterations,
                         trace=np.asarray(trace), variant="wpg_a")


def _solve_swapped(X, seeds, params, variant, callback=None):
    """Full loop with one closed form swapped out (wpg_z / wpg_e)."""
    X, d, n = _check_inputs(X, seeds)
    eta = float((X * X).sum())
    if eta <= 0:
        raise ParameterError("X must be nonzero")
    XtX = X.T @ X
    state = SolverState(
        Z=np.zeros((n, n)), Q=np.zeros((n, n)), E=np.zeros((d, n)),
        A=np.zeros((n, n)), w=np.ones(n),
        Y1=np.zeros((d, n)), Y2=np.zeros((n, n)), mu=params.mu0,
    )
    trace = []
    converged = False
    iterations = 0
    for it in range(1, params.max_iter + 1):
        state.iteration = it
        iterations = it
        Z0, Q0, E0, A0, w0 = state.Z, state.Q, state.E, state.A, state.w

        if variant == "wpg_z":
            state.Z = update_Z_ridge(state, X, params, XtX=XtX)
        else:
            state.Z = update_Z(state, X, params, eta=eta)
        state.Q = update_Q(state, params)
        if variant == "wpg_e":
            state.E = update_E_ridge(state, X, params)
        else:
            state.E = update_E(state, X, params)
        state.A = _affinity_rows(state.Q, state.w, params)
        state.w = update_w(state.A, seeds, params)

        mu = state.mu
        state.Y1 = state.Y1 + mu * (X - X @ state.Z - state.E)
        state.Y2 = state.Y2 + mu * (state.Z - state.Q)
        state.mu = min(params.mu_max, params.rho * mu)

        change = max(
            np.max(np.abs(state.Z - Z0)),
            np.max(np.abs(state.Q - Q0)),
            np.max(np.abs(state.E - E0)),
            np.max(np.abs(state.A - A0)),
            np.max(np.abs(state.w - w0)),
        )
        trace.append(change)
        for name, arr in (("Z", state.Z), ("Q", state.Q), ("E", state.E),
                          ("A", state.A), ("w", state.w)):
            _require_finite(name, arr, it, trace=np.asarray(trace))
        if callback is not None:
            callback(state)
        if change < params.tol:
            converged = True
            break
    return GraphSolution(Z=state.Z, E=state.E, A=state.A, w=state.w,
                         converged=converged, iterations=iterations,
                         trace=np.asarray(trace), variant=variant)


def solve_variant(X, seeds, params=None, variant="full", callback=None):
    """Dispatch to ``solve`` or one of the ablation loops.

    ``wpg_a`` drops the affinity block and diffuses weights through the
    symmetrized ``|Z|``; ``wpg_z`` swaps the l1 representation update
    for a ridge closed form; ``wpg_e`` swaps the l2,1 residual update
    for a ridge closed form.  ``wpg_w`` only changes tracker behaviour
    (weights are bypassed there), so the solve itself is the full one.
    """
    params = params or GraphParams()
    params.validate()
    if variant not in VARIANTS:
        raise ParameterError(f"unknown variant {variant!r}, expected one of {VARIANTS}")
    if variant in ("full", "wpg_w"):
        sol = solve(X, seeds, params, callback=callback)
        sol.variant = variant
        return sol
    if variant == "wpg_a":
        return _solve_diffuse_through_z(X, seeds, params, callback=callback)
    return _solve_swapped(X, seeds, params, variant, callback=callback)


def read_problem_file(path):
    """Read a plain-text solve problem.

    Layout: a header line ``d n``, then ``d`` rows of ``n`` whitespace
    separated values, then one line of ``n`` seed weights ``r`` and one
    line of ``n`` indicator values ``gamma``.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read problem file: {exc}") from exc
    if not lines:
        raise FormatError("empty problem file", path=path, line=1)
    head = lines[0].split()
    if len(head) != 2:
        raise FormatError(f"expected header 'd n', got {lines[0]!r}", path=path, line=1)
    try:
        d, n = int(head[0]), int(head[1])
    except ValueError:
        raise FormatError(f"non-integer header {lines[0]!r}", path=path, line=1)
    if d < 1 or n < 2:
        raise FormatError(f"invalid dimensions d={d}, n={n}", path=path, line=1)
    if len(lines) < 1 + d + 2:
        raise FormatError(
            f"expected {1 + d + 2} lines (header, {d} matrix rows, r, gamma), got {len(lines)}",
            path=path, line=len(lines),
        )

    def parse_row(text, lineno, what):
        parts = text.split()
        if len(parts) != n:
            raise FormatError(f"{what}: expected {n} values, got {len(parts)}",
                              path=path, line=lineno)
        try:
            return np.array([float(p) for p in parts])
        except ValueError:
            raise FormatError(f"{what}: non-numeric value", path=path, line=lineno)

    X = np.vstack([parse_row(lines[1 + i], 2 + i, f"matrix row {i}") for i in range(d)])
    r = parse_row(lines[1 + d], 2 + d, "seed weights r")
    gamma = parse_row(lines[2 + d], 3 + d, "seed indicator gamma")
    tail = 3 + d
    for extra, text in enumerate(lines[tail:]):
        if text.strip():
            raise FormatError("unexpected trailing content", path=path, line=tail + extra + 1)
    return X, SeedAssignment(r=r, gamma=gamma)


def write_matrix_file(path, m):
    """Write a matrix (or vector as a single row) with a ``rows cols`` header."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix_file(path):
    """Inverse of ``write_matrix_file``."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FormatError("empty matrix file", path=path, line=1)
    head = lines[0].split()
    if len(head) != 2:
        raise FormatError("expected header 'rows cols'", path=path, line=1)
    rows, cols = int(head[0]), int(head[1])
    data = []
    for i in range(rows):
        parts = lines[1 + i].split()
        if len(parts) != cols:
            raise FormatError(f"expected {cols} values", path=path, line=2 + i)
        data.append([float(p) for p in parts])
    return np.asarray(data)
