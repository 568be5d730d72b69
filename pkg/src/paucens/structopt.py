"""Structured-SVM machinery for partial-AUC optimization over weak-learner outputs.

Notation used throughout:

* ``hp`` (tau, m) and ``hn`` (tau, n): outputs of the tau weak learners on the
  positive and negative training samples.
* An ordering constraint picks ``j_beta`` negatives ``zeta`` and a 0/1 matrix
  ``y`` of shape (m, j_beta); ``y[i, j] = 1`` means positive ``i`` is ranked
  below negative ``zeta[j]``.
* ``c = m * n * (beta - alpha)`` normalizes every pair count.
* ``phi_delta(Y) = phi(Y*) - phi(Y) = (1/c) sum_ij y_ij (h_i - h_zeta_j)``, the
  feature-space gap between the correct ordering and ``Y``.
* ``Q_w(Y) = loss(Y) - w . phi_delta(Y)``, the violation of the margin
  constraint for ``Y``.

``phi_delta`` depends on ``y`` only through its row sums and column sums,
which is what every hot path uses.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericalError
from .metrics import PaucRange, rank_negatives

__all__ = [
    "WeakOutputs",
    "OrderingConstraint",
    "QPResult",
    "CuttingPlaneState",
    "pauc_loss",
    "feature_map",
    "phi_delta",
    "violation",
    "most_violated_constraint",
    "brute_force_most_violated",
    "solve_restricted_qp",
    "cutting_plane",
    "primal_objective",
]

BRUTE_FORCE_MAX_PAIRS = 12
BRUTE_FORCE_MAX_SUBSETS = 10_000


@dataclass(frozen=True)
class WeakOutputs:
    """Weak-learner outputs on the training set, one row per learner."""

    hp: np.ndarray
    hn: np.ndarray

    def __post_init__(self):
        hp = np.atleast_2d(np.asarray(self.hp, dtype=np.float64))
        hn = np.atleast_2d(np.asarray(self.hn, dtype=np.float64))
        if hp.shape[0] != hn.shape[0]:
            raise ValueError("positive and negative outputs disagree on the number of learners")
        object.__setattr__(self, "hp", hp)
        object.__setattr__(self, "hn", hn)

    @property
    def tau(self) -> int:
        return self.hp.shape[0]

    @property
    def m(self) -> int:
        return self.hp.shape[1]

    @property
    def n(self) -> int:
        return self.hn.shape[1]

    def scores(self, w):
        w = np.asarray(w, dtype=np.float64)
        return w @ self.hp, w @ self.hn


class OrderingConstraint:
    """One ordering ``(zeta, y)`` together with its cached loss.

    Parameters
    ----------
    zeta : int array, shape (j_beta,)
        Indices into the negatives, in the order matching the columns of ``y``.
    y : bool array, shape (m, j_beta)
    n : int
        Total number of negatives (needed for the normalizer).
    rng : PaucRange
    """

    __slots__ = ("zeta", "y", "n", "rng", "row_sums", "col_sums", "loss", "_key")

    def __init__(self, zeta, y, n: int, rng: PaucRange):
        zeta = np.asarray(zeta, dtype=np.int64)
        y = np.asarray(y, dtype=bool)
        ja, jb = rng.indices(n)
        if zeta.shape != (jb,) or y.ndim != 2 or y.shape[1] != jb:
            raise ValueError(
                f"constraint needs {jb} negatives and an (m, {jb}) matrix, "
                f"got zeta {zeta.shape} and y {y.shape}"
            )
        if len(set(zeta.tolist())) != jb or zeta.min(initial=0) < 0 or zeta.max(initial=0) >= n:
            raise ValueError("zeta must hold distinct negative indices")
        zeta.setflags(write=False)
        y.setflags(write=False)
        self.zeta = zeta
        self.y = y
        self.n = n
        self.rng = rng
        self.row_sums = y.sum(axis=1).astype(np.float64)
        self.col_sums = y.sum(axis=0).astype(np.float64)
        self.loss = pauc_loss(self, y.shape[0], n, rng)
        order = np.argsort(zeta, kind="stable")
        self._key = (zeta[order].tobytes(), np.ascontiguousarray(y[:, order]).tobytes())

    @property
    def m(self) -> int:
        return self.y.shape[0]

    @property
    def key(self):
        """Hashable identity, invariant to the column order of ``zeta``."""
        return self._key

    def __eq__(self, other):
        return isinstance(other, OrderingConstraint) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return (
            f"OrderingConstraint(m={self.m}, j_beta={self.zeta.size}, "
            f"violated_pairs={int(self.row_sums.sum())}, loss={self.loss:.6g})"
        )

    @classmethod
    def correct(cls, n: int, m: int, rng: PaucRange, zeta=None):
        """The all-zero ordering ``Y*`` on ``zeta`` (default: first ``j_beta`` negatives)."""
        _, jb = rng.indices(n)
        if zeta is None:
            zeta = np.arange(jb)
        return cls(zeta, np.zeros((m, jb), dtype=bool), n, rng)


def pauc_loss(Y: OrderingConstraint, m: int, n: int, rng: PaucRange) -> float:
    """Normalized count of misordered pairs whose negative falls in ranks ``j_alpha+1..j_beta``.

    Negatives of ``zeta`` are ranked by how many positives they beat (column
    sums of ``y``), ties by column position; this ordering is consistent with
    ``y`` whenever any consistent ordering exists.
    """
    ja, jb = rng.indices(n)
    cols = np.asarray(Y.y, dtype=bool).sum(axis=0)
    if ja == 0:
        count = int(cols.sum())
    else:
        ranked = cols[np.argsort(-cols, kind="stable")]
        count = int(ranked[ja:jb].sum())
    return count / rng.normalizer(m, n)


def feature_map(H: WeakOutputs, Y: OrderingConstraint) -> np.ndarray:
    """Joint feature map ``phi(H, Y) = (1/c) sum_ij (1 - y_ij)(h_i - h_zeta_j)``."""
    c = Y.rng.normalizer(H.m, H.n)
    jb = Y.zeta.size
    keep_rows = jb - Y.row_sums
    keep_cols = H.m - Y.col_sums
    return (H.hp @ keep_rows - H.hn[:, Y.zeta] @ keep_cols) / c


def phi_delta(H: WeakOutputs, Y: OrderingConstraint) -> np.ndarray:
    """``phi(H, Y*) - phi(H, Y) = (1/c) sum_ij y_ij (h_i - h_zeta_j)``."""
    c = Y.rng.normalizer(H.m, H.n)
    return (H.hp @ Y.row_sums - H.hn[:, Y.zeta] @ Y.col_sums) / c


def violation(H: WeakOutputs, w, Y: OrderingConstraint) -> float:
    """``Q_w(Y) = loss(Y) - w . phi_delta(Y)``."""
    return Y.loss - float(np.dot(np.asarray(w, dtype=np.float64), phi_delta(H, Y)))


def most_violated_constraint(H: WeakOutputs, w, rng: PaucRange) -> OrderingConstraint:
    """Ordering maximizing ``Q_w``.

    For ``alpha == 0`` the maximization decomposes: take the ``j_beta``
    highest-scoring negatives (ties by index) and flag every pair whose
    margin ``s_i - s_zeta_j`` is strictly below one. Any other range falls
    back to exhaustive search, which is only feasible on tiny instances.
    """
    if H.tau < 1:
        raise ValueError("need at least one weak learner")
    ja, jb = rng.indices(H.n)
    if ja > 0:
        return brute_force_most_violated(H, w, rng)[0]
    sp, sn = H.scores(w)
    zeta = rank_negatives(sn)[:jb]
    y = (1.0 - (sp[:, None] - sn[zeta][None, :])) > 0.0
    return OrderingConstraint(zeta, y, H.n, rng)


def _all_matrices(m, jb):
    bits = m * jb
    codes = np.arange(2**bits, dtype=np.int64)
    flat = ((codes[:, None] >> np.arange(bits, dtype=np.int64)[None, :]) & 1).astype(bool)
    return flat.reshape(-1, m, jb)


def brute_force_most_violated(H: WeakOutputs, w, rng: PaucRange, *, return_count=False):
    """Exhaustive maximization of ``Q_w`` over every subset ``zeta`` and every 0/1 matrix.

    Returns ``(constraint, q_value)``, plus the number of candidates examined
    when ``return_count`` is set. Ties keep the first candidate in
    enumeration order (lexicographic subsets, then binary-counter matrices).
    """
    ja, jb = rng.indices(H.n)
    m, n = H.m, H.n
    n_subsets = math.comb(n, jb)
    if m * jb > BRUTE_FORCE_MAX_PAIRS or n_subsets > BRUTE_FORCE_MAX_SUBSETS:
        raise ConfigError(
            f"instance too large for exhaustive search (m*j_beta={m * jb}, "
            f"C(n, j_beta)={n_subsets})"
        )
    c = rng.normalizer(m, n)
    sp, sn = H.scores(w)
    mats = _all_matrices(m, jb)
    counts = mats.sum(axis=1)  # column sums, shape (K, jb)
    if ja == 0:
        loss_counts = counts.sum(axis=1)
    else:
        ranked = -np.sort(-counts, axis=1)
        loss_counts = ranked[:, ja:jb].sum(axis=1)
    loss = loss_counts / c
    best_q, best = -np.inf, None
    examined = 0
    for zeta in itertools.combinations(range(n), jb):
        zeta = np.asarray(zeta)
        margins = sp[:, None] - sn[zeta][None, :]
        q = loss - np.einsum("kij,ij->k", mats, margins) / c
        examined += mats.shape[0]
        k = int(np.argmax(q))
        if q[k] > best_q:
            best_q, best = float(q[k]), (zeta, mats[k])
    Y = OrderingConstraint(best[0], best[1], n, rng)
    if return_count:
        return Y, best_q, examined
    return Y, best_q


@dataclass
class QPResult:
    w: np.ndarray
    xi: float
    lam: np.ndarray
    dual_objective: float
    kkt_residual: float
    iterations: int


def _smo_simplex(G, delta, nu, lam, tol, max_iter):
    """Maximize ``delta.lam - lam^T G lam / 2`` over ``{lam >= 0, sum(lam) = nu}``.

    Pairwise (SMO) ascent: the first index has the largest gradient, the
    second is chosen among positive coordinates by second-order gain. The
    ascent runs to a coarse tolerance, then active-set steps toward the exact
    solution on the support finish the job; the coarse tolerance tightens
    until the KKT residual reaches ``tol``.
    Returns ``(lam, grad, residual, iterations)``.
    """
    diag = np.diag(G).copy()
    it = 0
    stage_tol = max(tol, 1e-3)
    while True:
        lam, it = _smo_run(G, delta, lam, diag, stage_tol, max_iter, it)
        lam, grad, residual = _refine(G, delta, nu, lam, tol)
        if residual <= tol or it >= max_iter or stage_tol <= tol:
            return lam, grad, residual, it
        stage_tol = max(tol, stage_tol * 1e-2)


def _refine(G, delta, nu, lam, tol, max_steps=None):
    """Active-set ascent: step toward the exact optimum of the current support.

    Each step solves the KKT equations on the support (least squares, so a
    singular ``G`` is fine), moves toward that point with an exact line search
    clipped at the feasibility boundary, and drops coordinates that reach zero.
    When the support solution is reached, the coordinate with the largest
    gradient outside the support is added.
    """
    lam = lam.copy()
    n = lam.size
    max_steps = max_steps or 4 * n + 20
    grad, residual = _kkt_residual(G, delta, lam)
    for _ in range(max_steps):
        if residual <= tol:
            break
        support = np.nonzero(lam > 0)[0]
        outside = np.setdiff1d(np.arange(n), support)
        spread = float(grad[support].max() - grad[support].min())
        out_gap = float(grad[outside].max() - grad[support].min()) if outside.size else 0.0
        moved = False
        if spread > 0.5 * tol and spread >= out_gap:
            moved = _support_step(G, lam, grad, _support_solution(G, delta, nu, support), support)
        if not moved:
            if out_gap <= 0:
                break
            # move mass from the weakest support coordinate to the best outside one
            j = outside[int(np.argmax(grad[outside]))]
            i = support[int(np.argmin(grad[support]))]
            curv = G[i, i] + G[j, j] - 2.0 * G[i, j]
            step = lam[i] if curv <= 1e-300 else min((grad[j] - grad[i]) / curv, lam[i])
            lam[j] += step
            lam[i] -= step
        lam[lam < 1e-300] = 0.0
        lam *= nu / lam.sum()
        grad, residual = _kkt_residual(G, delta, lam)
    return lam, grad, residual


def _support_step(G, lam, grad, target, support):
    """Exact line search from ``lam`` toward ``target`` on the support, in place.

    Returns False when the step would not move ``lam``.
    """
    d = np.zeros_like(lam)
    d[support] = target - lam[support]
    slope = float(grad @ d)
    if slope <= 0:
        # the support system had no solution; follow a flat ascent ray instead
        ray = _ascent_ray(G, grad, support)
        if ray is None:
            return False
        d[support] = ray
        slope = float(grad @ d)
        limit = np.inf
    else:
        limit = 1.0
    curv = float(d @ G @ d)
    neg = np.nonzero(d < 0)[0]
    ratios = -lam[neg] / d[neg]
    t_max = float(ratios.min()) if neg.size else np.inf
    t = min(t_max if curv <= 1e-300 else slope / curv, t_max, limit)
    if not np.isfinite(t):
        return False
    if t * float(np.abs(d).max()) <= 1e-16 * float(lam.sum()):
        return False
    lam += t * d
    if neg.size and t == t_max:
        lam[neg[int(np.argmin(ratios))]] = 0.0
    return True


def _ascent_ray(G, grad, support):
    """Direction ``d`` on the support with ``G d = 0``, ``sum(d) = 0`` and ``grad @ d > 0``.

    Along such a direction the dual rises linearly, so the restricted
    problem on this support has no interior optimum.
    """
    A = np.vstack([G[np.ix_(support, support)], np.ones(support.size)])
    _, sv, vt = np.linalg.svd(A)
    cutoff = 1e-10 * max(float(sv[0]), 1.0)
    rank = int(np.sum(sv > cutoff))
    null = vt[rank:]
    if null.shape[0] == 0:
        return None
    d = null.T @ (null @ grad[support])
    if float(grad[support] @ d) <= 1e-14 * float(np.abs(grad[support]).max()) * float(np.abs(d).sum()):
        return None
    return d


def _support_solution(G, delta, nu, support):
    k = support.size
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = G[np.ix_(support, support)]
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    rhs = np.append(delta[support], nu)
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    # iterative refinement; the support systems are often badly conditioned
    for _ in range(3):
        sol = sol + np.linalg.lstsq(M, rhs - M @ sol, rcond=None)[0]
    return sol[:k]


def _smo_run(G, delta, lam, diag, tol, max_iter, it):
    grad = delta - G @ lam
    while it < max_iter:
        if it % 200 == 0:
            grad = delta - G @ lam
        i = int(np.argmax(grad))
        pos = lam > 0
        gap = grad[i] - grad
        cand = pos & (gap > 0)
        cand[i] = False
        if not cand.any() or float(gap[pos].max()) <= tol:
            break
        curv = diag[i] + diag - 2.0 * G[i]
        curv = np.where(curv > 1e-300, curv, 1e-300)
        gain = np.where(cand, gap * gap / curv, -np.inf)
        j = int(np.argmax(gain))
        step = min(gap[j] / curv[j], lam[j])
        lam[i] += step
        lam[j] -= step
        if lam[j] < 1e-300:
            lam[j] = 0.0
        grad -= step * (G[:, i] - G[:, j])
        it += 1
    return lam, it


def _kkt_residual(G, delta, lam):
    grad = delta - G @ lam
    pos = lam > 0
    residual = float(grad.max() - grad[pos].min()) if pos.any() else 0.0
    return grad, max(residual, 0.0)


def solve_restricted_qp(
    constraints,
    H: WeakOutputs,
    nu: float,
    lam0=None,
    *,
    tol: float = 1e-12,
    max_iter: int = 200_000,
    kkt_limit: float = 1e-8,
) -> QPResult:
    """Solve ``min 1/2 |w|^2 + nu xi`` s.t. ``Q_w(Y) <= xi`` for ``Y`` in ``constraints``, ``xi >= 0``.

    Works in the dual over ``{lam >= 0, sum(lam) <= nu}`` (an extra slack
    coordinate turns the inequality into a simplex) and recovers
    ``w = sum_Y lam_Y phi_delta(Y)``. ``lam0`` warm-starts the duals; entries
    for constraints appended since are taken as zero.
    """
    if not nu > 0:
        raise ConfigError("nu must be > 0")
    constraints = list(constraints)
    if not constraints:
        raise ValueError("the working set is empty")
    K = len(constraints)
    A = np.stack([phi_delta(H, Y) for Y in constraints])
    delta = np.array([Y.loss for Y in constraints], dtype=np.float64)
    G = np.zeros((K + 1, K + 1))
    G[:K, :K] = A @ A.T
    d_ext = np.append(delta, 0.0)
    lam = np.zeros(K + 1)
    if lam0 is not None:
        lam0 = np.clip(np.asarray(lam0, dtype=np.float64)[:K], 0.0, None)
        lam[: lam0.size] = lam0
        total = lam[:K].sum()
        if total > nu:
            lam[:K] *= nu / total
    lam[K] = max(nu - lam[:K].sum(), 0.0)
    if lam.sum() <= 0:
        lam[K] = nu
    lam, grad, residual, iters = _smo_simplex(G, d_ext, nu, lam, tol, max_iter)
    if residual > kkt_limit:
        raise NumericalError(
            f"restricted QP did not converge after {iters} iterations (KKT residual {residual:.3e})"
        )
    lam_c = lam[:K].copy()
    w = A.T @ lam_c
    q = delta - A @ w
    xi = max(0.0, float(q.max()))
    dual = float(delta @ lam_c - 0.5 * w @ w)
    return QPResult(w=w, xi=xi, lam=lam_c, dual_objective=dual, kkt_residual=residual, iterations=iters)


@dataclass
class CuttingPlaneState:
    """Result of :func:`cutting_plane`.

    ``log`` holds one dict per oracle call with the violation found, the
    current slack, the working-set size and the restricted dual objective.
    """

    constraints: list
    lam: np.ndarray
    w: np.ndarray
    xi: float
    nu: float
    eps: float
    iterations: int
    converged: bool
    kkt_residual: float = 0.0
    dual_objective: float = 0.0
    log: list = field(default_factory=list)

    def kkt_reconstruction(self, H: WeakOutputs) -> np.ndarray:
        """``sum_Y lam_Y phi_delta(Y)``; equals ``w`` at a solution."""
        if not self.constraints:
            return np.zeros(H.tau)
        return sum(l * phi_delta(H, Y) for l, Y in zip(self.lam, self.constraints))


def cutting_plane(
    H: WeakOutputs,
    rng: PaucRange,
    nu: float,
    eps: float = 1e-4,
    *,
    max_iter: int = 1000,
    working_set=None,
    lam0=None,
    qp_tol: float = 1e-12,
) -> CuttingPlaneState:
    """Cutting-plane training of the coefficient vector ``w``.

    Starting from ``working_set`` (empty by default), alternate between solving
    the restricted QP and adding the most violated ordering, until the oracle's
    constraint is violated by at most ``xi + eps``. The loop also ends when the
    oracle returns a constraint already in the working set, since the restricted
    solution is then optimal up to the QP tolerance.
    """
    if not nu > 0:
        raise ConfigError("nu must be > 0")
    if not eps > 0:
        raise ConfigError("eps must be > 0")
    rng.indices(H.n)
    constraints = list(working_set or [])
    keys = {Y.key for Y in constraints}
    if constraints:
        res = solve_restricted_qp(constraints, H, nu, lam0, tol=qp_tol)
        w, xi, lam = res.w, res.xi, res.lam
        kkt, dual = res.kkt_residual, res.dual_objective
    else:
        w, xi, lam, kkt, dual = np.zeros(H.tau), 0.0, np.zeros(0), 0.0, 0.0
    log = []
    for it in range(1, max_iter + 1):
        Ybar = most_violated_constraint(H, w, rng)
        q = violation(H, w, Ybar)
        log.append({"iteration": it, "violation": q, "xi": xi, "working_set": len(constraints),
                    "dual_objective": dual})
        if q <= xi + eps or Ybar.key in keys:
            return CuttingPlaneState(constraints, lam, w, xi, nu, eps, it, True, kkt, dual, log)
        constraints.append(Ybar)
        keys.add(Ybar.key)
        res = solve_restricted_qp(constraints, H, nu, lam, tol=qp_tol)
        w, xi, lam = res.w, res.xi, res.lam
        kkt, dual = res.kkt_residual, res.dual_objective
    raise NumericalError(
        f"cutting plane hit the iteration cap ({max_iter}) with violation {q:.3e} > xi + eps"
    )


def primal_objective(H: WeakOutputs, w, rng: PaucRange, nu: float):
    """``F(w) = 1/2 |w|^2 + nu * max_Y Q_w(Y)`` with the exact oracle.

    Returns ``(F, maximizer)``. With no learners ``F = nu * max loss``.
    """
    w = np.asarray(w, dtype=np.float64)
    if H.tau == 0:
        ja, jb = rng.indices(H.n)
        m = H.m
        return nu * m * (jb - ja) / rng.normalizer(m, H.n), None
    Y = most_violated_constraint(H, w, rng)
    q = max(0.0, violation(H, w, Y))
    return 0.5 * float(w @ w) + nu * q, Y
