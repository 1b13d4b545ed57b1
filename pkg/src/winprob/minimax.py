"""Data-independent weights from worst-case total-variation bounds.

Two bounds on ``max_P E sum_j |p_j - phat_j|``:

* a closed form for the two-weight estimator ``w r1 + (1 - w) r2``,
  minimized at ``w = 1 - 1/(2n + 2)``;
* a K-weight bound given as a concave maximization over the K-simplex,
  valid for monotone weights with a large enough leading weight. It is
  evaluated by projected gradient ascent; the outer weight choice is a grid
  search followed by coordinate refinement.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InfeasibleError


def mle_minimax_bound(m: int, n: int) -> float:
    """Worst-case expected TV of the win-fraction estimator, ``sqrt(m / n)``."""
    return math.sqrt(m / n)


def theorem1_weight(n: int) -> float:
    """Weight on first places minimizing the two-weight bound: ``1 - 1/(2n+2)``."""
    if n < 1:
        raise ValueError("n must be positive")
    return 1.0 - 1.0 / (2 * n + 2)


def theorem1_bound(m: int, n: int, w: float) -> float:
    """``sqrt(m) * sqrt(2 (1-w)^2 + (w^2 + (1-w)^2) / n)``."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w must lie in [0, 1], got {w}")
    if w == 1.0:
        return mle_minimax_bound(m, n)
    return math.sqrt(m) * math.sqrt(2 * (1 - w) ** 2 + (w * w + (1 - w) ** 2) / n)


def theorem3_threshold(n: int) -> float:
    """Smallest leading weight for which the K-weight bound holds: ``(8n - sqrt(8n)) / (8n - 1)``."""
    return (8 * n - math.sqrt(8 * n)) / (8 * n - 1)


def check_theorem3_weights(n: int, w, atol: float = 1e-9) -> np.ndarray:
    """Validate ``w`` against the K-weight bound's hypotheses; return it as an array."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise InfeasibleError("weights must be a non-empty vector")
    if np.any(w < -atol) or abs(w.sum() - 1.0) > atol:
        raise InfeasibleError(f"weights must lie on the simplex, got {w}")
    if np.any(np.diff(w) > atol):
        raise InfeasibleError(f"weights must be non-increasing, got {w}")
    thr = theorem3_threshold(n)
    if w[0] < thr - atol:
        raise InfeasibleError(f"leading weight {w[0]:.6g} is below the threshold "
                              f"{thr:.6g} required for n={n}")
    return w


# --------------------------------------------------------------------------
# inner maximization over t in the K-simplex
# --------------------------------------------------------------------------


def project_simplex_rows(X: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    X = np.atleast_2d(X)
    k = X.shape[1]
    U = -np.sort(-X, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, k + 1)
    cond = U - css / idx > 0
    rho = k - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(X.shape[0]), rho] / (rho + 1)
    return np.maximum(X - theta[:, None], 0.0)


def _terms(T: np.ndarray, W: np.ndarray, m: int, n: int):
    """Square-root arguments of the bound and their derivatives in t."""
    K = W.shape[1]
    w1 = W[:, :1]
    w2 = W[:, 1:2] if K > 1 else np.zeros_like(w1)
    a = 1.0 - w1
    c = m - K + 1
    A = np.empty_like(T)
    dA = np.empty_like(T)
    if K > 1:
        t = T[:, :-1]
        r = a * t - W[:, 1:]
        A[:, :-1] = r * r + (w1 * w1 * t + w2 * w2) / n
        dA[:, :-1] = 2 * a * r + w1 * w1 / n
    tK = T[:, -1:]
    A[:, -1:] = (a * tK) ** 2 + (c / n) * (w1 * w1 * tK + w2 * w2 * c)
    dA[:, -1:] = 2 * a * a * tK + c * w1 * w1 / n
    return A, dA


def theorem3_objective(T, W, m: int, n: int) -> np.ndarray:
    """Value of the bound's inner objective for rows of ``T`` against rows of ``W``."""
    T = np.atleast_2d(np.asarray(T, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    T, W = np.broadcast_arrays(T, W)
    A, _ = _terms(T, W, m, n)
    return np.sqrt(np.maximum(A, 0.0)).sum(axis=1)


def _maximize_inner(W: np.ndarray, m: int, n: int, tol: float = 1e-10,
                    max_iter: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
    """Projected gradient ascent with backtracking, one problem per row of W."""
    G, K = W.shape
    T = np.full((G, K), 1.0 / K)
    f = theorem3_objective(T, W, m, n)
    if K == 1:
        return f, T
    step = np.ones(G)
    active = np.ones(G, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Ta, Wa, fa, sa = T[idx], W[idx], f[idx], step[idx]
        A, dA = _terms(Ta, Wa, m, n)
        g = np.clip(dA / (2 * np.sqrt(np.maximum(A, 1e-18))), -1e6, 1e6)
        accepted = np.zeros(idx.size, dtype=bool)
        Tn = Ta.copy()
        fn = fa.copy()
        for _ in range(60):
            todo = ~accepted
            if not todo.any():
                break
            cand = project_simplex_rows(Ta[todo] + sa[todo, None] * g[todo])
            fc = theorem3_objective(cand, Wa[todo], m, n)
            ok = fc >= fa[todo] + 1e-4 * np.einsum("ij,ij->i", g[todo], cand - Ta[todo])
            sub = np.flatnonzero(todo)
            good = sub[ok]
            Tn[good] = cand[ok]
            fn[good] = fc[ok]
            accepted[good] = True
            sa[sub[~ok]] *= 0.5
        gain = fn - fa
        improved = accepted & (gain > 0)
        T[idx[improved]] = Tn[improved]
        f[idx[improved]] = fn[improved]
        step[idx] = np.where(accepted, sa * 2.0, sa)
        active[idx[~accepted | (gain < tol)]] = False
    return f, T


def theorem3_bound(m: int, n: int, K: int, w, return_argmax: bool = False):
    """Worst-case expected-TV bound for the K-weight estimator.

    Maximizes, over ``t`` in the K-simplex, ::

        sum_{j<K} sqrt(((1-w1) t_j - w_{j+1})^2 + (w1^2 t_j + w2^2) / n)
          + sqrt((1-w1)^2 t_K^2 + c/n (w1^2 t_K + w2^2 c)),   c = m - K + 1

    which is concave under the feasibility conditions checked first.

    Raises:
        InfeasibleError: ``w`` is not monotone, its leading weight is below
            :func:`theorem3_threshold`, or ``K`` exceeds ``m``.
    """
    w = check_theorem3_weights(n, w)
    if w.size != K:
        raise InfeasibleError(f"expected {K} weights, got {w.size}")
    if not 1 <= K <= m:
        raise InfeasibleError(f"K={K} must lie in [1, m={m}]")
    f, T = _maximize_inner(w[None, :], m, n)
    if return_argmax:
        return float(f[0]), T[0]
    return float(f[0])


def _bound_batch(W: np.ndarray, m: int, n: int) -> np.ndarray:
    return _maximize_inner(W, m, n)[0]


def _outer_grid(n: int, K: int, resolution: int) -> np.ndarray:
    from .estimators import simplex_grid

    thr = theorem3_threshold(n)
    start = math.ceil(thr * resolution - 1e-9)
    lead = [thr] + [i / resolution for i in range(start, resolution + 1) if i / resolution > thr]
    lead = np.array(sorted(set(lead), reverse=True))
    if K == 1:
        return np.ones((1, 1))
    splits = simplex_grid(K - 1, resolution, monotone=True)
    rest = (1.0 - lead)[:, None, None] * splits[None, :, :]
    W = np.concatenate([np.broadcast_to(lead[:, None, None], rest.shape[:2] + (1,)), rest], axis=2)
    W = W.reshape(-1, K)
    keep = W[:, 0] >= W[:, 1] - 1e-12
    return W[keep]


def theorem3_optimal_weights(m: int, n: int, K: int, *, resolution: int = 200,
                             min_step: float = 1e-5) -> tuple[np.ndarray, float]:
    """Feasible weights minimizing :func:`theorem3_bound`.

    Grid over the leading weight in ``[threshold, 1]`` and over the split of
    the remaining mass among ``w_2..w_K`` (both at ``1/resolution``), then
    coordinate refinement down to ``min_step``. Returns ``(weights, bound)``.
    """
    if m < 2 or n < 1 or not 1 <= K <= m:
        raise InfeasibleError(f"need m >= 2, n >= 1 and 1 <= K <= m (got m={m}, n={n}, K={K})")
    if K == 1:
        return np.ones(1), mle_minimax_bound(m, n)
    thr = theorem3_threshold(n)
    W = _outer_grid(n, K, resolution)
    vals = _bound_batch(W, m, n)
    best_i = int(np.argmin(vals))
    w, best = W[best_i].copy(), float(vals[best_i])

    # refinement state: leading weight plus barycentric split of the remainder
    from .estimators import _basis, _to_barycentric

    B = _basis(K - 1, True)
    lead = w[0]
    rest = w[1:] / (1.0 - lead) if lead < 1.0 else np.eye(K - 1)[0]
    lam = _to_barycentric(rest, True)
    lam /= lam.sum()

    def assemble(lead_v, lam_v):
        return np.concatenate([[lead_v], (1.0 - lead_v) * (B @ lam_v)])

    step = 1.0 / resolution
    while step >= min_step:
        while True:
            cands = []
            for d in (step, -step):
                lv = min(1.0, max(thr, lead + d))
                if lv != lead:
                    cands.append((lv, lam))
            for a in range(K - 1):
                for b in range(K - 1):
                    if a != b and lam[a] > 0:
                        mv = min(step, lam[a])
                        c = lam.copy()
                        c[a] -= mv
                        c[b] += mv
                        cands.append((lead, c))
            if not cands:
                break
            Wc = np.array([assemble(lv, lm) for lv, lm in cands])
            ok = Wc[:, 0] >= Wc[:, 1] - 1e-12
            if not ok.any():
                break
            Wc = Wc[ok]
            cands = [c for c, keep in zip(cands, ok) if keep]
            vals = _bound_batch(Wc, m, n)
            j = int(np.argmin(vals))
            if not vals[j] < best - 1e-12:
                break
            (lead, lam), best, w = cands[j], float(vals[j]), Wc[j]
        step /= 2.0
    return w, best


def bound_curves(m: int, n_values, K_values=(2, 3)) -> list[dict]:
    """Rows ``{n, curve, bound, weights}`` for the MLE, closed-form and K-weight bounds."""
    rows = []
    for n in n_values:
        rows.append({"n": n, "curve": "mle", "bound": mle_minimax_bound(m, n), "weights": [1.0]})
        ws = theorem1_weight(n)
        rows.append({"n": n, "curve": "theorem1", "bound": theorem1_bound(m, n, ws),
                     "weights": [ws, 1.0 - ws]})
        for K in K_values:
            w, b = theorem3_optimal_weights(m, n, K)
            rows.append({"n": n, "curve": f"theorem3_K{K}", "bound": b, "weights": w.tolist()})
    return rows
