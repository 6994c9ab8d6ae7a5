"""Independent reference computations.

Nothing here touches the CSR graph, the power iteration, the rank statistic or
the sliding-window index; each oracle recomputes its quantity the slow, direct
way.
"""

from datetime import timedelta

import numpy as np


def dense_transition(n, edges, node_of, weight="count"):
    """Row-stochastic matrix from a raw edge list; dangling rows left at zero."""
    W = np.zeros((n, n))
    for u, v, amount in edges:
        w = {"count": 1.0, "amount": amount, "unweighted": 1.0}[weight]
        if weight == "unweighted":
            W[node_of[u], node_of[v]] = 1.0
        else:
            W[node_of[u], node_of[v]] += w
    out = W.sum(axis=1)
    dangling = out == 0
    T = np.zeros_like(W)
    T[~dangling] = W[~dangling] / out[~dangling, None]
    return T, dangling


def dense_ppr(T, dangling, p, alpha):
    """Solve pi = alpha (T^T + p d^T) pi + (1 - alpha) p directly."""
    n = len(p)
    M = alpha * (T.T + np.outer(p, dangling.astype(float)))
    return np.linalg.solve(np.eye(n) - M, (1 - alpha) * p)


def standard_pagerank(T, dangling, alpha):
    """Classic PageRank as the Perron eigenvector of the Google matrix.

    Dangling nodes jump uniformly; teleportation is uniform.
    """
    n = T.shape[0]
    S = T.copy()
    S[dangling] = 1.0 / n
    G = alpha * S.T + (1 - alpha) / n * np.ones((n, n))
    vals, vecs = np.linalg.eig(G)
    k = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, k])
    return v / v.sum()


def brute_auc(scores, labels):
    """P(score_pos > score_neg) + 0.5 P(tie) over every pair."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    pos, neg = s[y == 1], s[y == 0]
    wins = 0.0
    for a in pos:
        for b in neg:
            wins += 1.0 if a > b else 0.5 if a == b else 0.0
    return wins / (len(pos) * len(neg))


def reference_loss(w, b, X, y, l2):
    z = X @ w + b
    # log(1 + e^z) written without logaddexp
    softplus = np.where(z > 0, z + np.log1p(np.exp(-np.abs(z))), np.log1p(np.exp(-np.abs(z))))
    return float(np.mean(softplus - y * z) + 0.5 * l2 * np.dot(w, w))


def finite_difference_grad(w, b, X, y, l2, h=1e-6):
    theta = np.r_[w, b]
    g = np.zeros_like(theta)
    for i in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (reference_loss(up[:-1], up[-1], X, y, l2) - reference_loss(dn[:-1], dn[-1], X, y, l2)) / (2 * h)
    return g[:-1], g[-1]


def brute_feature_row(target, prior, window_days, encode, lookup):
    """Features of ``target`` from an explicit list of earlier transactions."""
    t = target.event_time
    window = [p for p in prior if t - timedelta(days=window_days) < p.event_time < t]
    mine = [p for p in window if p.debtor_account == target.debtor_account]
    recent = [p for p in mine if t - timedelta(days=min(7, window_days)) < p.event_time]
    inbound = [p for p in window if p.creditor_account == target.creditor_account]
    same_day = sum(1 for p in mine if p.event_time.weekday() == t.weekday())
    if mine and recent and sum(p.amount for p in mine) != 0:
        ratio = (sum(p.amount for p in recent) / len(recent)) / (sum(p.amount for p in mine) / len(mine))
        tod = min(max(float(ratio), 0.0), 10.0)
    else:
        tod = 1.0
    digits = [d for d in target.amount.as_tuple().digits if d]
    return [
        float(target.amount),
        float(digits[0] if digits else 0),
        encode(target.channel),
        float(len(inbound)),
        (same_day + 1) / (len(mine) + 7),
        tod,
        lookup.get(target.debtor_account, 0.0) + lookup.get(target.creditor_account, 0.0),
    ]
