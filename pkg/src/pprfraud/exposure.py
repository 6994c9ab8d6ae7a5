"""Fraud-seeded personalized PageRank and the per-transaction exposure feature."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import PprFraudError
from .graph import TransactionGraph
from .ingest import Transaction


class EmptyGraph(PprFraudError):
    pass


class WeightMode(str, Enum):
    COUNT = "count"
    AMOUNT = "amount"
    UNWEIGHTED = "unweighted"


class ExposureMode(str, Enum):
    SUM = "sum"
    MAX = "max"
    CREDITOR = "creditor"


@dataclass(frozen=True)
class PprParams:
    alpha: float = 0.85
    tol: float = 1e-9
    max_iter: int = 1000
    weight_mode: WeightMode = WeightMode.COUNT

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        object.__setattr__(self, "weight_mode", WeightMode(self.weight_mode))


@dataclass(frozen=True)
class PprScores:
    scores: np.ndarray
    iterations_used: int
    converged: bool
    residual: float


class NotConverged(PprFraudError):
    """Power iteration hit ``max_iter``; ``scores`` holds the last iterate."""

    def __init__(self, scores: PprScores):
        super().__init__(f"PPR did not converge after {scores.iterations_used} iterations (L1 residual {scores.residual:.3e})")
        self.scores = scores
        self.residual = scores.residual


def build_personalization(train_txns: Iterable[Transaction], graph: TransactionGraph) -> np.ndarray:
    """Teleport distribution from mean fraud labels per account.

    An account's raw score is its mean label as creditor if it ever received a
    payment, otherwise its mean label as debtor. Accounts without transactions
    score 0. Falls back to uniform when every raw score is 0.
    """
    if graph.n_nodes == 0:
        raise EmptyGraph("cannot personalize an empty graph")
    n = graph.n_nodes
    deb_sum = np.zeros(n)
    deb_cnt = np.zeros(n)
    cred_sum = np.zeros(n)
    cred_cnt = np.zeros(n)
    for t in train_txns:
        u = graph.node_of(t.debtor_account)
        if u is not None:
            deb_sum[u] += t.label
            deb_cnt[u] += 1
        v = graph.node_of(t.creditor_account)
        if v is not None:
            cred_sum[v] += t.label
            cred_cnt[v] += 1
    raw = np.zeros(n)
    has_deb = deb_cnt > 0
    raw[has_deb] = deb_sum[has_deb] / deb_cnt[has_deb]
    # creditor entries are inserted after debtor entries and win
    has_cred = cred_cnt > 0
    raw[has_cred] = cred_sum[has_cred] / cred_cnt[has_cred]
    total = raw.sum()
    if total <= 0:
        return np.full(n, 1.0 / n)
    return raw / total


def transition_probabilities(graph: TransactionGraph, weight_mode: WeightMode | str) -> tuple[np.ndarray, np.ndarray]:
    """Per-edge step probabilities and the dangling-node mask.

    A node whose out-edges all carry zero weight counts as dangling.
    """
    mode = WeightMode(weight_mode)
    if mode is WeightMode.COUNT:
        w = graph.edge_count_weight.astype(np.float64)
    elif mode is WeightMode.AMOUNT:
        w = graph.edge_amount_weight.astype(np.float64)
    else:
        w = np.ones(graph.n_edges)
    src = graph.edge_sources()
    out_w = np.bincount(src, weights=w, minlength=graph.n_nodes)
    dangling = out_w <= 0
    prob = np.zeros_like(w)
    live = out_w[src] > 0
    prob[live] = w[live] / out_w[src][live]
    return prob, dangling


def compute_ppr(graph: TransactionGraph, p: np.ndarray, params: PprParams = PprParams()) -> PprScores:
    """Personalized PageRank by power iteration.

    Each step is ``pi <- alpha * (T^T pi + m * p) + (1 - alpha) * p`` where
    ``m`` is the mass sitting on dangling nodes, starting from ``pi = p``.

    Raises:
        NotConverged: the L1 step size never dropped below ``params.tol``.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (graph.n_nodes,):
        raise ValueError(f"personalization has length {p.shape}, graph has {graph.n_nodes} nodes")
    if graph.n_nodes == 0:
        raise EmptyGraph("cannot rank an empty graph")
    prob, dangling = transition_probabilities(graph, params.weight_mode)
    src = graph.edge_sources()
    dst = graph.out_targets
    n = graph.n_nodes
    alpha = params.alpha
    teleport = (1.0 - alpha) * p
    pi = p.copy()
    residual = float("inf")
    for it in range(1, params.max_iter + 1):
        # bincount accumulates sequentially, so the result is bit-reproducible
        flow = np.bincount(dst, weights=pi[src] * prob, minlength=n)
        m = pi[dangling].sum()
        nxt = alpha * (flow + m * p) + teleport
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual < params.tol:
            return PprScores(pi, it, True, residual)
    raise NotConverged(PprScores(pi, params.max_iter, False, residual))


def score_lookup(graph: TransactionGraph, scores: PprScores) -> dict[int, float]:
    return dict(zip(graph.accounts.tolist(), scores.scores.tolist()))


def _combine(d: float, c: float, mode: ExposureMode | str) -> float:
    mode = ExposureMode(mode)
    if mode is ExposureMode.SUM:
        return d + c
    if mode is ExposureMode.MAX:
        return max(d, c)
    return c


def exposure_from_lookup(txn: Transaction, lookup: Mapping[int, float], mode: ExposureMode | str = ExposureMode.SUM) -> float:
    return _combine(lookup.get(txn.debtor_account, 0.0), lookup.get(txn.creditor_account, 0.0), mode)


def transaction_exposure(txn: Transaction, scores: PprScores, graph: TransactionGraph, mode: ExposureMode | str = ExposureMode.SUM) -> float:
    """Exposure of one payment: by default the sum of its endpoint scores.

    Accounts missing from the graph contribute 0.
    """
    u = graph.node_of(txn.debtor_account)
    v = graph.node_of(txn.creditor_account)
    d = 0.0 if u is None else float(scores.scores[u])
    c = 0.0 if v is None else float(scores.scores[v])
    return _combine(d, c, mode)


def write_scores(graph: TransactionGraph, scores: PprScores, stream: IO[str]) -> None:
    """Dump ``account_hash, ppr_score`` sorted by descending score."""
    order = sorted(range(graph.n_nodes), key=lambda i: (-scores.scores[i], int(graph.accounts[i])))
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["account_hash", "ppr_score"])
    for i in order:
        writer.writerow([int(graph.accounts[i]), repr(float(scores.scores[i]))])


def read_scores(stream: IO[str]) -> dict[int, float]:
    reader = csv.reader(stream)
    header = next(reader)
    if header != ["account_hash", "ppr_score"]:
        raise ValueError(f"unexpected score header {header}")
    return {int(a): float(s) for a, s in reader}
