"""Directed account graph in compressed sparse row form."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import Decimal
from typing import IO, Iterable

import numpy as np

from .ingest import Transaction


@dataclass(frozen=True)
class TransactionGraph:
    """Debtor -> creditor graph with parallel payments aggregated per edge.

    Edge ``e`` of node ``u`` lives at ``out_offsets[u] <= e < out_offsets[u+1]``
    and points to ``out_targets[e]``. Targets within a row are sorted.
    """

    accounts: np.ndarray  # node id -> account hash
    out_offsets: np.ndarray
    out_targets: np.ndarray
    edge_count_weight: np.ndarray
    edge_amount_weight: np.ndarray
    node_index: dict[int, int] = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.accounts)

    @property
    def n_edges(self) -> int:
        return len(self.out_targets)

    def node_of(self, account_hash: int) -> int | None:
        return self.node_index.get(account_hash)

    def account_of(self, node: int) -> int:
        return int(self.accounts[node])

    def edge_sources(self) -> np.ndarray:
        """Source node of every edge, aligned with ``out_targets``."""
        return np.repeat(np.arange(self.n_nodes), np.diff(self.out_offsets))

    def out_degree(self) -> np.ndarray:
        return np.diff(self.out_offsets)


def build_graph(txns: Iterable[Transaction]) -> TransactionGraph:
    """Aggregate transactions into a directed graph.

    Node ids follow first appearance (debtor before creditor within a row).
    Self-loops are kept.
    """
    node_index: dict[int, int] = {}
    agg: dict[tuple[int, int], list] = {}
    for t in txns:
        u = node_index.setdefault(t.debtor_account, len(node_index))
        v = node_index.setdefault(t.creditor_account, len(node_index))
        slot = agg.get((u, v))
        if slot is None:
            agg[(u, v)] = [1, t.amount]
        else:
            slot[0] += 1
            slot[1] += t.amount

    n = len(node_index)
    keys = sorted(agg)
    src = np.fromiter((k[0] for k in keys), dtype=np.int64, count=len(keys))
    dst = np.fromiter((k[1] for k in keys), dtype=np.int64, count=len(keys))
    counts = np.fromiter((agg[k][0] for k in keys), dtype=np.int64, count=len(keys))
    amounts = np.fromiter((float(agg[k][1]) for k in keys), dtype=np.float64, count=len(keys))
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    accounts = np.zeros(n, dtype=np.int64)
    for h, i in node_index.items():
        accounts[i] = h
    return TransactionGraph(accounts, offsets, dst, counts, amounts, node_index)


def write_edges(graph: TransactionGraph, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["source_hash", "target_hash", "count", "amount_sum"])
    src = graph.edge_sources()
    for e in range(graph.n_edges):
        writer.writerow([
            graph.account_of(src[e]),
            graph.account_of(graph.out_targets[e]),
            int(graph.edge_count_weight[e]),
            format(Decimal(repr(float(graph.edge_amount_weight[e]))), "f"),
        ])


def graph_stats(graph: TransactionGraph) -> dict:
    deg = graph.out_degree()
    return {
        "n_nodes": graph.n_nodes,
        "n_edges": graph.n_edges,
        "n_transactions": int(graph.edge_count_weight.sum()),
        "n_dangling": int((deg == 0).sum()),
        "n_self_loops": int((graph.edge_sources() == graph.out_targets).sum()),
    }
