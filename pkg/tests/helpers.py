"""Small builders shared across the test modules."""

from datetime import datetime, timedelta, timezone
from decimal import Decimal

import numpy as np

from pprfraud.ingest import Transaction

T0 = datetime(2020, 9, 1, tzinfo=timezone.utc)


def txn(debtor, creditor, amount="10.00", label=0, *, id=None, t=0, channel="DIRECT_WEB", status="Initiated"):
    """A transaction ``t`` seconds after 2020-09-01 00:00 UTC."""
    ts = T0 + timedelta(seconds=t)
    return Transaction(
        id=id if id is not None else f"{t:012d}-{debtor}-{creditor}",
        event_time=ts,
        amount=Decimal(amount),
        currency="EUR",
        execution_date=ts.date(),
        txn_type="Domestic",
        status=status,
        channel=channel,
        label=label,
        debtor_account=debtor,
        creditor_account=creditor,
        party_id=1,
        source_ip=2,
        session_id=3,
        creditor_party_id=4,
    )


def random_edge_list(rng: np.random.Generator, n: int) -> list[tuple[int, int, float]]:
    """Random multigraph on accounts 1..n with self-loops and some dangling nodes.

    Every account appears in at least one edge so the graph has exactly n nodes.
    """
    m = int(rng.integers(n, 4 * n + 1))
    edges = []
    # a handful of sinks never send money
    sinks = set(rng.choice(n, size=max(1, n // 5), replace=False).tolist()) if n > 1 else set()
    senders = [a for a in range(n) if a not in sinks] or list(range(n))
    for _ in range(m):
        u = int(rng.choice(senders))
        v = int(rng.integers(0, n))
        edges.append((u + 1, v + 1, round(float(rng.uniform(0.5, 500.0)), 2)))
    for a in range(n):
        if not any(a + 1 in (u, v) for u, v, _ in edges):
            edges.append((int(rng.choice(senders)) + 1, a + 1, 1.0))
    if rng.random() < 0.5:
        s = int(rng.choice(senders)) + 1
        edges.append((s, s, 3.0))
    return edges


def edges_to_txns(edges):
    return [txn(u, v, f"{w:.2f}", id=f"{i:06d}", t=i) for i, (u, v, w) in enumerate(edges)]
