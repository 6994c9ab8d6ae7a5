"""Seeded synthetic ledger with collusive fraud rings.

Background payments flow between uniformly random account pairs. A fraction of
rows is labelled fraudulent; :func:`inject_rings` then reroutes every
fraudulent payment to a mule account belonging to one of a few small rings, so
fraud concentrates on shared counterparties the way real mule networks do.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from decimal import Decimal
from typing import IO, Sequence

import numpy as np

from .errors import PprFraudError
from .ingest import Transaction

DEFAULT_CHANNELS = (
    ("DIRECT_WEB", 0.45),
    ("MOBILE_APP", 0.40),
    ("TELEPHONE", 0.10),
    ("BRANCH", 0.05),
)
# Fraudsters lean on remote channels; gives the baseline features some signal.
DEFAULT_FRAUD_CHANNELS = (
    ("DIRECT_WEB", 0.30),
    ("MOBILE_APP", 0.30),
    ("TELEPHONE", 0.35),
    ("BRANCH", 0.05),
)
_TXN_TYPES = (("Domestic", 0.9), ("International", 0.1))


class InvalidConfig(PprFraudError):
    pass


class RingCapacityExceeded(PprFraudError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_accounts: int = 5000
    n_transactions: int = 100_000
    span_days: int = 365
    fraud_rate: float = 0.005
    n_rings: int = 20
    ring_size: int = 4
    initiated_fraction: float = 0.47
    channels: tuple[tuple[str, float], ...] = DEFAULT_CHANNELS
    fraud_channels: tuple[tuple[str, float], ...] = DEFAULT_FRAUD_CHANNELS
    amount_lognormal: tuple[float, float] = (4.0, 1.0)
    start: str = "2020-09-01T00:00:00"

    def validate(self) -> None:
        def need(ok: bool, what: str) -> None:
            if not ok:
                raise InvalidConfig(what)

        need(0 <= self.seed < 2**64, "seed must be a 64-bit unsigned integer")
        need(self.n_accounts >= 2, "n_accounts >= 2")
        need(self.n_transactions >= 0, "n_transactions >= 0")
        need(self.span_days >= 1, "span_days >= 1")
        need(0.0 <= self.fraud_rate < 1.0, "0 <= fraud_rate < 1")
        need(self.n_rings >= 0, "n_rings >= 0")
        need(self.ring_size >= 2, "ring_size >= 2")
        need(0.0 < self.initiated_fraction <= 1.0, "initiated_fraction in (0, 1]")
        for name, dist in (("channels", self.channels), ("fraud_channels", self.fraud_channels)):
            need(len(dist) > 0, f"{name} must be non-empty")
            need(all(p >= 0 for _, p in dist), f"{name} probabilities must be >= 0")
            need(abs(sum(p for _, p in dist) - 1.0) <= 1e-9, f"{name} probabilities must sum to 1")
        mu, sigma = self.amount_lognormal
        need(math.isfinite(mu) and sigma >= 0, "amount_lognormal needs finite mu and sigma >= 0")
        try:
            datetime.fromisoformat(self.start)
        except ValueError:
            raise InvalidConfig("start must be an ISO timestamp") from None


@dataclass
class SynthLedger:
    transactions: list[Transaction]
    # (ring_id, account_hash) pairs
    rings: list[tuple[int, int]] = field(default_factory=list)


def _streams(config: SynthConfig) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    accounts_ss, ledger_ss, rings_ss = np.random.SeedSequence(config.seed).spawn(3)
    return (np.random.default_rng(accounts_ss), np.random.default_rng(ledger_ss), np.random.default_rng(rings_ss))


def _unique_hashes(rng: np.random.Generator, n: int) -> np.ndarray:
    out: list[int] = []
    seen = {0}
    while len(out) < n:
        for v in rng.integers(-(2**63), 2**63 - 1, size=n - len(out), dtype=np.int64).tolist():
            if v not in seen:
                seen.add(v)
                out.append(v)
    return np.array(out, dtype=np.int64)


def account_universe(config: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    """Account hashes and their owning party hashes, a pure function of the seed."""
    rng = _streams(config)[0]
    accounts = _unique_hashes(rng, config.n_accounts)
    parties = rng.integers(1, 2**62, size=config.n_accounts, dtype=np.int64)
    return accounts, parties


def _draw(rng: np.random.Generator, dist: Sequence[tuple[str, float]], size: int) -> np.ndarray:
    names = [n for n, _ in dist]
    p = np.array([w for _, w in dist], dtype=float)
    return rng.choice(len(names), size=size, p=p / p.sum())


def generate_ledger(config: SynthConfig) -> list[Transaction]:
    """Draw the background ledger, sorted by event time, with labels but no rings."""
    config.validate()
    accounts, parties = account_universe(config)
    rng = _streams(config)[1]
    n = config.n_transactions
    n_acc = config.n_accounts

    offsets = np.sort(rng.integers(0, config.span_days * 86400, size=n))
    debtor = rng.integers(0, n_acc, size=n)
    creditor = (debtor + rng.integers(1, n_acc, size=n)) % n_acc
    label = (rng.random(n) < config.fraud_rate).astype(np.int64)
    mu, sigma = config.amount_lognormal
    cents = np.rint(rng.lognormal(mu, sigma, size=n) * 100).astype(np.int64)
    channel = _draw(rng, config.channels, n)
    fraud_channel = _draw(rng, config.fraud_channels, n)
    txn_type = _draw(rng, _TXN_TYPES, n)
    initiated = np.zeros(n, dtype=bool)
    initiated[rng.permutation(n)[: int(round(config.initiated_fraction * n))]] = True
    source_ip = rng.integers(1, 2**62, size=n, dtype=np.int64)
    session = rng.integers(-(2**62), 2**62, size=n, dtype=np.int64)

    start = datetime.fromisoformat(config.start).replace(tzinfo=timezone.utc)
    channel_names = [c for c, _ in config.channels]
    fraud_names = [c for c, _ in config.fraud_channels]
    type_names = [t for t, _ in _TXN_TYPES]
    width = max(9, len(str(n)))
    out = []
    for i in range(n):
        ts = start + timedelta(seconds=int(offsets[i]))
        d, c = int(debtor[i]), int(creditor[i])
        fraud = int(label[i])
        out.append(Transaction(
            id=str(i + 1).zfill(width),
            event_time=ts,
            amount=Decimal(int(cents[i])).scaleb(-2),
            currency="EUR",
            execution_date=ts.date(),
            txn_type=type_names[txn_type[i]],
            status="Initiated" if initiated[i] else "Completed",
            channel=fraud_names[fraud_channel[i]] if fraud else channel_names[channel[i]],
            label=fraud,
            debtor_account=int(accounts[d]),
            creditor_account=int(accounts[c]),
            party_id=int(parties[d]),
            source_ip=int(source_ip[i]),
            session_id=int(session[i]),
            creditor_party_id=int(parties[c]),
        ))
    return out


def inject_rings(ledger: Sequence[Transaction], config: SynthConfig) -> SynthLedger:
    """Reroute fraudulent payments into mule rings.

    Mules are ``n_rings`` disjoint sets of ``ring_size`` accounts. While there
    are enough fraud rows, every mule is guaranteed at least one; the rest pick
    a ring and a member uniformly. Only ``creditor_account`` (and its party) of
    label-1 rows change.

    Raises:
        RingCapacityExceeded: the rings need more accounts than exist.
    """
    config.validate()
    n_mules = config.n_rings * config.ring_size
    if n_mules > config.n_accounts:
        raise RingCapacityExceeded(f"{config.n_rings} rings x {config.ring_size} > {config.n_accounts} accounts")
    if config.n_rings == 0:
        return SynthLedger(list(ledger), [])
    accounts, parties = account_universe(config)
    party_of = dict(zip(accounts.tolist(), parties.tolist()))
    rng = _streams(config)[2]
    mules = accounts[rng.choice(config.n_accounts, size=n_mules, replace=False)].reshape(config.n_rings, config.ring_size)
    rings = [(r, int(a)) for r in range(config.n_rings) for a in mules[r]]

    fraud_rows = [i for i, t in enumerate(ledger) if t.label == 1]
    order = rng.permutation(len(fraud_rows))
    ring_pick = rng.integers(0, config.n_rings, size=len(fraud_rows))
    member_pick = rng.integers(0, config.ring_size, size=len(fraud_rows))
    out = list(ledger)
    for k, pos in enumerate(order):
        if k < n_mules:
            r, m = divmod(k, config.ring_size)
        else:
            r, m = int(ring_pick[k]), int(member_pick[k])
        i = fraud_rows[pos]
        mule = int(mules[r, m])
        if mule == out[i].debtor_account:
            mule = int(mules[r, (m + 1) % config.ring_size])
        out[i] = replace(out[i], creditor_account=mule, creditor_party_id=party_of[mule])
    return SynthLedger(out, rings)


def synthesize(config: SynthConfig) -> SynthLedger:
    return inject_rings(generate_ledger(config), config)


def write_rings(rings: Sequence[tuple[int, int]], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["ring_id", "account_hash"])
    writer.writerows(rings)
