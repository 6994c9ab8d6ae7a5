"""Ledger parsing, status filtering and chronological partitioning."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from decimal import Decimal, InvalidOperation
from typing import IO, Iterable, Mapping, Sequence

from .errors import PprFraudError

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%S"

# Transaction field -> CSV column name.
DEFAULT_SCHEMA: dict[str, str] = {
    "id": "id",
    "event_time": "eventtimecet",
    "amount": "trxamount",
    "currency": "currency",
    "execution_date": "transactionexecutiondate",
    "txn_type": "transactiontype",
    "status": "trxstatus",
    "channel": "channel",
    "label": "label",
    "debtor_account": "debtoraccountnumberhash",
    "creditor_account": "creditoraccountnumberhash",
    "party_id": "partyidhash",
    "source_ip": "sourceiphash",
    "session_id": "sessionidhash",
    "creditor_party_id": "creditoraccountpartyidhash",
}
CSV_COLUMNS = list(DEFAULT_SCHEMA.values())

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1
_CENT = Decimal("0.01")


class MalformedRow(PprFraudError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class MissingColumn(PprFraudError):
    def __init__(self, name: str):
        super().__init__(f"missing column {name!r}")
        self.name = name


class EmptyAfterHistory(PprFraudError):
    pass


@dataclass(frozen=True, slots=True)
class Transaction:
    """One ledger row. ``event_time`` is timezone-aware UTC."""

    id: str
    event_time: datetime
    amount: Decimal
    currency: str
    execution_date: date
    txn_type: str
    status: str
    channel: str
    label: int
    debtor_account: int
    creditor_account: int
    party_id: int
    source_ip: int
    session_id: int
    creditor_party_id: int

    @property
    def sort_key(self) -> tuple[datetime, str]:
        return (self.event_time, self.id)


@dataclass(frozen=True)
class SplitDataset:
    history: tuple[Transaction, ...]
    train: tuple[Transaction, ...]
    test: tuple[Transaction, ...]
    # (end of the history window, event time of the first test row or None)
    boundaries: tuple[datetime, datetime | None]

    @property
    def past(self) -> tuple[Transaction, ...]:
        """History and train rows: everything a model may learn from."""
        return self.history + self.train


def _parse_hash(value: str, column: str) -> int:
    v = int(value)
    if not _INT64_MIN <= v <= _INT64_MAX:
        raise ValueError(f"{column} out of 64-bit range")
    return v


def _parse_row(row: Sequence[str], idx: Mapping[str, int], line_no: int) -> Transaction:
    def get(field: str) -> str:
        return row[idx[field]].strip()

    field = "id"
    try:
        field = "event_time"
        ts = datetime.strptime(get("event_time"), TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)
        field = "amount"
        amount = Decimal(get("amount"))
        if not amount.is_finite() or amount < 0:
            raise ValueError("amount must be finite and >= 0")
        field = "execution_date"
        exec_date = date.fromisoformat(get("execution_date"))
        field = "label"
        label = int(get("label"))
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label}")
        hashes = {}
        for f in ("debtor_account", "creditor_account", "party_id", "source_ip", "session_id", "creditor_party_id"):
            field = f
            hashes[f] = _parse_hash(get(f), f)
        if hashes["debtor_account"] == 0 or hashes["creditor_account"] == 0:
            field = "account"
            raise ValueError("account hash 0 is reserved")
    except (ValueError, InvalidOperation) as exc:
        raise MalformedRow(line_no, f"{field}: {exc}") from None
    except IndexError:
        raise MalformedRow(line_no, f"expected {len(idx)} fields, got {len(row)}") from None
    return Transaction(
        id=get("id"),
        event_time=ts,
        amount=amount,
        currency=get("currency"),
        execution_date=exec_date,
        txn_type=get("txn_type"),
        status=get("status"),
        channel=get("channel"),
        label=label,
        **hashes,
    )


def parse_ledger(source: IO[bytes] | IO[str], schema: Mapping[str, str] | None = None) -> list[Transaction]:
    """Parse a ledger CSV into transactions, preserving file order.

    Args:
        source: Binary or text stream of UTF-8 CSV with a header row.
        schema: Mapping of Transaction field name to CSV column name. Defaults to
            :data:`DEFAULT_SCHEMA`.

    Raises:
        MissingColumn: a mapped column is absent from the header.
        MalformedRow: a field fails to parse or violates a Transaction invariant.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    if isinstance(source, io.TextIOBase):
        text = source
    else:
        text = io.TextIOWrapper(source, encoding="utf-8", newline="")
    reader = csv.reader(text)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MalformedRow(1, "missing header row") from None
    positions = {name: i for i, name in enumerate(header)}
    idx = {}
    for field, column in schema.items():
        if column not in positions:
            raise MissingColumn(column)
        idx[field] = positions[column]
    out = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        out.append(_parse_row(row, idx, line_no))
    return out


def read_ledger(path, schema: Mapping[str, str] | None = None) -> list[Transaction]:
    with open(path, "rb") as fh:
        return parse_ledger(fh, schema)


def format_amount(amount: Decimal) -> str:
    """Render an amount with at least two fractional digits, never rounding."""
    if amount.as_tuple().exponent > -2:  # type: ignore[operator]
        amount = amount.quantize(_CENT)
    return format(amount, "f")


def write_ledger(txns: Iterable[Transaction], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for t in txns:
        writer.writerow([
            t.id,
            t.event_time.strftime(TIMESTAMP_FORMAT),
            format_amount(t.amount),
            t.currency,
            t.execution_date.isoformat(),
            t.txn_type,
            t.status,
            t.channel,
            t.label,
            t.debtor_account,
            t.creditor_account,
            t.party_id,
            t.source_ip,
            t.session_id,
            t.creditor_party_id,
        ])


def filter_status(txns: Iterable[Transaction], status: str) -> list[Transaction]:
    return [t for t in txns if t.status == status]


def chronological_split(
    txns: Iterable[Transaction],
    history_days: int = 14,
    train_fraction: float = 0.7,
) -> SplitDataset:
    """Partition transactions into history, train and test segments by time.

    Rows are ordered by ``(event_time, id)``. Every row before midnight UTC of
    the first day plus ``history_days`` calendar days is history. Of the rest,
    the earliest ``train_fraction`` by count (rounded half up) is train.
    """
    if history_days < 0:
        raise ValueError("history_days must be >= 0")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    ordered = sorted(txns, key=lambda t: t.sort_key)
    if not ordered:
        raise EmptyAfterHistory("no transactions to split")
    first = ordered[0].event_time
    cutoff = datetime(first.year, first.month, first.day, tzinfo=timezone.utc) + timedelta(days=history_days)
    n_hist = 0
    while n_hist < len(ordered) and ordered[n_hist].event_time < cutoff:
        n_hist += 1
    rest = ordered[n_hist:]
    if not rest:
        raise EmptyAfterHistory(f"no transactions after the {history_days}-day history window")
    n_train = int(math.floor(train_fraction * len(rest) + 0.5))
    train, test = rest[:n_train], rest[n_train:]
    return SplitDataset(
        history=tuple(ordered[:n_hist]),
        train=tuple(train),
        test=tuple(test),
        boundaries=(cutoff, test[0].event_time if test else None),
    )
