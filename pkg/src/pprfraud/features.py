"""Baseline transaction features and feature-matrix assembly.

Time-window features only ever see transactions strictly earlier than the one
being scored: rows are processed in timestamp order and each batch of rows
sharing a timestamp is scored before any of them enters the history.
"""

from __future__ import annotations

import csv
from collections import Counter, deque
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from itertools import groupby
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from . import ALL_FEATURES, BASELINE_FEATURES
from .exposure import ExposureMode, PprScores, exposure_from_lookup, score_lookup
from .graph import TransactionGraph
from .ingest import SplitDataset, Transaction

DAY = 86400
SHORT_WINDOW_DAYS = 7
RATIO_CLIP = 10.0
_INT_COLUMNS = {"current_amount_first_digit", "trx_count_creditor", "label"}


class TimeOfDayMode(str, Enum):
    AMOUNT_RATIO = "amount_ratio"
    HOUR = "hour"


def first_digit(amount) -> int:
    """Leading significant decimal digit; 0 for a zero amount.

    >>> first_digit(250.0), first_digit(0.57), first_digit(0)
    (2, 5, 0)
    """
    d = amount if isinstance(amount, Decimal) else Decimal(repr(float(amount)))
    if d < 0 or not d.is_finite():
        raise ValueError(f"amount must be finite and >= 0, got {amount}")
    for digit in d.as_tuple().digits:
        if digit:
            return digit
    return 0


class ChannelEncoder:
    """Maps a channel to rank/K, rank 1 being the most frequent training channel.

    Unseen channels encode as 1.0, the same as the rarest known channel.
    """

    def __init__(self, ranks: Mapping[str, int]):
        self.ranks = dict(ranks)

    @classmethod
    def fit(cls, channels: Iterable[str]) -> "ChannelEncoder":
        counts = Counter(channels)
        ordered = sorted(counts, key=lambda c: (-counts[c], c))
        return cls({c: i + 1 for i, c in enumerate(ordered)})

    @property
    def k(self) -> int:
        return len(self.ranks)

    def encode(self, channel: str) -> float:
        r = self.ranks.get(channel)
        if r is None or not self.ranks:
            return 1.0
        return r / self.k


@dataclass
class _DebtorHistory:
    window: deque = field(default_factory=deque)  # (ts, weekday, hour, amount)
    recent: deque = field(default_factory=deque)  # (ts, amount) within the short window
    weekday_counts: list = field(default_factory=lambda: [0] * 7)
    hour_counts: list = field(default_factory=lambda: [0] * 24)
    window_sum: Decimal = Decimal(0)
    recent_sum: Decimal = Decimal(0)


class HistoryIndex:
    """Sliding-window history per debtor and per creditor.

    An event at time ``s`` is inside the window of a query at time ``t`` when
    ``t - window < s < t``. Queries must arrive in non-decreasing time order.
    """

    def __init__(self, window_days: int = 45):
        if window_days <= 0:
            raise ValueError("window_days must be > 0")
        self.window = window_days * DAY
        self.short = min(SHORT_WINDOW_DAYS, window_days) * DAY
        self._debtors: dict[int, _DebtorHistory] = {}
        self._creditors: dict[int, deque] = {}

    def add(self, txn: Transaction, ts: int) -> None:
        h = self._debtors.get(txn.debtor_account)
        if h is None:
            h = self._debtors[txn.debtor_account] = _DebtorHistory()
        wd, hour = txn.event_time.weekday(), txn.event_time.hour
        h.window.append((ts, wd, hour, txn.amount))
        h.weekday_counts[wd] += 1
        h.hour_counts[hour] += 1
        h.window_sum += txn.amount
        h.recent.append((ts, txn.amount))
        h.recent_sum += txn.amount
        self._creditors.setdefault(txn.creditor_account, deque()).append(ts)

    def debtor(self, account: int, ts: int) -> _DebtorHistory | None:
        h = self._debtors.get(account)
        if h is None:
            return None
        while h.window and h.window[0][0] <= ts - self.window:
            _, wd, hour, amt = h.window.popleft()
            h.weekday_counts[wd] -= 1
            h.hour_counts[hour] -= 1
            h.window_sum -= amt
        while h.recent and h.recent[0][0] <= ts - self.short:
            h.recent_sum -= h.recent.popleft()[1]
        return h

    def creditor_count(self, account: int, ts: int) -> int:
        q = self._creditors.get(account)
        if q is None:
            return 0
        while q and q[0] <= ts - self.window:
            q.popleft()
        return len(q)


def _ts(txn: Transaction) -> int:
    return int(txn.event_time.timestamp())


def day_of_week_score(txn: Transaction, hist: HistoryIndex) -> float:
    """Laplace-smoothed share of the debtor's windowed payments on this weekday."""
    h = hist.debtor(txn.debtor_account, _ts(txn))
    if h is None:
        return 1 / 7
    return (h.weekday_counts[txn.event_time.weekday()] + 1) / (len(h.window) + 7)


def hour_of_day_score(txn: Transaction, hist: HistoryIndex) -> float:
    h = hist.debtor(txn.debtor_account, _ts(txn))
    if h is None:
        return 1 / 24
    return (h.hour_counts[txn.event_time.hour] + 1) / (len(h.window) + 24)


def time_of_day_score(txn: Transaction, hist: HistoryIndex) -> float:
    """Debtor's 7-day mean amount over their full-window mean amount, clipped to [0, 10].

    Returns 1.0 when either mean is undefined or the window mean is 0.
    """
    h = hist.debtor(txn.debtor_account, _ts(txn))
    if h is None or not h.recent or not h.window or h.window_sum == 0:
        return 1.0
    ratio = (h.recent_sum / len(h.recent)) / (h.window_sum / len(h.window))
    return min(max(float(ratio), 0.0), RATIO_CLIP)


def trx_count_creditor(txn: Transaction, hist: HistoryIndex) -> int:
    return hist.creditor_count(txn.creditor_account, _ts(txn))


@dataclass
class FeatureMatrix:
    columns: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray

    def __len__(self) -> int:
        return len(self.y)

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]

    def select(self, columns: Sequence[str]) -> "FeatureMatrix":
        idx = [self.columns.index(c) for c in columns]
        return FeatureMatrix(tuple(columns), self.X[:, idx], self.y)


def _resolve_lookup(scores, graph) -> Mapping[int, float]:
    if scores is None:
        return {}
    if isinstance(scores, PprScores):
        if graph is None:
            raise ValueError("PprScores need the graph they were computed on")
        return score_lookup(graph, scores)
    return scores


def assemble_features(
    dataset: SplitDataset,
    scores: PprScores | Mapping[int, float] | None,
    graph: TransactionGraph | None,
    encoder: ChannelEncoder,
    window_days: int = 45,
    include_ppr: bool = True,
    time_of_day_mode: TimeOfDayMode | str = TimeOfDayMode.AMOUNT_RATIO,
    exposure_mode: ExposureMode | str = ExposureMode.SUM,
) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Build train and test feature matrices in one chronological pass.

    History rows only feed the sliding windows. ``scores`` is either PPR scores
    together with their graph, or a ready ``account_hash -> score`` mapping.
    """
    lookup = _resolve_lookup(scores, graph) if include_ppr else {}
    tod = hour_of_day_score if TimeOfDayMode(time_of_day_mode) is TimeOfDayMode.HOUR else time_of_day_score
    columns = ALL_FEATURES if include_ppr else BASELINE_FEATURES
    hist = HistoryIndex(window_days)

    tagged = [(t, 0) for t in dataset.history] + [(t, 1) for t in dataset.train] + [(t, 2) for t in dataset.test]
    tagged.sort(key=lambda r: r[0].sort_key)
    rows: tuple[list, list] = ([], [])
    labels: tuple[list, list] = ([], [])
    for _, batch in groupby(tagged, key=lambda r: r[0].event_time):
        batch = list(batch)
        for txn, part in batch:
            if part == 0:
                continue
            row = [
                float(txn.amount),
                first_digit(txn.amount),
                encoder.encode(txn.channel),
                trx_count_creditor(txn, hist),
                day_of_week_score(txn, hist),
                tod(txn, hist),
            ]
            if include_ppr:
                row.append(exposure_from_lookup(txn, lookup, exposure_mode))
            rows[part - 1].append(row)
            labels[part - 1].append(txn.label)
        for txn, _ in batch:
            hist.add(txn, _ts(txn))

    def matrix(i: int) -> FeatureMatrix:
        X = np.array(rows[i], dtype=np.float64).reshape(len(rows[i]), len(columns))
        return FeatureMatrix(columns, X, np.array(labels[i], dtype=np.int64))

    return matrix(0), matrix(1)


def write_features(fm: FeatureMatrix, stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(list(fm.columns) + ["label"])
    int_cols = [c in _INT_COLUMNS for c in fm.columns]
    for x, y in zip(fm.X.tolist(), fm.y.tolist()):
        writer.writerow([str(int(v)) if is_int else repr(v) for v, is_int in zip(x, int_cols)] + [y])


def read_features(stream: IO[str]) -> FeatureMatrix:
    reader = csv.reader(stream)
    header = next(reader)
    if not header or header[-1] != "label":
        raise ValueError("feature file must end with a label column")
    columns = tuple(header[:-1])
    data = [[float(v) for v in row] for row in reader if row]
    arr = np.array(data, dtype=np.float64).reshape(len(data), len(header))
    return FeatureMatrix(columns, arr[:, :-1].copy(), arr[:, -1].astype(np.int64))
