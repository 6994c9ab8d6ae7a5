"""Fraud exposure scoring with personalized PageRank over transaction graphs."""

__version__ = "0.1.0"

BASELINE_FEATURES = (
    "current_amount",
    "current_amount_first_digit",
    "channel_index",
    "trx_count_creditor",
    "day_of_week",
    "time_of_day",
)
ALL_FEATURES = BASELINE_FEATURES + ("ppr",)
