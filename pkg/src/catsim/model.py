"""Shared domain types: bank configuration, access traces, refresh events."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import IO, Iterator, NamedTuple

import numpy as np

# Causes attached to emitted refresh commands.
CAUSE_THRESHOLD_LEAF = "threshold-leaf"
CAUSE_SCA_GROUP = "sca-group"
CAUSE_PRA_NEIGHBORS = "pra-neighbors"
CAUSE_EPOCH_RESET = "epoch-reset"

REFRESH_CAUSES = (
    CAUSE_THRESHOLD_LEAF,
    CAUSE_SCA_GROUP,
    CAUSE_PRA_NEIGHBORS,
    CAUSE_EPOCH_RESET,
)

DEFAULT_REFRESH_INTERVAL_NS = 64_000_000
DEFAULT_GAP_NS = 10


class ConfigError(ValueError):
    """A bank or experiment configuration violates one of its invariants."""


class TraceFormatError(ValueError):
    """A trace stream is malformed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class BankConfig:
    """Static parameters of one simulated bank.

    n_rows: rows per bank. m_counters: counters available to adaptive/static
    schemes. max_levels: tree levels (root is level 0, deepest leaf level
    max_levels-1). refresh_threshold: activations after which victims must be
    refreshed. presplit_levels: the tree starts as a complete binary tree of
    this many levels instead of a single root counter.
    """

    n_rows: int = 65536
    m_counters: int = 64
    max_levels: int = 11
    refresh_threshold: int = 32768
    presplit_levels: int = 6
    refresh_interval_ns: int = DEFAULT_REFRESH_INTERVAL_NS

    @property
    def row_bits(self) -> int:
        return self.n_rows.bit_length() - 1

    @property
    def min_leaf_rows(self) -> int:
        return self.n_rows >> (self.max_levels - 1)


def validate_config(cfg: BankConfig) -> BankConfig:
    """Return cfg unchanged if every invariant holds, else raise ConfigError
    naming the first violated invariant."""
    if cfg.n_rows <= 0:
        raise ConfigError("n_rows must be positive")
    if cfg.m_counters <= 0:
        raise ConfigError("m_counters must be positive")
    if cfg.max_levels <= 0:
        raise ConfigError("max_levels must be positive")
    if cfg.refresh_threshold <= 0:
        raise ConfigError("refresh_threshold must be positive")
    if cfg.refresh_interval_ns <= 0:
        raise ConfigError("refresh_interval_ns must be positive")
    if not _is_pow2(cfg.m_counters):
        raise ConfigError("m_counters must be a power of two")
    if not _is_pow2(cfg.n_rows):
        # The address-bit tree traversal indexes rows by their binary prefix.
        raise ConfigError("n_rows must be a power of two")
    if cfg.m_counters > (1 << (cfg.max_levels - 1)):
        raise ConfigError(
            "m_counters exceeds 2^(max_levels-1): a tree of L levels has at "
            "most 2^(L-1) leaves"
        )
    if cfg.n_rows % (1 << (cfg.max_levels - 1)) != 0:
        raise ConfigError("n_rows must be divisible by 2^(max_levels-1)")
    lam_max = max(1, cfg.m_counters.bit_length() - 1)  # log2(M), floor 1
    if not (1 <= cfg.presplit_levels <= lam_max):
        raise ConfigError(
            f"presplit_levels must satisfy 1 <= lambda <= log2(m_counters)"
            f" (got {cfg.presplit_levels}, limit {lam_max})"
        )
    return cfg


class AccessEvent(NamedTuple):
    timestamp_ns: int
    bank: int
    row: int


@dataclass(frozen=True)
class RefreshEvent:
    """An emitted victim-refresh command.

    low_row..high_row is inclusive and already clamped to the bank. For
    pra-neighbors events the aggressor row sits between low_row and high_row
    and is NOT refreshed; rows_covered() accounts for that.
    """

    bank: int
    low_row: int
    high_row: int
    cause: str
    timestamp_ns: int

    def __post_init__(self):
        if self.low_row > self.high_row:
            raise ValueError("low_row must be <= high_row")
        if self.cause not in REFRESH_CAUSES:
            raise ValueError(f"unknown refresh cause {self.cause!r}")

    def rows_covered(self) -> int:
        span = self.high_row - self.low_row + 1
        if self.cause == CAUSE_PRA_NEIGHBORS and span == 3:
            return 2  # two victims, aggressor in the middle excluded
        return span

    def covered_rows(self) -> Iterator[int]:
        if self.cause == CAUSE_PRA_NEIGHBORS and self.high_row - self.low_row == 2:
            yield self.low_row
            yield self.high_row
            return
        yield from range(self.low_row, self.high_row + 1)


@dataclass
class Trace:
    """An ordered, timestamped (bank, row) activation stream.

    Stored as parallel int64 arrays; metadata records provenance (generator
    name, seed, bank count, nominal inter-access gap).
    """

    timestamps: np.ndarray
    banks: np.ndarray
    rows: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.banks = np.asarray(self.banks, dtype=np.int64)
        self.rows = np.asarray(self.rows, dtype=np.int64)
        if not (len(self.timestamps) == len(self.banks) == len(self.rows)):
            raise ValueError("timestamps, banks and rows must have equal length")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __iter__(self) -> Iterator[AccessEvent]:
        for t, b, r in zip(self.timestamps, self.banks, self.rows):
            yield AccessEvent(int(t), int(b), int(r))

    @property
    def gap_ns(self) -> int:
        return int(self.meta.get("gap_ns", DEFAULT_GAP_NS))

    def bank_ids(self) -> list[int]:
        return sorted(int(b) for b in np.unique(self.banks))

    def for_bank(self, bank: int) -> "Trace":
        sel = self.banks == bank
        return Trace(self.timestamps[sel], self.banks[sel], self.rows[sel], dict(self.meta))

    def validate_rows(self, n_rows: int) -> None:
        if len(self) and int(self.rows.max()) >= n_rows:
            raise ConfigError(
                f"trace references row {int(self.rows.max())} outside [0, {n_rows})"
            )

    @classmethod
    def from_events(cls, events: list[AccessEvent] | list[tuple], meta: dict | None = None) -> "Trace":
        if events:
            ts, banks, rows = (np.array(col, dtype=np.int64) for col in zip(*events))
        else:
            ts = banks = rows = np.empty(0, dtype=np.int64)
        return cls(ts, banks, rows, meta or {})


def load_trace(source: IO[str] | IO[bytes] | str, gap_ns: int = DEFAULT_GAP_NS) -> Trace:
    """Parse the text trace format: one `<timestamp_ns> <bank> <row>` triple
    per line, ASCII decimal, `#` starts a comment. Two-field lines
    (`<bank> <row>`) are accepted for untimed traces; timestamps are then
    synthesized with a fixed gap_ns between accesses.

    Raises TraceFormatError with the line number for malformed lines and for
    timestamps that go backwards.
    """
    if isinstance(source, str):
        stream: IO = io.StringIO(source)
    else:
        stream = source
    ts_list: list[int] = []
    bank_list: list[int] = []
    row_list: list[int] = []
    synthesized = None
    prev_ts = None
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("ascii")
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) == 3:
            timed = True
        elif len(fields) == 2:
            timed = False
        else:
            raise TraceFormatError(f"expected 2 or 3 fields, got {len(fields)}", lineno)
        if synthesized is None:
            synthesized = not timed
        elif synthesized == timed:
            raise TraceFormatError("mixed timed and untimed lines", lineno)
        try:
            values = [int(f) for f in fields]
        except ValueError:
            raise TraceFormatError(f"non-integer field in {line!r}", lineno) from None
        if timed:
            ts, bank, row = values
        else:
            bank, row = values
            ts = len(ts_list) * gap_ns
        if bank < 0 or row < 0 or ts < 0:
            raise TraceFormatError("negative field", lineno)
        if prev_ts is not None and ts < prev_ts:
            raise TraceFormatError(
                f"timestamp {ts} decreases from {prev_ts}", lineno
            )
        prev_ts = ts
        ts_list.append(ts)
        bank_list.append(bank)
        row_list.append(row)
    meta = {"gap_ns": gap_ns} if synthesized else {}
    return Trace(
        np.array(ts_list, dtype=np.int64),
        np.array(bank_list, dtype=np.int64),
        np.array(row_list, dtype=np.int64),
        meta,
    )


def save_trace(trace: Trace, stream: IO[str]) -> None:
    """Write the text trace format (timestamped triples)."""
    for t, b, r in zip(trace.timestamps, trace.banks, trace.rows):
        stream.write(f"{int(t)} {int(b)} {int(r)}\n")


def dump_trace(trace: Trace) -> str:
    buf = io.StringIO()
    save_trace(trace, buf)
    return buf.getvalue()
