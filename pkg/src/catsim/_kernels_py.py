"""Pure-Python replay kernels.

Same call surface as the compiled extension (catsim._kernels); this path
drives the canonical policy classes, so it is the semantic reference the
extension is tested against. Selection happens in catsim.kernels.
"""

from __future__ import annotations

from .model import BankConfig
from .schemes import PrngHandle, make_policy
from .thresholds import SplitThresholds

COMPILED = False

# Event cause codes shared with the compiled kernel.
CODE_THRESHOLD_LEAF = 0
CODE_SCA_GROUP = 1
CODE_PRA_NEIGHBORS = 2
CODE_EPOCH_RESET = 3

_VARIANT_CODES = {0: "sca", 1: "pra", 2: "cat", 3: "prcat", 4: "drcat"}
_CAUSE_OF_VARIANT = {
    "sca": CODE_SCA_GROUP,
    "pra": CODE_PRA_NEIGHBORS,
    "cat": CODE_THRESHOLD_LEAF,
    "prcat": CODE_THRESHOLD_LEAF,
    "drcat": CODE_THRESHOLD_LEAF,
}


def replay(
    variant_code,
    timestamps,
    rows,
    n_rows,
    m_counters,
    max_levels,
    refresh_threshold,
    level_thresholds,
    presplit_levels,
    interval_ns,
    refresh_time_ns,
    pra_bits,
    pra_cut,
    prng_kind,
    prng_seed,
    lfsr_width,
    keep_events,
):
    """Replay one bank's accesses through one policy.

    Returns (stats, events); stats is a dict of plain ints, events a list of
    (timestamp_ns, low_row, high_row, cause_code, rows_counted) tuples.
    Delay accounting: an access arriving while the bank is busy refreshing
    accrues the residual busy time; the refresh a given access triggers never
    delays that same access.
    """
    variant = _VARIANT_CODES[int(variant_code)]
    cfg = BankConfig(
        n_rows=int(n_rows),
        m_counters=int(m_counters),
        max_levels=int(max_levels),
        refresh_threshold=int(refresh_threshold),
        presplit_levels=int(presplit_levels),
        refresh_interval_ns=int(interval_ns),
    )
    thresholds = None
    if variant in ("cat", "prcat", "drcat"):
        thresholds = SplitThresholds(
            tuple(int(v) for v in level_thresholds), first_level=0, source="custom"
        )
    prng = PrngHandle(
        kind="quality" if int(prng_kind) == 0 else "lfsr",
        seed=int(prng_seed),
        lfsr_width=int(lfsr_width),
    )
    # p only matters through (bits, cut); reconstruct any p in that bucket.
    policy = make_policy(variant, cfg, bank=0, thresholds=thresholds,
                         p=1.0, prng=prng)
    if variant == "pra":
        policy.draw_bits = int(pra_bits)
        policy.draw_cut = int(pra_cut)

    cause_code = _CAUSE_OF_VARIANT[variant]
    events = []
    refresh_events = 0
    rows_refreshed = 0
    delayed = 0
    total_delay = 0
    busy_until = 0
    epochs_seen = 1
    rows_by_epoch = [0]
    events_by_epoch = [0]

    for i in range(len(rows)):
        ts = int(timestamps[i])
        row = int(rows[i])
        epoch = ts // interval_ns if interval_ns > 0 else 0
        while epochs_seen <= epoch:
            boundary_ts = epochs_seen * interval_ns
            policy.observe(boundary_ts)
            if keep_events:
                events.append((boundary_ts, 0, n_rows - 1, CODE_EPOCH_RESET, 0))
            rows_by_epoch.append(0)
            events_by_epoch.append(0)
            epochs_seen += 1
        if ts < busy_until:
            delayed += 1
            total_delay += busy_until - ts
        ev = policy.access(row, ts)
        if ev is not None:
            n = ev.rows_covered()
            refresh_events += 1
            rows_refreshed += n
            rows_by_epoch[epoch] += n
            events_by_epoch[epoch] += 1
            start = ts if ts > busy_until else busy_until
            busy_until = start + n * refresh_time_ns
            if keep_events:
                events.append((ts, ev.low_row, ev.high_row, cause_code, n))

    stats = {
        "accesses": len(rows),
        "refresh_events": refresh_events,
        "rows_refreshed": rows_refreshed,
        "delayed_accesses": delayed,
        "total_delay_ns": total_delay,
        "epochs": epochs_seen,
        "rows_by_epoch": rows_by_epoch,
        "events_by_epoch": events_by_epoch,
    }
    return stats, events


def pra_windows(prng_kind, seed, lfsr_width, bits, cut, window_len, n_windows):
    """Count hammering windows of window_len draws that pass without a single
    refresh decision. Each window uses a fresh generator derived from the
    master seed (independent-trials model)."""
    failures = 0
    for w in range(int(n_windows)):
        handle = PrngHandle(
            kind="quality" if int(prng_kind) == 0 else "lfsr",
            seed=(int(seed) * 0x9E3779B97F4A7C15 + w) & ((1 << 64) - 1),
            lfsr_width=int(lfsr_width),
        )
        gen = handle.make()
        refreshed = False
        for _ in range(int(window_len)):
            if gen.next_bits(int(bits)) < int(cut):
                refreshed = True
                break
        if not refreshed:
            failures += 1
    return failures
