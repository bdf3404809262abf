"""Trace replay, refresh/energy/delay accounting, CMRPO and ETO metrics.

Replays a trace through one mitigation policy per bank, merges per-bank
statistics, and prices the result against a per-bank hardware energy table:

* CMRPO: mitigation power (counter dynamic + static + victim refreshes, plus
  the PRNG draw for PRA) relative to the 2.5 mW regular auto-refresh power.
* ETO: bank-busy delay proxy; accesses arriving during a victim refresh
  accrue its residual time. Comparisons are meaningful across schemes, not
  against absolute pipeline measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import BankConfig, ConfigError, RefreshEvent, Trace, validate_config
from .schemes import PRNG_LFSR, PRNG_QUALITY, PrngHandle, pra_draw_params
from .thresholds import SplitThresholds, resolve_thresholds

BASELINE_REFRESH_MW = 2.5
ROW_REFRESH_NJ = 1.0
PRA_PRNG_NJ_PER_ACCESS = 2.625e-2  # 9 random bits per access
PRA_PRNG_BITS = 9
DEFAULT_ROW_REFRESH_TIME_NS = 50

# Per-bank energy table: (scheme, counters) -> (dynamic nJ per row access,
# static nJ per refresh interval). The plain adaptive tree prices as the
# periodically reset variant (same hardware).
_ENERGY_ROWS = {
    ("drcat", 32): (3.05e-4, 5.77e3),
    ("drcat", 64): (4.30e-4, 1.39e4),
    ("drcat", 128): (5.83e-4, 2.77e4),
    ("drcat", 256): (8.72e-4, 5.44e4),
    ("drcat", 512): (1.17e-3, 1.06e5),
    ("prcat", 32): (2.91e-4, 5.55e3),
    ("prcat", 64): (4.09e-4, 1.32e4),
    ("prcat", 128): (5.50e-4, 2.63e4),
    ("prcat", 256): (8.25e-4, 5.13e4),
    ("prcat", 512): (1.10e-3, 1.02e5),
    ("sca", 32): (1.41e-4, 3.16e3),
    ("sca", 64): (1.92e-4, 8.81e3),
    ("sca", 128): (2.22e-4, 1.44e4),
    ("sca", 256): (3.12e-4, 2.39e4),
    ("sca", 512): (4.25e-4, 4.52e4),
}


@dataclass(frozen=True)
class EnergyModel:
    """Energy constants used by the CMRPO computation."""

    table: dict = field(default_factory=lambda: dict(_ENERGY_ROWS))
    row_refresh_nj: float = ROW_REFRESH_NJ
    prng_nj_per_access: float = PRA_PRNG_NJ_PER_ACCESS
    baseline_refresh_mw: float = BASELINE_REFRESH_MW

    def lookup(self, scheme: str, m_counters: int) -> tuple[float, float]:
        key = ("prcat" if scheme == "cat" else scheme, m_counters)
        if scheme == "pra":
            return 0.0, 0.0
        if key not in self.table:
            raise ConfigError(f"no energy row for scheme={scheme}, M={m_counters}")
        return self.table[key]


DEFAULT_ENERGY = EnergyModel()


@dataclass(frozen=True)
class PolicySpec:
    """A scheme plus the knobs it needs; unset values inherit BankConfig."""

    variant: str
    label: str = ""
    m_counters: int | None = None
    max_levels: int | None = None
    presplit_levels: int | None = None
    thresholds_source: str = "auto"
    thresholds: SplitThresholds | None = None
    p: float = 0.002
    prng_kind: str = PRNG_QUALITY
    lfsr_width: int = 32
    seed: int = 0

    def name(self) -> str:
        return self.label or self.variant

    def bank_config(self, cfg: BankConfig) -> BankConfig:
        return BankConfig(
            n_rows=cfg.n_rows,
            m_counters=self.m_counters or cfg.m_counters,
            max_levels=self.max_levels or cfg.max_levels,
            refresh_threshold=cfg.refresh_threshold,
            presplit_levels=self.presplit_levels or cfg.presplit_levels,
            refresh_interval_ns=cfg.refresh_interval_ns,
        )

    def resolve_thresholds(self, cfg: BankConfig, table: dict | None = None) -> SplitThresholds | None:
        if self.variant in ("sca", "pra"):
            return None
        if self.thresholds is not None:
            return self.thresholds
        eff = self.bank_config(cfg)
        return resolve_thresholds(
            eff.m_counters, eff.max_levels, eff.refresh_threshold,
            source=self.thresholds_source, table=table,
        )


@dataclass
class Metrics:
    """Accumulated refresh/energy/delay statistics for one run."""

    scheme: str
    m_counters: int
    accesses: int = 0
    refresh_events: int = 0
    rows_refreshed: int = 0
    epochs: int = 0
    sim_time_ns: int = 0
    delayed_accesses: int = 0
    total_delay_ns: int = 0
    cmrpo: float = 0.0
    eto: float = 0.0
    rows_by_epoch: list = field(default_factory=list)
    events_by_epoch: list = field(default_factory=list)
    banks: int = 1
    threshold_source: str = ""
    row_refresh_time_ns: int = DEFAULT_ROW_REFRESH_TIME_NS
    refresh_interval_ns: int = 64_000_000

    def as_row(self) -> dict:
        return {
            "scheme": self.scheme,
            "m_counters": self.m_counters,
            "banks": self.banks,
            "accesses": self.accesses,
            "refresh_events": self.refresh_events,
            "rows_refreshed": self.rows_refreshed,
            "epochs": self.epochs,
            "sim_time_ns": self.sim_time_ns,
            "delayed_accesses": self.delayed_accesses,
            "total_delay_ns": self.total_delay_ns,
            "cmrpo": self.cmrpo,
            "eto": self.eto,
            "threshold_source": self.threshold_source,
        }


def _sim_time_ns(trace: Trace, cfg: BankConfig) -> int:
    """Trace span plus one nominal gap, padded to a full refresh interval so
    static power is always defined."""
    if len(trace) == 0:
        return cfg.refresh_interval_ns
    span = int(trace.timestamps[-1]) - int(trace.timestamps[0]) + trace.gap_ns
    return max(span, cfg.refresh_interval_ns)


def run(
    trace: Trace,
    spec: PolicySpec,
    cfg: BankConfig,
    energy: EnergyModel = DEFAULT_ENERGY,
    row_refresh_time_ns: int = DEFAULT_ROW_REFRESH_TIME_NS,
    keep_events: bool = False,
    threshold_table: dict | None = None,
    compiled: bool | None = None,
) -> tuple[Metrics, list[RefreshEvent]]:
    """Replay the trace (demultiplexed per bank) through the scheme.

    Returns (metrics, events); events is empty unless keep_events. Events
    carry the originating bank and are ordered by bank, then time.
    """
    eff = validate_config(spec.bank_config(cfg))
    trace.validate_rows(eff.n_rows)
    thresholds = spec.resolve_thresholds(cfg, threshold_table)
    level_thresholds = (
        np.array(thresholds.as_level_array(eff.max_levels), dtype=np.int64)
        if thresholds is not None
        else np.zeros(eff.max_levels, dtype=np.int64)
    )
    pra_bits, pra_cut = pra_draw_params(spec.p) if spec.variant == "pra" else (0, 0)
    prng_code = 0 if spec.prng_kind == PRNG_QUALITY else 1
    if spec.prng_kind not in (PRNG_QUALITY, PRNG_LFSR):
        raise ConfigError(f"unknown prng kind {spec.prng_kind!r}")

    metrics = Metrics(
        scheme=spec.name(),
        m_counters=eff.m_counters,
        sim_time_ns=_sim_time_ns(trace, eff),
        threshold_source=thresholds.source if thresholds is not None else "",
        row_refresh_time_ns=row_refresh_time_ns,
        refresh_interval_ns=eff.refresh_interval_ns,
    )
    all_events: list[RefreshEvent] = []
    bank_ids = trace.bank_ids() or [0]
    metrics.banks = len(bank_ids)
    for bank in bank_ids:
        sub = trace.for_bank(bank)
        stats, events = kernels.replay(
            kernels.VARIANT_CODES[spec.variant],
            sub.timestamps,
            sub.rows,
            eff.n_rows,
            eff.m_counters,
            eff.max_levels,
            eff.refresh_threshold,
            level_thresholds,
            eff.presplit_levels,
            eff.refresh_interval_ns,
            row_refresh_time_ns,
            pra_bits,
            pra_cut,
            prng_code,
            (spec.seed * 1_000_003 + bank) & ((1 << 63) - 1),
            spec.lfsr_width,
            keep_events,
            compiled=compiled,
        )
        metrics.accesses += stats["accesses"]
        metrics.refresh_events += stats["refresh_events"]
        metrics.rows_refreshed += stats["rows_refreshed"]
        metrics.delayed_accesses += stats["delayed_accesses"]
        metrics.total_delay_ns += stats["total_delay_ns"]
        metrics.epochs = max(metrics.epochs, stats["epochs"])
        for e, v in enumerate(stats["rows_by_epoch"]):
            if e >= len(metrics.rows_by_epoch):
                metrics.rows_by_epoch.append(0)
                metrics.events_by_epoch.append(0)
            metrics.rows_by_epoch[e] += v
            metrics.events_by_epoch[e] += stats["events_by_epoch"][e]
        if keep_events:
            for ts, low, high, code, _ in events:
                all_events.append(
                    RefreshEvent(bank, low, high, kernels.CAUSE_OF_CODE[code], ts)
                )
    try:
        metrics.cmrpo = cmrpo(metrics, energy, spec.variant, eff.m_counters)
    except ConfigError:
        # Toy configurations outside the hardware table still simulate; only
        # the power ratio is undefined. The CLI validates pairs up front.
        metrics.cmrpo = float("nan")
    metrics.eto = eto(metrics, row_refresh_time_ns)
    return metrics, all_events


def cmrpo(metrics: Metrics, energy: EnergyModel, scheme: str, m_counters: int) -> float:
    """Mitigation power over baseline refresh power.

    Components (nJ/ns == W): dynamic counter energy per access times the
    access rate, static energy per interval over the interval, and one
    row-refresh energy per refreshed row over the run time. PRA adds its
    per-access random-bit energy.
    """
    if metrics.sim_time_ns <= 0:
        raise ConfigError("sim_time is zero; rates undefined")
    dyn_nj, static_nj = energy.lookup(scheme, m_counters)
    p_dyn = dyn_nj * metrics.accesses / metrics.sim_time_ns
    if scheme == "pra":
        p_dyn += energy.prng_nj_per_access * metrics.accesses / metrics.sim_time_ns
    p_static = static_nj / metrics.refresh_interval_ns
    p_refresh = energy.row_refresh_nj * metrics.rows_refreshed / metrics.sim_time_ns
    baseline_w = energy.baseline_refresh_mw * 1e-3  # mW -> W == nJ/ns
    return (p_dyn + p_static + p_refresh) / baseline_w


def cmrpo_components(metrics: Metrics, energy: EnergyModel, scheme: str, m_counters: int) -> dict:
    dyn_nj, static_nj = energy.lookup(scheme, m_counters)
    p_dyn = dyn_nj * metrics.accesses / metrics.sim_time_ns
    if scheme == "pra":
        p_dyn += energy.prng_nj_per_access * metrics.accesses / metrics.sim_time_ns
    return {
        "dynamic_w": p_dyn,
        "static_w": static_nj / metrics.refresh_interval_ns,
        "refresh_w": energy.row_refresh_nj * metrics.rows_refreshed / metrics.sim_time_ns,
        "baseline_w": energy.baseline_refresh_mw * 1e-3,
    }


def eto(metrics: Metrics, row_refresh_time_ns: int | None = None) -> float:
    """Execution-time overhead proxy: stalled time over run time."""
    if row_refresh_time_ns is not None and row_refresh_time_ns != metrics.row_refresh_time_ns:
        raise ConfigError(
            "delay accounting ran with a different row_refresh_time_ns; re-run"
        )
    if metrics.sim_time_ns <= 0:
        return 0.0
    return metrics.total_delay_ns / metrics.sim_time_ns


def compare(
    specs: list[PolicySpec],
    trace: Trace,
    cfg: BankConfig,
    energy: EnergyModel = DEFAULT_ENERGY,
    row_refresh_time_ns: int = DEFAULT_ROW_REFRESH_TIME_NS,
    threshold_table: dict | None = None,
    compiled: bool | None = None,
) -> list[Metrics]:
    """Run every scheme on the identical trace and collect per-scheme rows."""
    results = []
    for spec in specs:
        metrics, _ = run(
            trace, spec, cfg, energy,
            row_refresh_time_ns=row_refresh_time_ns,
            threshold_table=threshold_table,
            compiled=compiled,
        )
        results.append(metrics)
    return results
