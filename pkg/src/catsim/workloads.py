"""Synthetic trace generators: uniform background, ratio-biased references,
kernel-attack mixes, and phase-shifting hotspots.

All generators are deterministic under a fixed seed, emit only rows inside
[0, n_rows), and interleave banks round-robin (bank b sees every banks-th
timestamp slot, so per-bank inter-access spacing is banks * gap_ns).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import DEFAULT_GAP_NS, ConfigError, Trace

KIND_UNIFORM = "uniform"
KIND_REFERENCE_RATIO = "reference_ratio"
KIND_GAUSSIAN_ATTACK = "gaussian_attack"
KIND_HOTSPOT_SHIFT = "hotspot_shift"

_KIND_ALIASES = {
    "uniform": KIND_UNIFORM,
    "biased": KIND_REFERENCE_RATIO,
    "reference-ratio": KIND_REFERENCE_RATIO,
    "reference_ratio": KIND_REFERENCE_RATIO,
    "gaussian-attack": KIND_GAUSSIAN_ATTACK,
    "gaussian_attack": KIND_GAUSSIAN_ATTACK,
    "mixed-attack": KIND_GAUSSIAN_ATTACK,
    "mixed_attack": KIND_GAUSSIAN_ATTACK,
    "hotspot-shift": KIND_HOTSPOT_SHIFT,
    "hotspot_shift": KIND_HOTSPOT_SHIFT,
}

# Attack intensity modes: fraction of accesses aimed at target rows.
ATTACK_MODES = {"heavy": 0.75, "medium": 0.50, "light": 0.25}


@dataclass(frozen=True)
class PhaseSpec:
    """One phase of a shifting workload: a hot block receiving the bias mass
    on top of a 2:1:0.5 backdrop over the remaining rows."""

    references: int
    hot_start: int
    hot_width: int
    bias_x: float


@dataclass(frozen=True)
class WorkloadSpec:
    kind: str
    n_rows: int = 65536
    references: int = 100_000
    banks: int = 1
    seed: int = 0
    gap_ns: int = DEFAULT_GAP_NS
    bias_x: float = 0.0
    attack_fraction: float = 0.75
    targets_per_bank: int = 4
    sigma: float | None = None  # default targets_per_bank / 2
    phases: tuple[PhaseSpec, ...] = field(default_factory=tuple)

    def normalized_kind(self) -> str:
        try:
            return _KIND_ALIASES[self.kind]
        except KeyError:
            raise ConfigError(f"unknown workload kind {self.kind!r}") from None


def _frame(spec: WorkloadSpec) -> tuple[np.ndarray, np.ndarray]:
    ts = np.arange(spec.references, dtype=np.int64) * spec.gap_ns
    banks = np.arange(spec.references, dtype=np.int64) % spec.banks
    return ts, banks


def _bank_rng(spec: WorkloadSpec, bank: int) -> np.random.Generator:
    return np.random.default_rng((spec.seed, bank))


def gen_uniform(spec: WorkloadSpec) -> Trace:
    """Rows i.i.d. uniform over [0, n_rows)."""
    ts, banks = _frame(spec)
    rows = np.zeros(spec.references, dtype=np.int64)
    for b in range(spec.banks):
        sel = banks == b
        rows[sel] = _bank_rng(spec, b).integers(0, spec.n_rows, int(sel.sum()))
    return Trace(ts, banks, rows, _meta(spec))


def _apportion(total: int, shares: list[float]) -> list[int]:
    """Largest-remainder apportionment; deterministic, sums to total."""
    s = sum(shares)
    quotas = [total * x / s for x in shares]
    counts = [math.floor(q) for q in quotas]
    remainder = total - sum(counts)
    order = sorted(range(len(shares)), key=lambda i: (counts[i] - quotas[i], i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts


def _ratio_sequence(n_rows: int, refs: int, regions: list[tuple[int, int]],
                    shares: list[float]) -> np.ndarray:
    """Deterministically interleaved rows hitting `regions` in proportion to
    `shares` (error-diffusion merge; group tallies exact). Within a region,
    emissions cycle over its rows."""
    counts = _apportion(refs, shares)
    group_seq = np.empty(refs, dtype=np.int64)
    pos_all = np.empty(refs, dtype=np.float64)
    grp_all = np.empty(refs, dtype=np.int64)
    k = 0
    for g, c in enumerate(counts):
        if c == 0:
            continue
        pos_all[k:k + c] = (np.arange(c) + 0.5) / c
        grp_all[k:k + c] = g
        k += c
    order = np.lexsort((grp_all[:k], pos_all[:k]))
    group_seq = grp_all[:k][order]
    rows = np.empty(refs, dtype=np.int64)
    emitted = [0] * len(regions)
    # Per-group emission index via cumulative counting.
    for g, (start, width) in enumerate(regions):
        sel = group_seq == g
        idx = np.arange(int(sel.sum()), dtype=np.int64)
        rows[sel] = (start + (idx % width)) % n_rows
        emitted[g] = len(idx)
    return rows


def _phase_rows(n_rows: int, refs: int, hot_start: int, hot_width: int,
                bias_x: float) -> np.ndarray:
    """Rows for one biased phase: the hot block draws x + w/2 references
    where w = n_rows / 4; the remaining rows form three backdrop regions in
    a 2w : w : w/2 ratio, laid out after the hot block (wrapping)."""
    if not 0 < hot_width <= n_rows:
        raise ConfigError("hot_width must be in (0, n_rows]")
    if not 0 <= hot_start < n_rows:
        raise ConfigError("hot_start must be inside the bank")
    w = n_rows / 4.0
    rest = n_rows - hot_width
    w1 = rest * 4 // 7
    w2 = rest * 2 // 7
    w3 = rest - w1 - w2
    base = (hot_start + hot_width) % n_rows
    regions = [
        (base, max(w1, 1)),
        ((base + w1) % n_rows, max(w2, 1)),
        ((base + w1 + w2) % n_rows, max(w3, 1)),
        (hot_start, hot_width),
    ]
    shares = [2.0 * w, w, 0.5 * w, bias_x + 0.5 * w]
    if rest == 0:
        regions = [regions[-1]]
        shares = [shares[-1]]
    return _ratio_sequence(n_rows, refs, regions, shares)


def gen_reference_ratio(spec: WorkloadSpec) -> Trace:
    """The canonical biased trace: four contiguous regions spanning
    N/2, N/4, N/8 and N/8 rows catching references in the ratio
    2w : w : w/2 : (x + w/2), hot region last."""
    ts, banks = _frame(spec)
    rows = np.zeros(spec.references, dtype=np.int64)
    for b in range(spec.banks):
        sel = banks == b
        rows[sel] = _phase_rows(
            spec.n_rows, int(sel.sum()), spec.n_rows * 7 // 8, spec.n_rows // 8,
            spec.bias_x,
        )
    return Trace(ts, banks, rows, _meta(spec))


def gen_gaussian_attack(spec: WorkloadSpec) -> Trace:
    """Kernel-attack mix: per bank, a few uniformly chosen target rows are
    hammered with discretized-normal weighting (sigma defaults to half the
    target count), interleaved per access with a uniform benign background."""
    if spec.targets_per_bank < 1:
        raise ConfigError("targets_per_bank must be >= 1")
    if not 0.0 <= spec.attack_fraction <= 1.0:
        raise ConfigError("attack_fraction must be in [0, 1]")
    sigma = spec.sigma if spec.sigma is not None else spec.targets_per_bank / 2.0
    k = np.arange(spec.targets_per_bank, dtype=np.float64)
    weights = np.exp(-(k**2) / (2.0 * sigma * sigma))
    weights /= weights.sum()
    ts, banks = _frame(spec)
    rows = np.zeros(spec.references, dtype=np.int64)
    targets_by_bank = {}
    for b in range(spec.banks):
        sel = banks == b
        n_b = int(sel.sum())
        rng = _bank_rng(spec, b)
        targets = rng.choice(spec.n_rows, size=spec.targets_per_bank, replace=False)
        targets_by_bank[b] = [int(t) for t in targets]
        attack = rng.random(n_b) < spec.attack_fraction
        n_att = int(attack.sum())
        picks = rng.choice(spec.targets_per_bank, size=n_att, p=weights)
        bank_rows = rng.integers(0, spec.n_rows, n_b)
        bank_rows[attack] = targets[picks]
        rows[sel] = bank_rows
    meta = _meta(spec)
    meta["targets_by_bank"] = targets_by_bank
    meta["sigma"] = sigma
    return Trace(ts, banks, rows, meta)


def gen_hotspot_shift(spec: WorkloadSpec) -> Trace:
    """Concatenated biased phases with distinct hot blocks. A single phase
    with hot block [7N/8, N) is exactly the reference-ratio trace."""
    if not spec.phases:
        raise ConfigError("hotspot_shift needs at least one phase")
    total = sum(p.references for p in spec.phases)
    if total != spec.references:
        raise ConfigError("phase references must sum to the spec total")
    ts, banks = _frame(spec)
    rows = np.zeros(spec.references, dtype=np.int64)
    for b in range(spec.banks):
        sel = np.flatnonzero(banks == b)
        cursor = 0
        done = 0
        for phase in spec.phases:
            phase_sel = sel[(sel >= cursor) & (sel < cursor + phase.references)]
            rows[phase_sel] = _phase_rows(
                spec.n_rows, len(phase_sel), phase.hot_start, phase.hot_width,
                phase.bias_x,
            )
            cursor += phase.references
            done += len(phase_sel)
    return Trace(ts, banks, rows, _meta(spec))


def _meta(spec: WorkloadSpec) -> dict:
    return {
        "generator": spec.normalized_kind(),
        "seed": spec.seed,
        "banks": spec.banks,
        "gap_ns": spec.gap_ns,
    }


def generate(spec: WorkloadSpec) -> Trace:
    kind = spec.normalized_kind()
    if kind == KIND_UNIFORM:
        return gen_uniform(spec)
    if kind == KIND_REFERENCE_RATIO:
        return gen_reference_ratio(spec)
    if kind == KIND_GAUSSIAN_ATTACK:
        return gen_gaussian_attack(spec)
    if kind == KIND_HOTSPOT_SHIFT:
        return gen_hotspot_shift(spec)
    raise ConfigError(f"unknown workload kind {spec.kind!r}")
