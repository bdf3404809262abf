"""Split-threshold selection and the analytic refresh-cost model.

A tree of L levels uses one threshold per level: a leaf at level l subdivides
when its counter reaches the level's split threshold, except at the deepest
level where the threshold is the refresh threshold T itself and reaching it
refreshes the leaf's rows.

Published values exist only for a handful of configurations; everything else
goes through a clearly tagged heuristic generator (successive halving from T)
or a user-supplied table, never a silent guess.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

SOURCE_PUBLISHED = "published"
SOURCE_HEURISTIC = "heuristic"
SOURCE_FILE = "file"
SOURCE_CUSTOM = "custom"

# Published split thresholds for 64 counters, 10 levels, T = 32768. The
# values cover levels 5..9 because that configuration starts from a complete
# 6-level tree; there is no published rule for shallower levels.
_PUBLISHED_64_10_32768 = (5155, 10309, 12886, 16384, 32768)


class UnsupportedConfigError(ValueError):
    """No published split-threshold values exist for this configuration."""


@dataclass(frozen=True)
class SplitThresholds:
    """Per-level split thresholds for levels first_level..first_level+len-1.

    The final entry always equals the refresh threshold T; values are
    non-decreasing. A tree may only use this table if its pre-split depth
    puts every initial leaf at a level >= first_level.
    """

    values: tuple[int, ...]
    first_level: int = 0
    source: str = SOURCE_CUSTOM
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.values:
            raise ValueError("thresholds must not be empty")
        if any(v <= 0 for v in self.values):
            raise ValueError("thresholds must be positive")
        if any(a > b for a, b in zip(self.values, self.values[1:])):
            raise ValueError("thresholds must be non-decreasing")
        if self.first_level < 0:
            raise ValueError("first_level must be non-negative")

    @property
    def last_level(self) -> int:
        return self.first_level + len(self.values) - 1

    @property
    def refresh_threshold(self) -> int:
        return self.values[-1]

    def for_level(self, level: int) -> int:
        if level < self.first_level or level > self.last_level:
            raise IndexError(f"no threshold defined for level {level}")
        return self.values[level - self.first_level]

    def as_level_array(self, max_levels: int) -> list[int]:
        """Full per-level list of length max_levels. Levels below first_level
        are padded with the first value; a tree whose pre-split depth honors
        first_level never consults them."""
        if self.last_level != max_levels - 1:
            raise ValueError(
                f"thresholds end at level {self.last_level}, tree needs {max_levels - 1}"
            )
        return [
            self.values[max(0, lvl - self.first_level)] for lvl in range(max_levels)
        ]


def paper_thresholds(m_counters: int, max_levels: int, refresh_threshold: int) -> SplitThresholds:
    """Published split-threshold values for the supported configurations.

    Supported: (64, 10, 32768) exactly; the 4-counter, 3-threshold pattern
    [T/4, T/2, T]; and the 2-counter single split point [T/2, T]. Anything
    else raises UnsupportedConfigError so callers fall back explicitly to
    heuristic_thresholds or a table file.
    """
    t = refresh_threshold
    if (m_counters, max_levels, t) == (64, 10, 32768):
        return SplitThresholds(_PUBLISHED_64_10_32768, first_level=5, source=SOURCE_PUBLISHED)
    if (m_counters, max_levels) == (4, 3) and t % 4 == 0:
        return SplitThresholds((t // 4, t // 2, t), first_level=0, source=SOURCE_PUBLISHED)
    if (m_counters, max_levels) == (2, 2) and t % 2 == 0:
        return SplitThresholds((t // 2, t), first_level=0, source=SOURCE_PUBLISHED)
    raise UnsupportedConfigError(
        f"no published thresholds for M={m_counters}, L={max_levels}, T={t}; "
        "use heuristic_thresholds or supply a table"
    )


def heuristic_thresholds(m_counters: int, max_levels: int, refresh_threshold: int) -> SplitThresholds:
    """Successive-halving heuristic: level l gets max(1, T >> (L-1-l)).

    This keeps the documented anchors (last value T, second-to-last T/2, the
    two shallowest values doubling) and reproduces the published 4-counter
    pattern exactly. It is tagged heuristic so experiment outputs record the
    provenance.
    """
    t = refresh_threshold
    values = tuple(max(1, t >> (max_levels - 1 - lvl)) for lvl in range(max_levels))
    return SplitThresholds(
        values,
        first_level=0,
        source=SOURCE_HEURISTIC,
        meta={"rule": "halving", "m_counters": m_counters},
    )


def resolve_thresholds(
    m_counters: int,
    max_levels: int,
    refresh_threshold: int,
    source: str = "auto",
    table: dict | None = None,
) -> SplitThresholds:
    """Pick thresholds: explicit table entry, then published, then heuristic
    (source='auto'); or force one source."""
    key = (m_counters, max_levels, refresh_threshold)
    if table and key in table:
        values = tuple(table[key])
        return SplitThresholds(values, first_level=max_levels - len(values), source=SOURCE_FILE)
    if source == SOURCE_PUBLISHED:
        return paper_thresholds(*key)
    if source == SOURCE_HEURISTIC:
        return heuristic_thresholds(*key)
    if source == "auto":
        try:
            return paper_thresholds(*key)
        except UnsupportedConfigError:
            return heuristic_thresholds(*key)
    raise ValueError(f"unknown thresholds source {source!r}")


def load_threshold_table(path: str) -> dict[tuple[int, int, int], list[int]]:
    """Load a JSON table mapping "M,L,T" keys to threshold value lists."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    table: dict[tuple[int, int, int], list[int]] = {}
    for key, values in raw.items():
        m, l, t = (int(part) for part in key.split(","))
        if not isinstance(values, list) or not all(isinstance(v, int) for v in values):
            raise ValueError(f"threshold table entry {key!r} must be a list of integers")
        table[(m, l, t)] = values
    return table


# ---------------------------------------------------------------------------
# Analytic refresh-cost model for the 4-counter configuration: a bank's rows
# are covered by counters catching references in the ratio 2w : w : w/2 :
# (x + w/2), where w = N/4 and x biases the hot group.


@dataclass(frozen=True)
class CostInputs:
    w: float  # rows per unit group (N/4 in the 4-counter setting)
    r: float  # references per refresh interval
    t: float  # refresh threshold
    x: float = 0.0  # extra references drawn by the hot group

    def __post_init__(self):
        if self.w <= 0 or self.r < 0 or self.t <= 0:
            raise ValueError("w and t must be positive, r non-negative")
        if self.x < 0:
            raise ValueError("bias x must be non-negative")


def cost_sca(inputs: CostInputs) -> float:
    """Expected refreshed rows for a uniform 4-group assignment: w * R / T."""
    return inputs.w * inputs.r / inputs.t


def cost_cat(inputs: CostInputs) -> float:
    """Expected refreshed rows for the unbalanced tree whose groups span
    2w, w, w/2 and w/2 rows and catch 2w : w : w/2 : (x + w/2) references."""
    w, r, t, x = inputs.w, inputs.r, inputs.t, inputs.x
    alpha = r / (x + 4.0 * w)
    bracket = (2.0 * w) ** 2 + w**2 + (w / 2.0) ** 2 + (x + w / 2.0) * (w / 2.0)
    return bracket * alpha / t


def critical_bias(w: float) -> float:
    """Bias above which the unbalanced tree refreshes fewer rows than the
    uniform assignment: cost_cat < cost_sca iff x > 3w."""
    if w <= 0:
        raise ValueError("w must be positive")
    return 3.0 * w
