"""Adaptive counter tree over a compact intermediate-node / counter-table
encoding.

Rows of a bank are partitioned by a binary tree whose leaves are counters.
Interior nodes store only child indices plus leaf flags; a counter's row
range is implied by its position and recovered during traversal from the
address bits, so no per-counter range registers are kept. The tree starts as
a complete binary tree of `presplit_levels` levels, and a small direct-index
table over the top address bits lets a lookup land at that depth in one step.

A leaf at level l splits (activates a clone counter for the upper half of its
range) when its count reaches the level's split threshold; at the deepest
level the threshold is the refresh threshold and reaching it emits a victim
refresh over the leaf's range widened by one row on each side. Once every
counter is active, all levels are forced to the deepest so every threshold
becomes the refresh threshold and growth stops.

Weight registers (2 bits per counter) support dynamic reconfiguration: after
the tree is fully built, each refresh bumps the refreshing counter's weight
and decays all others; a counter saturating its weight steals a counter from
a cold region (merging two zero-weight sibling leaves) and splits its own
range deeper.
"""

from __future__ import annotations

import heapq
from typing import Iterator, NamedTuple

from .model import BankConfig, validate_config
from .thresholds import SplitThresholds

WEIGHT_CAP = 3


class TreeCorruptionError(RuntimeError):
    """A child reference points outside the live node/counter tables."""


class LeafHit(NamedTuple):
    """Result of resolving a row to its covering leaf counter."""

    counter: int
    low: int
    high: int
    depth: int
    parent: int  # interior node index, -1 when the leaf hangs off the root
    side: int  # 0 left, 1 right (meaningless when parent == -1)
    hops: int  # table entries consulted, including the direct-index landing


class RefreshHit(NamedTuple):
    """A leaf counter reached the refresh threshold."""

    counter: int
    low_row: int  # clamped, includes one victim row below the range
    high_row: int  # clamped, includes one victim row above the range


class CatTree:
    """One bank's adaptive counter tree."""

    def __init__(self, cfg: BankConfig, thresholds: SplitThresholds):
        validate_config(cfg)
        if thresholds.last_level != cfg.max_levels - 1:
            raise ValueError(
                f"thresholds cover levels up to {thresholds.last_level}, "
                f"tree needs level {cfg.max_levels - 1}"
            )
        if thresholds.first_level > cfg.presplit_levels - 1:
            raise ValueError(
                f"thresholds start at level {thresholds.first_level} but the "
                f"pre-split leaves sit at level {cfg.presplit_levels - 1}"
            )
        if thresholds.refresh_threshold != cfg.refresh_threshold:
            raise ValueError("final threshold must equal the refresh threshold")
        self.cfg = cfg
        self.thresholds = thresholds
        self.n_rows = cfg.n_rows
        self.m = cfg.m_counters
        self.levels = cfg.max_levels
        self.row_bits = cfg.row_bits
        self.lam = cfg.presplit_levels
        self.level_threshold = thresholds.as_level_array(cfg.max_levels)

        # Interior node table (at most M-1 entries) and counter table.
        size_n = max(self.m - 1, 0)
        self.node_left = [0] * size_n
        self.node_right = [0] * size_n
        self.node_left_leaf = [False] * size_n
        self.node_right_leaf = [False] * size_n
        self.node_used = [False] * size_n
        self.count = [0] * self.m
        self.level = [0] * self.m
        self.weight = [0] * self.m
        self.active = [False] * self.m

        # Direct-index table over the top (lambda-1) address bits.
        self.fast_bits = self.lam - 1
        self.fast_shift = self.row_bits - self.fast_bits
        fast_n = 1 << self.fast_bits
        self.fast_child = [0] * fast_n
        self.fast_is_leaf = [True] * fast_n
        self.fast_depth = [0] * fast_n

        self.root_child = 0
        self.root_is_leaf = True
        self.last_activated = 0
        self.active_count = 0
        self.fully_built = False
        self._free_counters: list[int] = []
        self._free_nodes: list[int] = []
        self.reset()

    # -- construction -------------------------------------------------------

    def reset(self) -> None:
        """Rebuild the pre-split complete tree with all counts zero."""
        lam = self.lam
        init_leaves = 1 << (lam - 1)
        for i in range(len(self.node_used)):
            self.node_used[i] = False
        for c in range(self.m):
            self.count[c] = 0
            self.weight[c] = 0
            self.active[c] = c < init_leaves
            self.level[c] = lam - 1 if c < init_leaves else 0
        if lam >= 2:
            # Complete top levels laid out in breadth-first order: node j has
            # children 2j+1 and 2j+2 until the last interior level, whose
            # children are the initial counters in row order.
            top_nodes = init_leaves - 1
            for j in range(top_nodes):
                self.node_used[j] = True
                if 2 * j + 2 < top_nodes:
                    self.node_left[j] = 2 * j + 1
                    self.node_right[j] = 2 * j + 2
                    self.node_left_leaf[j] = False
                    self.node_right_leaf[j] = False
                else:
                    q = j - (top_nodes - 1) // 2  # position within last level
                    self.node_left[j] = 2 * q
                    self.node_right[j] = 2 * q + 1
                    self.node_left_leaf[j] = True
                    self.node_right_leaf[j] = True
            self.root_child = 0
            self.root_is_leaf = False
            self._free_nodes = list(range(top_nodes, self.m - 1))
        else:
            self.root_child = 0
            self.root_is_leaf = True
            self._free_nodes = list(range(self.m - 1))
        heapq.heapify(self._free_nodes)
        self._free_counters = list(range(init_leaves, self.m))
        heapq.heapify(self._free_counters)
        self.last_activated = init_leaves - 1
        self.active_count = init_leaves
        self.fully_built = self.m == 1
        if self.fully_built:
            self.level[0] = self.levels - 1
        for p in range(len(self.fast_child)):
            self.fast_child[p] = p if lam >= 2 else self.root_child
            self.fast_is_leaf[p] = True if lam >= 2 else self.root_is_leaf
            self.fast_depth[p] = lam - 1 if lam >= 2 else 0

    def zero_counts(self) -> None:
        """Zero every counter, keeping structure, levels and weights."""
        for c in range(self.m):
            self.count[c] = 0

    # -- lookup --------------------------------------------------------------

    def _descend(self, child: int, is_leaf: bool, depth: int, row: int, hops: int) -> LeafHit:
        parent = -1
        side = 0
        while not is_leaf:
            node = child
            if not (0 <= node < self.m - 1) or not self.node_used[node]:
                raise TreeCorruptionError(f"dangling interior reference {node}")
            bit = (row >> (self.row_bits - 1 - depth)) & 1
            parent = node
            side = bit
            if bit:
                child = self.node_right[node]
                is_leaf = self.node_right_leaf[node]
            else:
                child = self.node_left[node]
                is_leaf = self.node_left_leaf[node]
            depth += 1
            hops += 1
        if not (0 <= child < self.m) or not self.active[child]:
            raise TreeCorruptionError(f"dangling counter reference {child}")
        width = 1 << (self.row_bits - depth)
        low = row & ~(width - 1)
        return LeafHit(child, low, low + width - 1, depth, parent, side, hops)

    def _hit(self, row: int) -> LeafHit:
        p = row >> self.fast_shift
        return self._descend(
            self.fast_child[p], self.fast_is_leaf[p], self.fast_depth[p], row, 1
        )

    def locate(self, row: int) -> int:
        """Index of the active counter whose range contains row."""
        if not 0 <= row < self.n_rows:
            raise ValueError(f"row {row} outside [0, {self.n_rows})")
        return self._hit(row).counter

    def locate_with_hops(self, row: int) -> tuple[int, int]:
        hit = self._hit(row)
        return hit.counter, hit.hops

    # -- growth --------------------------------------------------------------

    def _set_child(self, parent: int, side: int, child: int, is_leaf: bool) -> None:
        if parent < 0:
            self.root_child = child
            self.root_is_leaf = is_leaf
        elif side:
            self.node_right[parent] = child
            self.node_right_leaf[parent] = is_leaf
        else:
            self.node_left[parent] = child
            self.node_left_leaf[parent] = is_leaf

    def _refresh_fast_range(self, low: int, high: int) -> None:
        """Recompute direct-index entries covering [low, high] after a
        structural change at a depth the table can see."""
        for p in range(low >> self.fast_shift, (high >> self.fast_shift) + 1):
            row = p << self.fast_shift
            child, is_leaf, depth = self.root_child, self.root_is_leaf, 0
            while not is_leaf and depth < self.fast_bits:
                bit = (row >> (self.row_bits - 1 - depth)) & 1
                if bit:
                    is_leaf = self.node_right_leaf[child]
                    child = self.node_right[child]
                else:
                    is_leaf = self.node_left_leaf[child]
                    child = self.node_left[child]
                depth += 1
            self.fast_child[p] = child
            self.fast_is_leaf[p] = is_leaf
            self.fast_depth[p] = depth

    def _resolve_parent(self, hit: LeafHit) -> tuple[int, int]:
        """The direct-index table can land on a leaf without visiting its
        parent; structural edits need the true parent slot."""
        if hit.parent >= 0 or (self.root_is_leaf and self.root_child == hit.counter):
            return hit.parent, hit.side
        child, is_leaf, depth = self.root_child, self.root_is_leaf, 0
        parent, side = -1, 0
        while not is_leaf:
            bit = (hit.low >> (self.row_bits - 1 - depth)) & 1
            parent, side = child, bit
            if bit:
                is_leaf = self.node_right_leaf[child]
                child = self.node_right[child]
            else:
                is_leaf = self.node_left_leaf[child]
                child = self.node_left[child]
            depth += 1
        if child != hit.counter:
            raise TreeCorruptionError("parent walk reached a different leaf")
        return parent, side

    def _split_at(self, hit: LeafHit, child_level: int) -> int:
        """Activate a clone counter for the upper half of the leaf's range.

        The old counter keeps the lower half. Returns the new counter index.
        """
        if not self._free_counters:
            raise RuntimeError("split requires an inactive counter")
        if hit.depth >= self.levels - 1:
            raise RuntimeError("split would exceed the level limit")
        parent, side = self._resolve_parent(hit)
        old = hit.counter
        new = heapq.heappop(self._free_counters)
        node = heapq.heappop(self._free_nodes)
        self.node_left[node] = old
        self.node_right[node] = new
        self.node_left_leaf[node] = True
        self.node_right_leaf[node] = True
        self.node_used[node] = True
        self.count[new] = self.count[old]
        self.level[old] = child_level
        self.level[new] = child_level
        self.weight[new] = self.weight[old]
        self.active[new] = True
        self._set_child(parent, side, node, False)
        self.active_count += 1
        if new > self.last_activated:
            self.last_activated = new
        if hit.depth <= self.fast_bits:
            self._refresh_fast_range(hit.low, hit.high)
        if self.active_count == self.m and not self.fully_built:
            self.fully_built = True
            top = self.levels - 1
            for c in range(self.m):
                self.level[c] = top
        return new

    def split(self, leaf: int) -> int:
        """Public split of an active leaf counter (callers must have checked
        that a free counter exists and the depth limit allows it)."""
        hit = self.find_counter(leaf)
        return self._split_at(hit, self.level[leaf] + 1 if not self.fully_built else self.levels - 1)

    def record_access(self, row: int) -> RefreshHit | None:
        """Count one activation of row; may grow the tree or emit a refresh.

        Each access is counted exactly once: a split clones the current
        count into the new counter, and the refresh path resets the count.
        """
        hit = self._hit(row)
        c = hit.counter
        self.count[c] += 1
        if self.count[c] < self.level_threshold[self.level[c]]:
            return None
        if self.level[c] < self.levels - 1:
            self._split_at(hit, self.level[c] + 1)
            return None
        self.count[c] = 0
        return RefreshHit(c, max(hit.low - 1, 0), min(hit.high + 1, self.n_rows - 1))

    # -- dynamic reconfiguration ----------------------------------------------

    def on_threshold_refresh(self, leaf: int) -> bool:
        """Weight bookkeeping after `leaf` emitted a refresh; reconfigures the
        tree when the leaf's weight saturates. Only meaningful once the tree
        is fully built; before that it is a no-op. Returns True when the
        structure changed."""
        if not self.fully_built:
            return False
        for c in range(self.m):
            if not self.active[c] or c == leaf:
                continue
            if self.weight[c] > 0:
                self.weight[c] -= 1
        if self.weight[leaf] < WEIGHT_CAP:
            self.weight[leaf] += 1
        if self.weight[leaf] < WEIGHT_CAP:
            return False
        hot = self.find_counter(leaf)
        if hot.depth >= self.levels - 1:
            return False
        candidate = self._find_merge_candidate()
        if candidate is None:
            return False
        self._merge(candidate)
        new = self._split_at(hot, self.levels - 1)
        self.weight[leaf] = 1
        self.weight[new] = 1
        return True

    def _find_merge_candidate(self) -> "NodeHit | None":
        """Lowest-index interior node whose children are both zero-weight
        leaves (a cold region whose counter can be reassigned)."""
        best: NodeHit | None = None
        for entry in self._iter_nodes():
            if entry.is_leaf:
                continue
            k = entry.index
            if not (self.node_left_leaf[k] and self.node_right_leaf[k]):
                continue
            if self.weight[self.node_left[k]] or self.weight[self.node_right[k]]:
                continue
            if best is None or k < best.index:
                best = entry
        return best

    def _merge(self, entry: "NodeHit") -> int:
        """Collapse an interior node whose children are both leaves: the
        lower-indexed counter slot is freed, the other is promoted into the
        node's position with the conservative max of the two counts."""
        k = entry.index
        ca, cb = self.node_left[k], self.node_right[k]
        freed, kept = (ca, cb) if ca < cb else (cb, ca)
        self.count[kept] = max(self.count[ca], self.count[cb])
        self.active[freed] = False
        self.count[freed] = 0
        self.weight[freed] = 0
        heapq.heappush(self._free_counters, freed)
        self.node_used[k] = False
        heapq.heappush(self._free_nodes, k)
        self._set_child(entry.parent, entry.side, kept, True)
        self.active_count -= 1
        if entry.depth <= self.fast_bits:
            self._refresh_fast_range(entry.low, entry.high)
        return freed

    # -- introspection ---------------------------------------------------------

    def _iter_nodes(self) -> Iterator["NodeHit"]:
        """Pre-order walk over interior nodes and leaves with ranges."""
        stack = [NodeHit(self.root_child, self.root_is_leaf, 0, self.n_rows - 1, 0, -1, 0)]
        seen = 0
        limit = 2 * self.m  # partition of n_rows can't have more entries
        while stack:
            entry = stack.pop()
            seen += 1
            if seen > limit:
                raise TreeCorruptionError("traversal exceeded structural bounds")
            yield entry
            if entry.is_leaf:
                continue
            k = entry.index
            if not (0 <= k < self.m - 1) or not self.node_used[k]:
                raise TreeCorruptionError(f"dangling interior reference {k}")
            mid = (entry.low + entry.high) // 2
            stack.append(
                NodeHit(self.node_right[k], self.node_right_leaf[k], mid + 1,
                        entry.high, entry.depth + 1, k, 1)
            )
            stack.append(
                NodeHit(self.node_left[k], self.node_left_leaf[k], entry.low,
                        mid, entry.depth + 1, k, 0)
            )

    def find_counter(self, counter: int) -> LeafHit:
        for entry in self._iter_nodes():
            if entry.is_leaf and entry.index == counter:
                return LeafHit(counter, entry.low, entry.high, entry.depth,
                               entry.parent, entry.side, 0)
        raise ValueError(f"counter {counter} is not an active leaf")

    def leaf_ranges(self) -> list[tuple[int, int, int, int]]:
        """In-order (counter, low, high, depth) covering [0, n_rows)."""
        leaves = [e for e in self._iter_nodes() if e.is_leaf]
        leaves.sort(key=lambda e: e.low)
        return [(e.index, e.low, e.high, e.depth) for e in leaves]

    def dump(self) -> str:
        """Deterministic pre-order serialization, one node per line."""
        lines = []
        for e in self._iter_nodes():
            if e.is_leaf:
                c = e.index
                lines.append(
                    f"C{c} depth={e.depth} range=[{e.low},{e.high}] "
                    f"count={self.count[c]} level={self.level[c]} weight={self.weight[c]}"
                )
            else:
                k = e.index
                lfl = "C" if self.node_left_leaf[k] else "I"
                rfl = "C" if self.node_right_leaf[k] else "I"
                lines.append(
                    f"I{k} depth={e.depth} range=[{e.low},{e.high}] "
                    f"left={lfl}{self.node_left[k]} right={rfl}{self.node_right[k]}"
                )
        return "\n".join(lines) + "\n"

    def validate(self) -> None:
        """Raise if any structural invariant is broken (used heavily in tests)."""
        leaves = self.leaf_ranges()
        expected_low = 0
        for counter, low, high, depth in leaves:
            if low != expected_low:
                raise TreeCorruptionError("leaf ranges are not contiguous")
            width = high - low + 1
            if width != self.n_rows >> depth:
                raise TreeCorruptionError("leaf width does not match its depth")
            if depth > self.levels - 1:
                raise TreeCorruptionError("leaf deeper than the level limit")
            if not self.active[counter]:
                raise TreeCorruptionError("inactive counter linked as a leaf")
            # Clones born from equal adjacent thresholds may sit above their
            # own split threshold briefly, but never past this slack.
            if self.count[counter] > self.cfg.refresh_threshold + self.levels:
                raise TreeCorruptionError("counter exceeded the refresh threshold")
            expected_low = high + 1
        if expected_low != self.n_rows:
            raise TreeCorruptionError("leaf ranges do not cover the bank")
        if len(leaves) != self.active_count:
            raise TreeCorruptionError("active counter bookkeeping is off")
        interior = sum(1 for e in self._iter_nodes() if not e.is_leaf)
        if interior != len(leaves) - 1:
            raise TreeCorruptionError("interior node count != leaves - 1")
        for row0 in range(0, self.n_rows, max(1, self.n_rows // 64)):
            hit = self._hit(row0)
            if not (hit.low <= row0 <= hit.high):
                raise TreeCorruptionError("direct-index walk disagrees with range")


class NodeHit(NamedTuple):
    index: int
    is_leaf: bool
    low: int
    high: int
    depth: int
    parent: int
    side: int
