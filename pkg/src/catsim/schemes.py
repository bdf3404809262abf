"""Mitigation policies behind one interface: SCA, PRA, PRCAT, DRCAT.

Per-bank policies consume row activations in timestamp order and may emit
refresh commands. Auto-refresh interval boundaries are handled via
``observe(now_ns)`` under a burst-refresh model (every row is refreshed at
the boundary, so per-interval activation counts restart):

* SCA zeroes its group counters,
* PRCAT rebuilds its tree from the pre-split state,
* DRCAT zeroes counts but keeps tree structure and weight registers,
* PRA is stateless across intervals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cattree import CatTree
from .model import (
    CAUSE_PRA_NEIGHBORS,
    CAUSE_SCA_GROUP,
    CAUSE_THRESHOLD_LEAF,
    BankConfig,
    ConfigError,
    RefreshEvent,
    validate_config,
)
from .thresholds import SplitThresholds

MASK64 = (1 << 64) - 1

PRNG_QUALITY = "quality"
PRNG_LFSR = "lfsr"

# Maximal-length Fibonacci tap sets, keyed by register width. The 32-bit
# register is the default; narrower ones exist to study how register width
# distorts low refresh probabilities (a w-bit register can never emit w
# consecutive zero bits, so any decision needing >= w zero bits never fires).
LFSR_TAPS = {
    8: (8, 6, 5, 4),
    16: (16, 15, 13, 4),
    24: (24, 23, 22, 17),
    32: (32, 30, 26, 25),
}
DEFAULT_LFSR_WIDTH = 32


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class XoshiroBits:
    """xoshiro256** bit source; 256-bit state, passes standard statistical
    batteries. Bits are consumed most-significant-first from 64-bit outputs."""

    kind = PRNG_QUALITY

    def __init__(self, seed: int):
        self.seed = seed
        s = seed & MASK64
        self.state = []
        for _ in range(4):
            s, out = _splitmix64(s)
            self.state.append(out)
        self._buf = 0
        self._buf_bits = 0

    def _next64(self) -> int:
        s0, s1, s2, s3 = self.state
        result = ((s1 * 5) & MASK64)
        result = (((result << 7) | (result >> 57)) & MASK64) * 9 & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & MASK64
        self.state = [s0, s1, s2, s3]
        return result

    def next_bits(self, k: int) -> int:
        if k == 0:
            return 0
        while self._buf_bits < k:
            self._buf = ((self._buf << 64) | self._next64()) & ((1 << (self._buf_bits + 64)) - 1)
            self._buf_bits += 64
        shift = self._buf_bits - k
        out = self._buf >> shift
        self._buf &= (1 << shift) - 1
        self._buf_bits = shift
        return out


class LfsrBits:
    """Fibonacci linear-feedback shift register.

    Output is the register's least-significant bit; each step shifts right
    and feeds the XOR of the tap bits into the top. k-bit draws assemble k
    successive output bits most-significant-first.
    """

    kind = PRNG_LFSR

    def __init__(self, seed: int, width: int = DEFAULT_LFSR_WIDTH):
        if width not in LFSR_TAPS:
            raise ConfigError(f"no tap set for LFSR width {width}")
        self.seed = seed
        self.width = width
        self.taps = LFSR_TAPS[width]
        period = (1 << width) - 1
        self.state = (seed % period) + 1  # any value in [1, 2^w - 1]

    def _step(self) -> int:
        out = self.state & 1
        fb = 0
        for tap in self.taps:
            fb ^= (self.state >> (tap - 1)) & 1
        self.state = (self.state >> 1) | (fb << (self.width - 1))
        return out

    def next_bits(self, k: int) -> int:
        out = 0
        for _ in range(k):
            out = (out << 1) | self._step()
        return out


@dataclass(frozen=True)
class PrngHandle:
    """Named, seedable bit source specification (recorded in run outputs)."""

    kind: str = PRNG_QUALITY
    seed: int = 0
    lfsr_width: int = DEFAULT_LFSR_WIDTH

    def make(self) -> XoshiroBits | LfsrBits:
        if self.kind == PRNG_QUALITY:
            return XoshiroBits(self.seed)
        if self.kind == PRNG_LFSR:
            return LfsrBits(self.seed, self.lfsr_width)
        raise ConfigError(f"unknown prng kind {self.kind!r}")


def pra_draw_params(p: float) -> tuple[int, int]:
    """Bits per decision and the comparison cut for probability p.

    A decision draws ceil(log2(1/p)) bits and refreshes when the value is
    below floor(p * 2^bits), so the effective probability is quantized to
    floor(p * 2^bits) / 2^bits.
    """
    if not 0.0 < p <= 1.0:
        raise ConfigError("pra probability must be in (0, 1]")
    bits = max(0, math.ceil(math.log2(1.0 / p)))
    cut = math.floor(p * (1 << bits))
    return bits, cut


def pra_effective_p(p: float) -> float:
    bits, cut = pra_draw_params(p)
    return cut / (1 << bits)


# ---------------------------------------------------------------------------
# Policies

VARIANT_SCA = "sca"
VARIANT_PRA = "pra"
VARIANT_CAT = "cat"
VARIANT_PRCAT = "prcat"
VARIANT_DRCAT = "drcat"

VARIANTS = (VARIANT_SCA, VARIANT_PRA, VARIANT_CAT, VARIANT_PRCAT, VARIANT_DRCAT)


class _PolicyBase:
    variant: str

    def __init__(self, cfg: BankConfig, bank: int = 0):
        self.cfg = validate_config(cfg)
        self.bank = bank
        self._epoch = 0

    def observe(self, now_ns: int) -> int:
        """Advance to the interval containing now_ns; returns the number of
        interval boundaries crossed (interval bookkeeping ran that often)."""
        epoch = now_ns // self.cfg.refresh_interval_ns
        crossed = epoch - self._epoch
        if crossed > 0:
            self._epoch = epoch
            self.on_epoch_boundary()
        return max(0, crossed)

    def on_epoch_boundary(self) -> None:
        pass

    def access(self, row: int, now_ns: int = 0) -> RefreshEvent | None:
        raise NotImplementedError


class Sca(_PolicyBase):
    """Static counter assignment: M fixed groups of N/M rows each."""

    variant = VARIANT_SCA

    def __init__(self, cfg: BankConfig, bank: int = 0):
        super().__init__(cfg, bank)
        if cfg.n_rows % cfg.m_counters != 0:
            raise ConfigError("n_rows must be an exact multiple of m_counters")
        self.group_rows = cfg.n_rows // cfg.m_counters
        self.counters = [0] * cfg.m_counters

    def on_epoch_boundary(self) -> None:
        self.counters = [0] * self.cfg.m_counters

    def access(self, row: int, now_ns: int = 0) -> RefreshEvent | None:
        g = row // self.group_rows
        self.counters[g] += 1
        if self.counters[g] < self.cfg.refresh_threshold:
            return None
        self.counters[g] = 0
        low = g * self.group_rows
        high = low + self.group_rows - 1
        return RefreshEvent(
            self.bank,
            max(low - 1, 0),
            min(high + 1, self.cfg.n_rows - 1),
            CAUSE_SCA_GROUP,
            now_ns,
        )


class Pra(_PolicyBase):
    """Probabilistic row activation: refresh both neighbors of the accessed
    row with probability p per access. The aggressor itself is not refreshed."""

    variant = VARIANT_PRA

    def __init__(self, cfg: BankConfig, bank: int = 0, p: float = 0.002,
                 prng: PrngHandle = PrngHandle()):
        super().__init__(cfg, bank)
        self.p = p
        self.prng_handle = prng
        self.prng = prng.make()
        self.draw_bits, self.draw_cut = pra_draw_params(p)

    def access(self, row: int, now_ns: int = 0) -> RefreshEvent | None:
        v = self.prng.next_bits(self.draw_bits)
        if v >= self.draw_cut:
            return None
        victims = [r for r in (row - 1, row + 1) if 0 <= r < self.cfg.n_rows]
        if not victims:
            return None
        return RefreshEvent(
            self.bank, min(victims), max(victims), CAUSE_PRA_NEIGHBORS, now_ns
        )


class Cat(_PolicyBase):
    """Adaptive counter tree with no interval bookkeeping (tree state and
    counts persist until reset explicitly)."""

    variant = VARIANT_CAT

    def __init__(self, cfg: BankConfig, thresholds: SplitThresholds, bank: int = 0):
        super().__init__(cfg, bank)
        self.tree = CatTree(cfg, thresholds)

    def access(self, row: int, now_ns: int = 0) -> RefreshEvent | None:
        hit = self.tree.record_access(row)
        if hit is None:
            return None
        self._after_refresh(hit.counter)
        return RefreshEvent(
            self.bank, hit.low_row, hit.high_row, CAUSE_THRESHOLD_LEAF, now_ns
        )

    def _after_refresh(self, leaf: int) -> None:
        pass


class Prcat(Cat):
    """CAT rebuilt from scratch at every auto-refresh interval boundary."""

    variant = VARIANT_PRCAT

    def on_epoch_boundary(self) -> None:
        self.tree.reset()


class Drcat(Cat):
    """CAT kept across intervals (counts restart, structure and weights
    persist) and reconfigured through per-counter weights."""

    variant = VARIANT_DRCAT

    def on_epoch_boundary(self) -> None:
        self.tree.zero_counts()

    def _after_refresh(self, leaf: int) -> None:
        self.tree.on_threshold_refresh(leaf)


def make_policy(
    variant: str,
    cfg: BankConfig,
    bank: int = 0,
    thresholds: SplitThresholds | None = None,
    p: float = 0.002,
    prng: PrngHandle | None = None,
) -> _PolicyBase:
    if variant == VARIANT_SCA:
        return Sca(cfg, bank)
    if variant == VARIANT_PRA:
        return Pra(cfg, bank, p=p, prng=prng or PrngHandle())
    if variant in (VARIANT_CAT, VARIANT_PRCAT, VARIANT_DRCAT):
        if thresholds is None:
            raise ConfigError(f"{variant} requires split thresholds")
        cls = {VARIANT_CAT: Cat, VARIANT_PRCAT: Prcat, VARIANT_DRCAT: Drcat}[variant]
        return cls(cfg, thresholds, bank)
    raise ConfigError(f"unknown scheme variant {variant!r}")


# Spec-level operation aliases: one call per activation, interval handling
# included where the scheme defines it.

def sca_access(policy: Sca, row: int, now_ns: int = 0) -> RefreshEvent | None:
    return policy.access(row, now_ns)


def pra_access(policy: Pra, row: int, now_ns: int = 0) -> RefreshEvent | None:
    return policy.access(row, now_ns)


def prcat_access(policy: Prcat, row: int, now_ns: int) -> RefreshEvent | None:
    policy.observe(now_ns)
    return policy.access(row, now_ns)


def drcat_access(policy: Drcat, row: int, now_ns: int) -> RefreshEvent | None:
    policy.observe(now_ns)
    return policy.access(row, now_ns)
