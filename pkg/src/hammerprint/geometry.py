"""DRAM geometry and the linear physical-address-to-DRAM-address mapping.

Bank bits are XOR parities of physical address bits; row and column live
in fixed disjoint bit ranges. Bank functions can be recovered from a
row-buffer-conflict timing oracle by clustering slow address pairs and
solving for the null space of their XOR differences over GF(2).
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass

from . import gf2


class GeometryError(ValueError):
    """Invalid geometry or address arguments."""


class MappingError(ValueError):
    """Mapping inconsistent with the geometry or not invertible."""


class RecoveryError(RuntimeError):
    """Timing populations did not separate well enough to recover bank bits."""


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class DramGeometry:
    banks: int
    rows_per_bank: int
    columns_per_row: int  # bytes per row
    address_bits: int

    def __post_init__(self):
        for name in ("banks", "rows_per_bank", "columns_per_row"):
            if not _is_pow2(getattr(self, name)):
                raise GeometryError(f"{name} must be a power of two, got {getattr(self, name)}")
        if self.address_bits < 1:
            raise GeometryError("address_bits must be >= 1")
        need = self.bank_bits + self.row_bits + self.column_bits
        if self.address_bits < need:
            raise GeometryError(
                f"address_bits={self.address_bits} too small for geometry (need >= {need})"
            )

    @property
    def bank_bits(self) -> int:
        return self.banks.bit_length() - 1

    @property
    def row_bits(self) -> int:
        return self.rows_per_bank.bit_length() - 1

    @property
    def column_bits(self) -> int:
        return self.columns_per_row.bit_length() - 1

    @property
    def address_space(self) -> int:
        return 1 << self.address_bits


@dataclass(frozen=True)
class DramAddress:
    bank: int
    row: int
    column: int


@dataclass(frozen=True)
class AddressMapping:
    """Linear address mapping: one XOR bitmask per bank bit plus bit ranges.

    ``row_bits`` and ``column_bits`` are half-open (lo, hi) ranges of
    physical address bits holding the row and column indices.
    """

    bank_functions: tuple[int, ...]
    row_bits: tuple[int, int]
    column_bits: tuple[int, int]

    def __post_init__(self):
        object.__setattr__(self, "bank_functions", tuple(self.bank_functions))
        if any(f <= 0 for f in self.bank_functions):
            raise MappingError("bank functions must be nonzero masks")
        if gf2.rank(list(self.bank_functions)) != len(self.bank_functions):
            raise MappingError("bank functions must be linearly independent over GF(2)")
        for lo, hi in (self.row_bits, self.column_bits):
            if not (0 <= lo < hi):
                raise MappingError("bit ranges must be nonempty with lo < hi")
        if _ranges_overlap(self.row_bits, self.column_bits):
            raise MappingError("row and column bit ranges overlap")

    def row_mask(self) -> int:
        lo, hi = self.row_bits
        return ((1 << (hi - lo)) - 1) << lo

    def column_mask(self) -> int:
        lo, hi = self.column_bits
        return ((1 << (hi - lo)) - 1) << lo


def _ranges_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    return a[0] < b[1] and b[0] < a[1]


def check_consistent(mapping: AddressMapping, geom: DramGeometry) -> None:
    """Raise MappingError unless mapping sizes agree with the geometry."""
    if len(mapping.bank_functions) != geom.bank_bits:
        raise MappingError(
            f"{len(mapping.bank_functions)} bank functions for {geom.banks} banks"
        )
    if mapping.row_bits[1] - mapping.row_bits[0] != geom.row_bits:
        raise MappingError("row bit range width does not match rows_per_bank")
    if mapping.column_bits[1] - mapping.column_bits[0] != geom.column_bits:
        raise MappingError("column bit range width does not match columns_per_row")
    top = 1 << geom.address_bits
    if mapping.row_bits[1] > geom.address_bits or mapping.column_bits[1] > geom.address_bits:
        raise MappingError("row/column ranges exceed address_bits")
    if any(f >= top for f in mapping.bank_functions):
        raise MappingError("bank function mask exceeds address_bits")


def canonical_mapping(geom: DramGeometry) -> AddressMapping:
    """Controller-style layout: column low, bank home bits, then row.

    Bank function i is its home bit XOR row bit i, so the system is
    always invertible and every function touches the row range.
    """
    cb, bb, rb = geom.column_bits, geom.bank_bits, geom.row_bits
    if bb > rb:
        raise MappingError("canonical mapping needs row_bits >= bank_bits")
    row_lo = cb + bb
    funcs = tuple((1 << (cb + i)) | (1 << (row_lo + i)) for i in range(bb))
    return AddressMapping(funcs, (row_lo, row_lo + rb), (0, cb))


def phys_to_dram(addr: int, mapping: AddressMapping, geom: DramGeometry) -> DramAddress:
    """Resolve a physical address to (bank, row, column)."""
    if not 0 <= addr < geom.address_space:
        raise GeometryError(f"address {addr:#x} outside {geom.address_bits}-bit space")
    check_consistent(mapping, geom)
    bank = 0
    for i, f in enumerate(mapping.bank_functions):
        bank |= gf2.parity(addr & f) << i
    row = (addr >> mapping.row_bits[0]) & (geom.rows_per_bank - 1)
    col = (addr >> mapping.column_bits[0]) & (geom.columns_per_row - 1)
    return DramAddress(bank, row, col)


def dram_to_phys(da: DramAddress, mapping: AddressMapping, geom: DramGeometry) -> int:
    """Smallest physical address resolving to ``da``.

    Row and column bits are placed directly; the remaining bits are the
    minimum-value GF(2) solution of the bank parity constraints. Raises
    MappingError when the constraints restricted to the free bits are
    linearly dependent (no unique bank coordinate reachable).
    """
    check_consistent(mapping, geom)
    if not (0 <= da.bank < geom.banks and 0 <= da.row < geom.rows_per_bank
            and 0 <= da.column < geom.columns_per_row):
        raise GeometryError(f"DRAM address {da} outside geometry bounds")
    known_region = mapping.row_mask() | mapping.column_mask()
    known = (da.row << mapping.row_bits[0]) | (da.column << mapping.column_bits[0])
    free_masks = [f & ~known_region for f in mapping.bank_functions]
    if gf2.rank(free_masks) != len(free_masks):
        raise MappingError("mapping not invertible: bank functions collapse outside row/column bits")
    rhs = [((da.bank >> i) & 1) ^ gf2.parity(f & known)
           for i, f in enumerate(mapping.bank_functions)]
    x = gf2.solve(free_masks, rhs)
    assert x is not None  # independent rows are always consistent
    return known | x


def encode_mapping(mapping: AddressMapping) -> str:
    """Text form: hex mask per bank function, then row=lo:hi, col=lo:hi."""
    lines = [f"{f:#x}" for f in mapping.bank_functions]
    lines.append(f"row={mapping.row_bits[0]}:{mapping.row_bits[1]}")
    lines.append(f"col={mapping.column_bits[0]}:{mapping.column_bits[1]}")
    return "\n".join(lines) + "\n"


def parse_mapping(text: str) -> AddressMapping:
    funcs: list[int] = []
    row = col = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("row="):
            lo, hi = line[4:].split(":")
            row = (int(lo), int(hi))
        elif line.startswith("col="):
            lo, hi = line[4:].split(":")
            col = (int(lo), int(hi))
        else:
            funcs.append(int(line, 16))
    if row is None or col is None or not funcs:
        raise MappingError("mapping text needs bank function masks plus row= and col= lines")
    return AddressMapping(tuple(funcs), row, col)


def timing_threshold(samples: list[float]) -> float:
    """Two-class split threshold maximizing between-class variance.

    Deterministic: candidate splits are scanned in sorted order and the
    first maximizer wins. Raises ValueError on fewer than two samples or
    when every sample is identical.
    """
    if len(samples) < 2:
        raise ValueError("need at least two samples")
    xs = sorted(samples)
    if xs[0] == xs[-1]:
        raise ValueError("all samples identical: no separation")
    n = len(xs)
    prefix = [0.0]
    for v in xs:
        prefix.append(prefix[-1] + v)
    total = prefix[-1]
    best_var = -1.0
    best_split = None
    for k in range(1, n):
        if xs[k - 1] == xs[k]:
            continue
        w0 = k / n
        w1 = 1.0 - w0
        mu0 = prefix[k] / k
        mu1 = (total - prefix[k]) / (n - k)
        var = w0 * w1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var = var
            best_split = k
    assert best_split is not None
    return (xs[best_split - 1] + xs[best_split]) / 2.0


@dataclass(frozen=True)
class ProbeConfig:
    """Sampling plan for bank-function recovery.

    A handful of random base addresses are each timed against many random
    partners; partners above the per-base threshold are row-buffer
    conflicts, hence same-bank.
    """

    num_bases: int = 16
    partners_per_base: int = 512
    seed: int = 0
    min_separation: float = 4.0  # mean gap over within-class spread
    min_good_bases: int = 4


def recover_bank_functions(oracle, geom: DramGeometry, cfg: ProbeConfig = ProbeConfig()) -> list[int]:
    """Recover bank XOR masks from an access-latency oracle.

    ``oracle(a, b)`` returns the latency of alternating accesses to two
    physical addresses. Returns the canonical GF(2) basis of the bank
    functions' row space. Raises RecoveryError when the latency
    populations do not separate or too few conflicts are observed.
    """
    rng = random.Random(cfg.seed)
    space = geom.address_space
    diffs: list[int] = []
    good_bases = 0
    for _ in range(cfg.num_bases):
        base = rng.randrange(space)
        partners = [rng.randrange(space) for _ in range(cfg.partners_per_base)]
        lats = [oracle(base, p) for p in partners]
        try:
            thr = timing_threshold(lats)
        except ValueError:
            continue
        lo = [t for t in lats if t < thr]
        hi = [t for t in lats if t >= thr]
        if not lo or not hi:
            continue
        spread = max(
            statistics.pstdev(lo) if len(lo) > 1 else 0.0,
            statistics.pstdev(hi) if len(hi) > 1 else 0.0,
            1e-12,
        )
        if (statistics.fmean(hi) - statistics.fmean(lo)) / spread < cfg.min_separation:
            continue
        good_bases += 1
        for p, t in zip(partners, lats):
            if t >= thr and p != base:
                diffs.append(base ^ p)
    if good_bases < cfg.min_good_bases:
        raise RecoveryError(
            f"only {good_bases} of {cfg.num_bases} bases showed a usable conflict gap"
        )
    funcs = gf2.null_space(diffs, geom.address_bits)
    if len(funcs) != geom.bank_bits:
        raise RecoveryError(
            f"recovered {len(funcs)} candidate functions, geometry implies {geom.bank_bits}"
        )
    return funcs
