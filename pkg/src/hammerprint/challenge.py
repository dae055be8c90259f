"""DRAM challenges: aggressor row layout, data pattern, measuring plan.

A challenge pins everything a fingerprint query depends on. Its canonical
text form is hashed, and fingerprints carry that hash so only
like-for-like sets are ever compared.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace
from enum import Enum

from .geometry import DramGeometry


class ChallengeError(ValueError):
    """Malformed challenge or pattern."""


class PatternKind(str, Enum):
    ONE_LOCATION = "one-location"
    SINGLE_SIDED = "single-sided"
    DOUBLE_SIDED = "double-sided"
    N_SIDED = "n-sided"
    NON_UNIFORM = "non-uniform"


@dataclass(frozen=True)
class HammerPattern:
    """Aggressor rows plus, for non-uniform patterns, per-aggressor
    (frequency, phase, amplitude) randomization records."""

    kind: PatternKind
    aggressor_offsets: tuple[int, ...]
    temporal: tuple[tuple[float, float, float], ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "aggressor_offsets", tuple(self.aggressor_offsets))
        n = len(self.aggressor_offsets)
        if any(a < 0 for a in self.aggressor_offsets):
            raise ChallengeError("aggressor offsets must be nonnegative")
        if len(set(self.aggressor_offsets)) != n:
            raise ChallengeError("aggressor offsets must be distinct")
        kind = self.kind
        if kind == PatternKind.ONE_LOCATION and n != 1:
            raise ChallengeError("one-location pattern takes exactly 1 aggressor")
        if kind == PatternKind.SINGLE_SIDED and n != 2:
            raise ChallengeError("single-sided pattern takes exactly 2 aggressors")
        if kind == PatternKind.DOUBLE_SIDED:
            if n != 2:
                raise ChallengeError("double-sided pattern takes exactly 2 aggressors")
            a, b = sorted(self.aggressor_offsets)
            if b - a != 2:
                raise ChallengeError("double-sided aggressors must sit two rows apart")
        if kind == PatternKind.N_SIDED and n < 3:
            raise ChallengeError("n-sided pattern needs at least 3 aggressors")
        if kind == PatternKind.NON_UNIFORM:
            if self.temporal is None or len(self.temporal) != n:
                raise ChallengeError("non-uniform pattern needs one temporal triple per aggressor")
        elif self.temporal is not None:
            raise ChallengeError(f"{kind.value} pattern carries no temporal parameters")

    @property
    def uniform(self) -> bool:
        return self.kind != PatternKind.NON_UNIFORM

    def max_row(self) -> int:
        rows = victim_rows(self) + list(self.aggressor_offsets)
        return max(rows)


def build_pattern(kind: PatternKind | str, n: int, first_offset: int, rng_seed: int = 0) -> HammerPattern:
    """Construct a pattern of ``n`` aggressors starting at ``first_offset``.

    Many-sided layouts interleave victims: aggressors land on
    first_offset, first_offset+2, and so on. Non-uniform patterns use the
    same layout and draw their temporal triples from ``rng_seed``.
    """
    kind = PatternKind(kind)
    if kind == PatternKind.ONE_LOCATION:
        if n != 1:
            raise ChallengeError("one-location pattern takes exactly 1 aggressor")
        return HammerPattern(kind, (first_offset,))
    if kind == PatternKind.SINGLE_SIDED:
        if n != 2:
            raise ChallengeError("single-sided pattern takes exactly 2 aggressors")
        # far apart on purpose: no shared victim
        return HammerPattern(kind, (first_offset, first_offset + 4))
    offsets = tuple(first_offset + 2 * i for i in range(n))
    if kind == PatternKind.DOUBLE_SIDED:
        if n != 2:
            raise ChallengeError("double-sided pattern takes exactly 2 aggressors")
        return HammerPattern(kind, offsets)
    if kind == PatternKind.N_SIDED:
        return HammerPattern(kind, offsets)
    rng = random.Random(rng_seed)
    temporal = tuple(
        (rng.uniform(0.5, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.5, 2.0))
        for _ in range(n)
    )
    return HammerPattern(kind, offsets, temporal)


def victim_rows(p: HammerPattern) -> list[int]:
    """Rows adjacent to an aggressor that are not aggressors themselves."""
    aggs = set(p.aggressor_offsets)
    victims = set()
    for a in aggs:
        for r in (a - 1, a + 1):
            if r >= 0 and r not in aggs:
                victims.add(r)
    return sorted(victims)


@dataclass(frozen=True)
class DataPattern:
    victim_value: int = 0x55
    aggressor_value: int = 0xAA

    def __post_init__(self):
        for v in (self.victim_value, self.aggressor_value):
            if not 0 <= v <= 0xFF:
                raise ChallengeError("data pattern values are single bytes")


@dataclass(frozen=True)
class DramChallenge:
    bank_range: tuple[int, ...]
    first_aggressor_offset: int
    pattern: HammerPattern
    data: DataPattern
    banks_measured: int
    measurements: int

    def __post_init__(self):
        object.__setattr__(self, "bank_range", tuple(self.bank_range))
        if self.banks_measured != len(self.bank_range):
            raise ChallengeError("banks_measured must equal the bank_range length")
        if len(set(self.bank_range)) != len(self.bank_range):
            raise ChallengeError("bank_range entries must be distinct")
        if self.measurements < 1:
            raise ChallengeError("measurements must be >= 1")

    def validate_for(self, geom: DramGeometry) -> None:
        if any(not 0 <= b < geom.banks for b in self.bank_range):
            raise ChallengeError("bank_range outside geometry banks")
        if self.pattern.max_row() >= geom.rows_per_bank:
            raise ChallengeError("pattern rows exceed rows_per_bank")

    def with_measurements(self, m: int) -> "DramChallenge":
        return replace(self, measurements=m)


def default_challenge() -> DramChallenge:
    """The reference challenge: 5 banks, 22-sided pattern starting at row 1,
    victim rows 0x55 / aggressor rows 0xAA, 10 measurements."""
    return DramChallenge(
        bank_range=tuple(range(5)),
        first_aggressor_offset=1,
        pattern=build_pattern(PatternKind.N_SIDED, 22, 1),
        data=DataPattern(0x55, 0xAA),
        banks_measured=5,
        measurements=10,
    )


def encode_challenge(ch: DramChallenge) -> str:
    """Canonical text profile; stable input for the challenge hash."""
    lines = [
        "bank_range=" + ",".join(str(b) for b in ch.bank_range),
        f"first_aggressor_offset={ch.first_aggressor_offset}",
        f"hammering_pattern={ch.pattern.kind.value}",
        "aggressor_offsets=" + ",".join(str(a) for a in ch.pattern.aggressor_offsets),
        f"data_victim={ch.data.victim_value:#04x}",
        f"data_aggressor={ch.data.aggressor_value:#04x}",
        f"banks_measured={ch.banks_measured}",
        f"measurements={ch.measurements}",
    ]
    if ch.pattern.temporal is not None:
        for freq, phase, amp in ch.pattern.temporal:
            lines.append(f"temporal={freq!r},{phase!r},{amp!r}")
    return "\n".join(lines) + "\n"


def parse_challenge(text: str) -> DramChallenge:
    fields: dict[str, str] = {}
    temporal: list[tuple[float, float, float]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ChallengeError(f"bad challenge line: {line!r}")
        key, val = line.split("=", 1)
        if key == "temporal":
            f, p, a = val.split(",")
            temporal.append((float(f), float(p), float(a)))
        else:
            fields[key] = val
    try:
        kind = PatternKind(fields["hammering_pattern"])
        offsets = tuple(int(x) for x in fields["aggressor_offsets"].split(","))
        pattern = HammerPattern(kind, offsets, tuple(temporal) if temporal else None)
        return DramChallenge(
            bank_range=tuple(int(b) for b in fields["bank_range"].split(",")),
            first_aggressor_offset=int(fields["first_aggressor_offset"]),
            pattern=pattern,
            data=DataPattern(int(fields["data_victim"], 16), int(fields["data_aggressor"], 16)),
            banks_measured=int(fields["banks_measured"]),
            measurements=int(fields["measurements"]),
        )
    except KeyError as e:
        raise ChallengeError(f"challenge profile missing field {e.args[0]!r}") from None


def challenge_hash(ch: DramChallenge) -> str:
    return hashlib.sha256(encode_challenge(ch).encode()).hexdigest()
