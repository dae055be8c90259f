"""Bit-flip fingerprints and their similarity metrics.

A fingerprint is the set of flip locations collected by one query (the
union over its measurements), bound to the challenge that produced it.
Matching uses the plain Jaccard index for the cheap first pass and the
asymmetric variant |new ∩ database| / |new| for ranking, which stays
meaningful when the database union has grown much larger than a single
query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


class FingerprintError(ValueError):
    """Malformed fingerprint input."""


class ChallengeMismatchError(FingerprintError):
    """Operands were produced under different challenges."""


@dataclass(frozen=True, order=True)
class FlipLocation:
    """One flipped bit: (bank, row, column byte, bit index 0-7).

    Ordering is lexicographic on the fields, which fixes the canonical
    encoding order.
    """

    bank: int
    row: int
    column: int
    bit: int

    def __post_init__(self):
        if not 0 <= self.bit <= 7:
            raise FingerprintError(f"bit index {self.bit} outside 0..7")
        if min(self.bank, self.row, self.column) < 0:
            raise FingerprintError("negative location index")


@dataclass(frozen=True)
class Fingerprint:
    locations: frozenset[FlipLocation]
    challenge_hash: str
    device_hint: str | None = None
    query_time: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "locations", frozenset(self.locations))

    def __len__(self) -> int:
        return len(self.locations)


def _require_same_challenge(*fps: Fingerprint) -> None:
    hashes = {fp.challenge_hash for fp in fps}
    if len(hashes) > 1:
        raise ChallengeMismatchError(f"mixed challenge hashes: {sorted(hashes)}")


def from_measurements(measurement_sets: Iterable[Iterable[FlipLocation]],
                      challenge_hash: str,
                      device_hint: str | None = None,
                      query_time: str | None = None) -> Fingerprint:
    """Union the per-measurement flip sets of one query into a fingerprint."""
    sets = [frozenset(s) for s in measurement_sets]
    if not sets:
        raise FingerprintError("a query needs at least one measurement")
    locations: frozenset[FlipLocation] = frozenset().union(*sets)
    return Fingerprint(locations, challenge_hash, device_hint, query_time)


def jaccard(a: Fingerprint, b: Fingerprint) -> float:
    """|a & b| / |a | b| for fingerprints of the same challenge."""
    _require_same_challenge(a, b)
    if not a.locations and not b.locations:
        raise FingerprintError("Jaccard of two empty fingerprints is undefined")
    inter = len(a.locations & b.locations)
    union = len(a.locations | b.locations)
    return inter / union


def jaccard_prime(s_n: Fingerprint, s_d: Fingerprint) -> float:
    """|s_n & s_d| / |s_n|: overlap of a new query with a database union.

    Asymmetric on purpose. An empty s_n signals a failed query and is an
    error rather than a defined value.
    """
    _require_same_challenge(s_n, s_d)
    if not s_n.locations:
        raise FingerprintError("empty new-query fingerprint")
    return len(s_n.locations & s_d.locations) / len(s_n.locations)


def union_of(fps: list[Fingerprint]) -> Fingerprint:
    """Union fingerprints of one device into its database set."""
    if not fps:
        raise FingerprintError("cannot union an empty fingerprint list")
    _require_same_challenge(*fps)
    locations: frozenset[FlipLocation] = frozenset().union(*(fp.locations for fp in fps))
    return Fingerprint(locations, fps[0].challenge_hash)


def encode_fingerprint(fp: Fingerprint) -> str:
    """Canonical text form; bit-exact so digests are reproducible.

    Header lines, then one sorted location per line as
    ``b<bank>:r<row>:c<column>:i<bit>``.
    """
    lines = [f"challenge={fp.challenge_hash}"]
    if fp.query_time is not None:
        lines.append(f"time={fp.query_time}")
    if fp.device_hint is not None:
        hint = fp.device_hint.replace("\n", " ")
        lines.append(f"hint={hint}")
    for loc in sorted(fp.locations):
        lines.append(f"b{loc.bank}:r{loc.row}:c{loc.column}:i{loc.bit}")
    return "\n".join(lines) + "\n"


def decode_fingerprint(text: str) -> Fingerprint:
    challenge = None
    query_time = None
    hint = None
    locations = set()
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("challenge="):
            challenge = line[len("challenge="):]
        elif line.startswith("time="):
            query_time = line[len("time="):]
        elif line.startswith("hint="):
            hint = line[len("hint="):]
        elif line.startswith("b"):
            locations.add(_parse_location(line))
        else:
            raise FingerprintError(f"bad fingerprint line: {line!r}")
    if challenge is None:
        raise FingerprintError("fingerprint file lacks a challenge= header")
    return Fingerprint(frozenset(locations), challenge, hint, query_time)


def _parse_location(line: str) -> FlipLocation:
    try:
        b, r, c, i = line.split(":")
        if b[0] != "b" or r[0] != "r" or c[0] != "c" or i[0] != "i":
            raise ValueError
        return FlipLocation(int(b[1:]), int(r[1:]), int(c[1:]), int(i[1:]))
    except (ValueError, IndexError):
        raise FingerprintError(f"bad location line: {line!r}") from None
