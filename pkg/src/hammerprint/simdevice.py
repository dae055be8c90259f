"""Seeded virtual DRAM device: conflict timings and Rowhammer bit flips.

The latent state of a device is a sparse susceptibility map derived from
a keyed PRF over (dimm seed, host seed, cell coordinates). Host mixing is
a second PRF stage, so the same DIMM on another host draws an effectively
fresh map: supports across hosts or across DIMMs are disjoint, matching
the observation that fingerprints bind to the whole machine.

Two details carry the measured statistics:

* Each device's susceptible cells sit inside one device-keyed aligned
  column block per row (same block index in every row). Distinct devices
  therefore overlap only on a block-index collision (about 2**-19 per
  pair at default geometry), which keeps cross-device similarity at an
  exact zero over any realistic device count.
* Susceptible cells come in two latent classes. Stable cells flip in
  nearly every measurement. Marginal cells first activate per query with
  a small probability, which reproduces both the sub-unity repeat
  similarity of real queries and its insensitivity to the number of
  measurements within a query.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace

from .challenge import DramChallenge, victim_rows
from .fingerprint import FlipLocation, Fingerprint, from_measurements
from .geometry import (
    AddressMapping,
    DramGeometry,
    GeometryError,
    canonical_mapping,
    check_consistent,
    phys_to_dram,
)
from . import challenge as challenge_mod

BASE_LATENCY = 100.0
SUPPORT_BLOCK = 16  # candidate susceptible positions per row per device


class DeviceError(ValueError):
    """Invalid device configuration or arguments."""


@dataclass(frozen=True)
class TrrConfig:
    """Target Row Refresh model: a sampler that can track only so many
    distinct aggressor rows. Uniform patterns within its capacity are
    fully neutralized; wider or non-uniform patterns slip through."""

    enabled: bool = True
    sampler_size: int = 16

    def __post_init__(self):
        if self.enabled and self.sampler_size < 1:
            raise DeviceError("sampler_size must be >= 1 when TRR is enabled")


@dataclass(frozen=True)
class NoiseConfig:
    """Measurement and manufacturing noise calibration.

    ``susceptibility_density`` is the expected susceptible cells per
    victim row. ``p_flip_given_susceptible`` is the per-measurement flip
    probability of an eligible, active cell. ``marginal_fraction`` of
    susceptible cells only participate in a query at all with probability
    ``marginal_activation``; setting the fraction to 0 (or activation to
    1) together with p_flip = 1 makes flips fully deterministic.
    """

    p_flip_given_susceptible: float = 0.955
    susceptibility_density: float = 12.0
    timing_conflict_gap: float = 100.0
    timing_sigma: float = 10.0
    marginal_fraction: float = 0.77
    marginal_activation: float = 0.06

    def __post_init__(self):
        for name in ("p_flip_given_susceptible", "marginal_fraction", "marginal_activation"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DeviceError(f"{name} must lie in [0, 1], got {v}")
        if self.susceptibility_density < 0:
            raise DeviceError("susceptibility_density must be >= 0")
        if self.timing_conflict_gap < 0 or self.timing_sigma < 0:
            raise DeviceError("timing parameters must be >= 0")


@dataclass(frozen=True)
class SusceptibleCell:
    position: int  # bit position within the row: column byte * 8 + bit
    polarity: int  # 1 = true cell (charged stores 1), 0 = anti cell
    marginal: bool

    @property
    def column(self) -> int:
        return self.position >> 3

    @property
    def bit(self) -> int:
        return self.position & 7


def _prf(*parts) -> int:
    """Keyed 64-bit PRF over a tagged tuple of ints and strings."""
    h = hashlib.blake2b(digest_size=8, key=b"hammerprint.simdevice")
    for p in parts:
        if isinstance(p, str):
            h.update(b"s" + p.encode())
        else:
            h.update(b"i" + int(p).to_bytes(17, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class SimDevice:
    dimm_seed: int
    host_seed: int
    geom: DramGeometry
    mapping: AddressMapping
    trr: TrrConfig
    noise: NoiseConfig

    def __post_init__(self):
        check_consistent(self.mapping, self.geom)

    @property
    def device_key(self) -> int:
        # host mixing as a second PRF stage over the DIMM-stage key
        dimm_key = _prf("dimm", self.dimm_seed)
        return _prf("host", dimm_key, self.host_seed)

    @property
    def support_block_start(self) -> int:
        """Start position of this device's susceptible block in every row."""
        positions = self.geom.columns_per_row * 8
        block = min(SUPPORT_BLOCK, positions)
        n_slots = positions // block
        return (_prf("slot", self.device_key) % n_slots) * block

    @property
    def density_factor(self) -> float:
        """Host-flavored scaling of the susceptible-cell density."""
        u = _prf("density", self.device_key) / 2**64
        return 0.85 + 0.40 * u

    def susceptible_cells(self, bank: int, row: int) -> tuple[SusceptibleCell, ...]:
        """Latent susceptibility of one row; pure in (seeds, bank, row)."""
        if not (0 <= bank < self.geom.banks and 0 <= row < self.geom.rows_per_bank):
            raise GeometryError(f"bank {bank} / row {row} outside geometry")
        positions = self.geom.columns_per_row * 8
        block = min(SUPPORT_BLOCK, positions)
        base = self.support_block_start
        p_cell = min(1.0, self.noise.susceptibility_density * self.density_factor / block)
        rng = random.Random(_prf("row", self.device_key, bank, row))
        cells = []
        for j in range(block):
            if rng.random() < p_cell:
                polarity = rng.getrandbits(1)
                marginal = rng.random() < self.noise.marginal_fraction
                cells.append(SusceptibleCell(base + j, polarity, marginal))
        return tuple(cells)

    def flip_direction(self, loc: FlipLocation) -> str:
        """Direction metadata for a reported flip: "1to0" or "0to1".

        True cells discharge (1 to 0); anti cells charge up the stored
        value (0 to 1). Direction is not part of location identity.
        """
        for cell in self.susceptible_cells(loc.bank, loc.row):
            if cell.column == loc.column and cell.bit == loc.bit:
                return "1to0" if cell.polarity == 1 else "0to1"
        raise DeviceError(f"{loc} is not a susceptible cell of this device")


def new_sim_device(dimm_seed: int,
                   host_seed: int,
                   geom: DramGeometry | None = None,
                   mapping: AddressMapping | None = None,
                   trr: TrrConfig | None = None,
                   noise: NoiseConfig | None = None) -> SimDevice:
    """Build a device, defaulting every component not supplied."""
    geom = geom if geom is not None else default_geometry()
    mapping = mapping if mapping is not None else canonical_mapping(geom)
    return SimDevice(
        dimm_seed=dimm_seed,
        host_seed=host_seed,
        geom=geom,
        mapping=mapping,
        trr=trr if trr is not None else TrrConfig(),
        noise=noise if noise is not None else NoiseConfig(),
    )


def default_geometry() -> DramGeometry:
    """Shipped simulation geometry.

    Rows are much wider than a hardware DRAM row so that per-device
    support blocks have 2**19 distinct positions: independently seeded
    devices then share no susceptible cells except with negligible
    probability, which is what the cross-device experiments assume.
    """
    return DramGeometry(banks=16, rows_per_bank=4096,
                        columns_per_row=2**20, address_bits=36)


def access_time(dev: SimDevice, a: int, b: int, rng_seed: int) -> float:
    """Latency of alternating accesses to physical addresses a and b.

    Same bank but different row adds the row-buffer-conflict gap; Gaussian
    noise on top. Deterministic in (device, a, b, rng_seed).
    """
    da = phys_to_dram(a, dev.mapping, dev.geom)
    db = phys_to_dram(b, dev.mapping, dev.geom)
    lat = BASE_LATENCY
    if da.bank == db.bank and da.row != db.row:
        lat += dev.noise.timing_conflict_gap
    if dev.noise.timing_sigma > 0:
        rng = random.Random(_prf("time", dev.device_key, rng_seed, a, b))
        lat += rng.gauss(0.0, dev.noise.timing_sigma)
    return lat


def make_timing_oracle(dev: SimDevice, rng_seed: int):
    """Address-pair latency oracle for mapping recovery."""
    return lambda a, b: access_time(dev, a, b, rng_seed)


def trr_neutralizes(dev: SimDevice, ch: DramChallenge) -> bool:
    """Uniform patterns whose distinct aggressors fit the TRR sampler are
    fully refreshed away; anything wider or non-uniform gets through."""
    if not dev.trr.enabled:
        return False
    if not ch.pattern.uniform:
        return False
    return len(set(ch.pattern.aggressor_offsets)) <= dev.trr.sampler_size


def hammer(dev: SimDevice, ch: DramChallenge, measurement_seed: int) -> list[set[FlipLocation]]:
    """Run one fingerprint query: per-measurement sets of flip locations.

    A cell can flip only when it sits in a victim row of the pattern, is
    latently susceptible, and its initialized value is the charged state
    for its polarity. Aggressor rows never flip. All randomness is drawn
    from (device key, measurement_seed), so identical calls agree bit for
    bit.
    """
    ch.validate_for(dev.geom)
    if trr_neutralizes(dev, ch):
        return [set() for _ in range(ch.measurements)]
    victims = victim_rows(ch.pattern)
    key = dev.device_key
    p_flip = dev.noise.p_flip_given_susceptible
    activation = dev.noise.marginal_activation
    victim_value = ch.data.victim_value

    rows = []
    for bank in ch.bank_range:
        for row in victims:
            cells = dev.susceptible_cells(bank, row)
            # charged-state gate: a true cell needs its bit initialized to
            # 1, an anti cell to 0, i.e. init bit == polarity
            eligible = [c for c in cells if (victim_value >> c.bit) & 1 == c.polarity]
            if not eligible:
                continue
            arng = random.Random(_prf("act", key, measurement_seed, bank, row))
            active = [not c.marginal or arng.random() < activation for c in eligible]
            rows.append((bank, row, eligible, active))

    results: list[set[FlipLocation]] = []
    for t in range(ch.measurements):
        flips: set[FlipLocation] = set()
        for bank, row, eligible, active in rows:
            mrng = random.Random(_prf("meas", key, measurement_seed, t, bank, row))
            for cell, act in zip(eligible, active):
                u = mrng.random()
                if act and u < p_flip:
                    flips.add(FlipLocation(bank, row, cell.column, cell.bit))
        results.append(flips)
    return results


def run_query(dev: SimDevice, ch: DramChallenge, measurement_seed: int,
              device_hint: str | None = None,
              query_time: str | None = None) -> Fingerprint:
    """Hammer and union the measurements into a challenge-bound fingerprint."""
    sets = hammer(dev, ch, measurement_seed)
    return from_measurements(sets, challenge_mod.challenge_hash(ch),
                             device_hint=device_hint, query_time=query_time)


def deterministic_noise(noise: NoiseConfig | None = None) -> NoiseConfig:
    """Noise variant with fully deterministic flips (every eligible cell
    flips in every measurement)."""
    base = noise if noise is not None else NoiseConfig()
    return replace(base, p_flip_given_susceptible=1.0, marginal_fraction=0.0)


# --- device profile serialization -------------------------------------------

def encode_device(dev: SimDevice) -> str:
    g, n, t = dev.geom, dev.noise, dev.trr
    lines = [
        f"dimm_seed={dev.dimm_seed:#x}",
        f"host_seed={dev.host_seed:#x}",
        f"banks={g.banks}",
        f"rows_per_bank={g.rows_per_bank}",
        f"columns_per_row={g.columns_per_row}",
        f"address_bits={g.address_bits}",
    ]
    lines += [f"bankfn={f:#x}" for f in dev.mapping.bank_functions]
    lines.append(f"row={dev.mapping.row_bits[0]}:{dev.mapping.row_bits[1]}")
    lines.append(f"col={dev.mapping.column_bits[0]}:{dev.mapping.column_bits[1]}")
    lines.append(f"trr_enabled={int(t.enabled)}")
    lines.append(f"trr_sampler_size={t.sampler_size}")
    lines.append(f"p_flip_given_susceptible={n.p_flip_given_susceptible!r}")
    lines.append(f"susceptibility_density={n.susceptibility_density!r}")
    lines.append(f"timing_conflict_gap={n.timing_conflict_gap!r}")
    lines.append(f"timing_sigma={n.timing_sigma!r}")
    lines.append(f"marginal_fraction={n.marginal_fraction!r}")
    lines.append(f"marginal_activation={n.marginal_activation!r}")
    return "\n".join(lines) + "\n"


def parse_device(text: str) -> SimDevice:
    fields: dict[str, str] = {}
    funcs: list[int] = []
    row = col = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DeviceError(f"bad device profile line: {line!r}")
        key, val = line.split("=", 1)
        if key == "bankfn":
            funcs.append(int(val, 16))
        elif key == "row":
            lo, hi = val.split(":")
            row = (int(lo), int(hi))
        elif key == "col":
            lo, hi = val.split(":")
            col = (int(lo), int(hi))
        else:
            fields[key] = val
    try:
        geom = DramGeometry(
            banks=int(fields["banks"]),
            rows_per_bank=int(fields["rows_per_bank"]),
            columns_per_row=int(fields["columns_per_row"]),
            address_bits=int(fields["address_bits"]),
        )
        if row is None or col is None or not funcs:
            raise DeviceError("device profile lacks mapping lines")
        mapping = AddressMapping(tuple(funcs), row, col)
        trr = TrrConfig(
            enabled=bool(int(fields["trr_enabled"])),
            sampler_size=int(fields["trr_sampler_size"]),
        )
        noise = NoiseConfig(
            p_flip_given_susceptible=float(fields["p_flip_given_susceptible"]),
            susceptibility_density=float(fields["susceptibility_density"]),
            timing_conflict_gap=float(fields["timing_conflict_gap"]),
            timing_sigma=float(fields["timing_sigma"]),
            marginal_fraction=float(fields["marginal_fraction"]),
            marginal_activation=float(fields["marginal_activation"]),
        )
        return SimDevice(
            dimm_seed=int(fields["dimm_seed"], 16),
            host_seed=int(fields["host_seed"], 16),
            geom=geom, mapping=mapping, trr=trr, noise=noise,
        )
    except KeyError as e:
        raise DeviceError(f"device profile missing field {e.args[0]!r}") from None
