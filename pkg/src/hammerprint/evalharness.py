"""Simulated reproductions of the fingerprinting experiments.

Everything here is driven by explicit seeds and returns machine-readable
reports: repeat-query reliability, cross-device uniqueness, the
two-detection identification run, one DIMM across several hosts, and the
measurement-count tradeoff. Wall-clock cost is replaced by a declared
work-unit model that keeps the linear scaling in the measurement count.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .challenge import DramChallenge, challenge_hash, default_challenge
from .fingerprint import Fingerprint, jaccard_prime, union_of
from .registry import (
    FingerprintDataset,
    IdentifyConfig,
    enroll,
    generate_new_id,
    identify,
)
from .simdevice import SimDevice, deterministic_noise, new_sim_device, run_query

WORK_UNITS_PER_ACCESS = 1  # one unit per aggressor activation pass


class ExperimentError(ValueError):
    """Bad experiment arguments."""


@dataclass
class ExperimentReport:
    """Per-trial values plus summary statistics of one experiment."""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(self.rows) != len(self.values):
            raise ExperimentError("one value per row required")
        if self.values and not (self.min <= self.mean <= self.max):
            raise ExperimentError("summary statistics inconsistent")

    @property
    def mean(self) -> float:
        return sum(self.values) / len(self.values)

    @property
    def min(self) -> float:
        return min(self.values)

    @property
    def max(self) -> float:
        return max(self.values)

    def to_delimited(self, sep: str = ",") -> str:
        lines = [sep.join(self.columns)]
        for row in self.rows:
            lines.append(sep.join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def to_table(self, max_rows: int | None = None) -> str:
        shown = self.rows if max_rows is None else self.rows[:max_rows]
        widths = [len(c) for c in self.columns]
        rendered = [[_cell(v) for v in row] for row in shown]
        for row in rendered:
            widths = [max(w, len(v)) for w, v in zip(widths, row)]
        header = "  ".join(c.ljust(w) for c, w in zip(self.columns, widths))
        lines = [header, "-" * len(header)]
        for row in rendered:
            lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
        if len(shown) < len(self.rows):
            lines.append(f"... {len(self.rows) - len(shown)} more trials")
        lines.append(
            f"{self.name}: trials={len(self.values)} "
            f"mean={self.mean:.4f} min={self.min:.4f} max={self.max:.4f}"
        )
        return "\n".join(lines)


def _cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _query_seeds(seed: int, n: int, tag: str = "") -> list[int]:
    # str seeding is PYTHONHASHSEED-independent; tuple seeding is not
    rng = random.Random(f"{seed}:{tag}")
    return [rng.getrandbits(64) for _ in range(n)]


def _make_queries(dev: SimDevice, ch: DramChallenge, seed: int, n: int,
                  tag: str = "") -> list[Fingerprint]:
    return [run_query(dev, ch, s) for s in _query_seeds(seed, n, tag)]


def _pairing_values(new_queries: list[Fingerprint],
                    db_queries: list[Fingerprint],
                    d_size: int,
                    rng: random.Random,
                    max_cases: int,
                    exclude_self: bool) -> list[tuple[tuple[int, ...], int, float]]:
    """Overlap of each candidate new query against every d_size database
    union, exhaustively when small enough, otherwise a seeded sample.

    With ``exclude_self`` both pools are the same query list and the new
    query never appears in its own database draw.
    """
    n_db = len(db_queries)
    if d_size > n_db - (1 if exclude_self else 0):
        raise ExperimentError("insufficient queries for the requested database size")
    combos = list(itertools.combinations(range(n_db), d_size))
    cases = []
    for combo in combos:
        in_combo = set(combo)
        for i in range(len(new_queries)):
            if exclude_self and i in in_combo:
                continue
            cases.append((combo, i))
    if len(cases) > max_cases:
        cases = rng.sample(cases, max_cases)
    out = []
    for combo, i in cases:
        db = union_of([db_queries[k] for k in combo])
        out.append((combo, i, jaccard_prime(new_queries[i], db)))
    return out


def reliability_experiment(dev: SimDevice, ch: DramChallenge,
                           n_queries: int = 20, d_size: int = 3,
                           seed: int = 0, max_cases: int = 25000) -> ExperimentReport:
    """Repeat-query similarity of one device against its own database.

    Runs ``n_queries`` fingerprint queries, then scores every way of
    picking ``d_size`` of them as the database and one of the rest as
    the new query (seeded sample when the combination count explodes).
    """
    if d_size >= n_queries:
        raise ExperimentError("d_size must be smaller than n_queries")
    queries = _make_queries(dev, ch, seed, n_queries)
    rng = random.Random(f"{seed}:combos")
    rows, values = [], []
    for combo, i, value in _pairing_values(queries, queries, d_size, rng,
                                           max_cases, exclude_self=True):
        rows.append(("+".join(map(str, combo)), i, len(queries[i].locations), value))
        values.append(value)
    return ExperimentReport(
        name="reliability",
        columns=("database_queries", "new_query", "new_query_flips", "jaccard_prime"),
        rows=rows, values=values,
    )


def uniqueness_experiment(dev_a: SimDevice, dev_b: SimDevice, ch: DramChallenge,
                          n_queries: int = 20, seed: int = 0,
                          d_size: int = 3, max_cases: int = 4000) -> ExperimentReport:
    """Cross-device similarity for two distinct devices, both directions."""
    if (dev_a.dimm_seed, dev_a.host_seed) == (dev_b.dimm_seed, dev_b.host_seed):
        raise ExperimentError("uniqueness needs two distinct devices")
    qa = _make_queries(dev_a, ch, seed, n_queries, tag="a")
    qb = _make_queries(dev_b, ch, seed, n_queries, tag="b")
    rng = random.Random(f"{seed}:combos")
    rows, values = [], []
    for direction, new_qs, db_qs in (("a_vs_b", qa, qb), ("b_vs_a", qb, qa)):
        for combo, i, value in _pairing_values(new_qs, db_qs, d_size, rng,
                                               max_cases // 2, exclude_self=False):
            rows.append((direction, "+".join(map(str, combo)), i, value))
            values.append(value)
    return ExperimentReport(
        name="uniqueness",
        columns=("direction", "database_queries", "new_query", "jaccard_prime"),
        rows=rows, values=values,
    )


@dataclass
class DetectionResult:
    """Outcome of the enroll-then-re-detect experiment."""

    enrolled_ids: list[str]
    rows: list[tuple]  # (position, phase2_label, true_id, result_id, decision, similarity)
    matrix: list[list[float]]  # phase-2 queries x enrolled devices
    correct: int
    new_count: int

    def to_report(self) -> ExperimentReport:
        values = [1.0 if (true_id == result_id or (true_id is None and decision == "new"))
                  else 0.0
                  for _, _, true_id, result_id, decision, _ in self.rows]
        return ExperimentReport(
            name="detection",
            columns=("position", "label", "true_id", "result_id", "decision", "similarity"),
            rows=[(p, lb, t or "-", r, d, s if s is not None else "-")
                  for p, lb, t, r, d, s in self.rows],
            values=values,
        )

    def matrix_delimited(self, sep: str = ",") -> str:
        lines = [sep.join(["query"] + self.enrolled_ids)]
        for k, row in enumerate(self.matrix):
            lines.append(sep.join([f"q{k + 1}"] + [f"{v:.6g}" for v in row]))
        return "\n".join(lines) + "\n"


def detection_experiment(n_devices: int = 8, enroll_queries: int = 3,
                         seed: int = 0, replace: int = 0,
                         witness_index: int | None = 0,
                         cfg: IdentifyConfig = IdentifyConfig()) -> DetectionResult:
    """Enroll a fleet, then re-detect it under permuted labels.

    Phase two queries each device once with fresh virtual attributes
    (label, MAC, IP) and runs identification. ``replace`` devices are
    swapped for fresh hardware before phase two and must come back as
    new. The ``witness_index`` device is built with deterministic flips,
    so its re-detection overlap is exactly 1.
    """
    if n_devices < 2:
        raise ExperimentError("need at least two devices")
    if not 0 <= replace <= n_devices:
        raise ExperimentError("replace must lie in [0, n_devices]")
    rng = random.Random(f"{seed}:detection")
    ch = default_challenge()

    def fresh_device(make_witness: bool) -> SimDevice:
        noise = deterministic_noise() if make_witness else None
        return new_sim_device(rng.getrandbits(64), rng.getrandbits(64), noise=noise)

    devices = [fresh_device(i == witness_index) for i in range(n_devices)]

    dataset = FingerprintDataset(challenge_hash(ch))
    enrolled_ids = []
    for dev in devices:
        dev_id = generate_new_id(dataset)
        for k in range(enroll_queries):
            fp = run_query(dev, ch, rng.getrandbits(64),
                           device_hint=_virtual_attrs(rng, dev_id))
            enroll(dataset, dev_id, fp)
        enrolled_ids.append(dev_id)

    true_ids: list[str | None] = list(enrolled_ids)
    if replace:
        for pos in rng.sample(range(n_devices), replace):
            devices[pos] = fresh_device(False)
            true_ids[pos] = None

    order = list(range(n_devices))
    rng.shuffle(order)

    rows, matrix = [], []
    correct = new_count = 0
    for position, idx in enumerate(order):
        label = f"probe-{position + 1}"
        query = run_query(devices[idx], ch, rng.getrandbits(64),
                          device_hint=_virtual_attrs(rng, label))
        result = identify(dataset, query, cfg)
        matrix.append([jaccard_prime(query, dataset.records[i].union())
                       for i in enrolled_ids])
        if result.decision == "new":
            new_count += 1
        if true_ids[idx] is None:
            ok = result.decision == "new"
        else:
            ok = result.decision == "matched" and result.device_id == true_ids[idx]
        correct += ok
        rows.append((position, label, true_ids[idx], result.device_id,
                     result.decision, result.similarity))
    return DetectionResult(enrolled_ids, rows, matrix, correct, new_count)


def _virtual_attrs(rng: random.Random, label: str) -> str:
    mac = ":".join(f"{rng.getrandbits(8):02x}" for _ in range(6))
    ip = ".".join(str(rng.randrange(1, 255)) for _ in range(4))
    return f"label={label} mac={mac} ip={ip}"


@dataclass
class MultiHostResult:
    """One DIMM moved across hosts: cross-host overlaps and flip counts."""

    host_seeds: list[int]
    matrix: list[list[float]]  # new query of host i vs database of host j
    mean_flips: list[float]

    def to_report(self) -> ExperimentReport:
        rows, values = [], []
        for i, row in enumerate(self.matrix):
            for j, value in enumerate(row):
                rows.append((f"host{i + 1}", f"host{j + 1}", value))
                values.append(value)
        return ExperimentReport(
            name="one-dimm-multi-host",
            columns=("new_query_host", "database_host", "jaccard_prime"),
            rows=rows, values=values,
        )

    def matrix_delimited(self, sep: str = ",") -> str:
        names = [f"host{i + 1}" for i in range(len(self.host_seeds))]
        lines = [sep.join(["new\\db"] + names)]
        for name, row in zip(names, self.matrix):
            lines.append(sep.join([name] + [f"{v:.6g}" for v in row]))
        lines.append("")
        lines.append(sep.join(["host"] + names))
        lines.append(sep.join(["mean_flips"] + [f"{v:.6g}" for v in self.mean_flips]))
        return "\n".join(lines) + "\n"


def one_dimm_multi_host(dimm_seed: int, host_seeds: list[int],
                        ch: DramChallenge | None = None, seed: int = 0,
                        enroll_queries: int = 3) -> MultiHostResult:
    """Fingerprint the same DIMM seed under several host seeds.

    The overlap table pairs each host's fresh query against each host's
    database union; per-host mean flip counts come along for the ride.
    """
    if len(host_seeds) < 2:
        raise ExperimentError("need at least two host seeds")
    ch = ch if ch is not None else default_challenge()
    rng = random.Random(f"{seed}:hosts")
    databases, new_queries, mean_flips = [], [], []
    for host_seed in host_seeds:
        dev = new_sim_device(dimm_seed, host_seed)
        queries = [run_query(dev, ch, rng.getrandbits(64))
                   for _ in range(enroll_queries)]
        fresh = run_query(dev, ch, rng.getrandbits(64))
        databases.append(union_of(queries))
        new_queries.append(fresh)
        counts = [len(q.locations) for q in queries + [fresh]]
        mean_flips.append(sum(counts) / len(counts))
    matrix = [[jaccard_prime(q, db) for db in databases] for q in new_queries]
    return MultiHostResult(list(host_seeds), matrix, mean_flips)


def measurements_tradeoff(dev: SimDevice, ch: DramChallenge,
                          m_values: tuple[int, ...] = tuple(range(1, 11)),
                          queries_per_m: int = 5, seed: int = 0) -> ExperimentReport:
    """Reliability and simulated cost as the measurement count varies.

    Work units follow the declared linear model: measurements times banks
    measured times aggressor activations. Reliability per m is
    leave-one-out over ``queries_per_m`` queries.
    """
    if not m_values:
        raise ExperimentError("m_values must be nonempty")
    if queries_per_m < 2:
        raise ExperimentError("leave-one-out needs at least two queries")
    n_aggressors = len(ch.pattern.aggressor_offsets)
    rows, values = [], []
    for m in m_values:
        ch_m = ch.with_measurements(m)
        queries = _make_queries(dev, ch_m, seed, queries_per_m, tag=f"m{m}")
        rels = []
        for i, q in enumerate(queries):
            others = [x for k, x in enumerate(queries) if k != i]
            rels.append(jaccard_prime(q, union_of(others)))
        mean_rel = sum(rels) / len(rels)
        work = m * ch.banks_measured * n_aggressors * WORK_UNITS_PER_ACCESS
        rows.append((m, work, mean_rel, min(rels), max(rels)))
        values.append(mean_rel)
    return ExperimentReport(
        name="measurements-tradeoff",
        columns=("measurements", "work_units", "mean_reliability",
                 "min_reliability", "max_reliability"),
        rows=rows, values=values,
    )
