"""Zoned human-mobility simulation and the pairwise contact engine.

People teleport to a uniform random point of the zone their schedule
assigns for each time step. Every unordered pair of active people is then
checked once per step: true distance, walls in between, one shared noise
sample, RSSI, estimated distance. When the estimate falls under the
critical distance both devices store each other's ID.

Randomness is keyed, not streamed: a person's positions depend only on
(seed, person id, day) and a step's noise only on (seed, day, minute), so
quarantining or adding someone leaves everybody else's trajectory intact.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable

import numpy as np

from .device import DEFAULT_D_LIMIT_M, AnonymousId, DeviceState
from .geometry import count_crossings
from .radio import RadioParams, distance_array, distance_from_rssi, rssi_array, rssi_from_distance
from .registry import HealthStatus

MINUTES_PER_DAY = 1440

_POSITION_KEY = 0x905171
_NOISE_KEY = 0x7015E
# pair-steps evaluated per numpy batch
_BATCH_CELLS = 1 << 22


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class ZoneKind(enum.Enum):
    WORK = "work"
    COMMUNITY = "community"
    RESIDENTIAL = "residential"
    OTHER = "other"


@dataclass(frozen=True)
class Zone:
    name: str
    kind: ZoneKind
    bounds: tuple[float, float, float, float]  # x0, y0, x1, y1
    walled: bool = True

    def __post_init__(self):
        x0, y0, x1, y1 = self.bounds
        if not all(math.isfinite(v) for v in self.bounds):
            raise ConfigError(f"zone {self.name!r}: non-finite bounds")
        if not (x1 > x0 and y1 > y0):
            raise ConfigError(f"zone {self.name!r}: bounds must have positive area")

    @property
    def walls(self) -> list[tuple[float, float, float, float]]:
        if not self.walled:
            return []
        x0, y0, x1, y1 = self.bounds
        return [(x0, y0, x1, y0), (x1, y0, x1, y1), (x0, y1, x1, y1), (x0, y0, x0, y1)]

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bounds
        return ((x0 + x1) / 2, (y0 + y1) / 2)

    def contains(self, p, strict: bool = False) -> bool:
        x0, y0, x1, y1 = self.bounds
        if strict:
            return x0 < p[0] < x1 and y0 < p[1] < y1
        return x0 <= p[0] <= x1 and y0 <= p[1] <= y1


@dataclass(frozen=True)
class Schedule:
    step_minutes: int = 5
    work_start: int = 8 * 60
    community_start: int = 17 * 60
    residential_start: int = 20 * 60

    def __post_init__(self):
        if isinstance(self.step_minutes, bool) or not isinstance(self.step_minutes, int) \
                or self.step_minutes <= 0:
            raise ConfigError(f"step_minutes must be a positive integer, got {self.step_minutes!r}")
        if not 0 <= self.work_start < self.community_start < self.residential_start <= MINUTES_PER_DAY:
            raise ConfigError("schedule boundaries must satisfy 0 <= work < community < residential <= 1440")

    def step_times(self, day_index: int = 0) -> np.ndarray:
        return day_index * MINUTES_PER_DAY + np.arange(0, MINUTES_PER_DAY, self.step_minutes)


def segment_for_time(t: int, schedule: Schedule = Schedule()) -> ZoneKind:
    """Which part of the day minute-of-day ``t`` falls in (half-open intervals)."""
    if not 0 <= t < MINUTES_PER_DAY:
        raise ValueError(f"minute of day out of range: {t!r}")
    if schedule.work_start <= t < schedule.community_start:
        return ZoneKind.WORK
    if schedule.community_start <= t < schedule.residential_start:
        return ZoneKind.COMMUNITY
    return ZoneKind.RESIDENTIAL


@dataclass(frozen=True)
class Person:
    index: int
    id: AnonymousId
    workplace: Zone
    residence: Zone
    community: Zone
    initial_status: HealthStatus = HealthStatus.NOT_AT_RISK
    quarantined: bool = False
    # stationary person (e.g. a fixed post); ignores the schedule
    pinned: tuple[float, float] | None = None

    def __post_init__(self):
        if self.workplace.kind is not ZoneKind.WORK:
            raise ConfigError(f"person {self.index}: workplace {self.workplace.name!r} is not a work zone")
        if self.residence.kind is not ZoneKind.RESIDENTIAL:
            raise ConfigError(f"person {self.index}: residence {self.residence.name!r} is not residential")
        if self.community.kind is not ZoneKind.COMMUNITY:
            raise ConfigError(f"person {self.index}: community {self.community.name!r} is not a community zone")

    def zone_for(self, segment: ZoneKind) -> Zone:
        return {ZoneKind.WORK: self.workplace, ZoneKind.COMMUNITY: self.community,
                ZoneKind.RESIDENTIAL: self.residence}[segment]


@dataclass(frozen=True)
class Scenario:
    seed: int
    zones: tuple[Zone, ...]
    people: tuple[Person, ...]
    schedule: Schedule = Schedule()
    radio: RadioParams = RadioParams()
    d_limit: float = DEFAULT_D_LIMIT_M
    # quarantine[k] holds the person indices isolated on day k
    quarantine: tuple[frozenset[int], ...] = ()
    authority_tokens: tuple[str, ...] = ("health-authority",)
    days: int = 1
    case_study: dict = field(default_factory=dict, compare=False)
    config: dict = field(default_factory=dict, compare=False, repr=False)

    def validate(self) -> None:
        ids = [p.id for p in self.people]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate anonymous IDs in scenario")
        if [p.index for p in self.people] != list(range(len(self.people))):
            raise ConfigError("person indices must be 0..N-1 in order")
        if not self.d_limit > 0:
            raise ConfigError(f"d_limit must be > 0, got {self.d_limit!r}")
        names = [z.name for z in self.zones]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate zone names")
        for i, a in enumerate(self.zones):
            for b in self.zones[i + 1:]:
                if _interiors_overlap(a.bounds, b.bounds):
                    raise ConfigError(f"zones {a.name!r} and {b.name!r} overlap")
        known = set(self.zones)
        for p in self.people:
            for z in (p.workplace, p.residence, p.community):
                if z not in known:
                    raise ConfigError(f"person {p.index} refers to zone {z.name!r} missing from the map")
        for day, q in enumerate(self.quarantine):
            bad = sorted(i for i in q if not 0 <= i < len(self.people))
            if bad:
                raise ConfigError(f"quarantine for day {day + 1} names unknown people {bad}")

    def quarantined_on(self, day_index: int) -> frozenset[int]:
        if day_index < len(self.quarantine):
            return self.quarantine[day_index]
        return frozenset()

    def with_quarantine(self, day_index: int, people: Iterable[int]) -> Scenario:
        q = list(self.quarantine) + [frozenset()] * max(0, day_index + 1 - len(self.quarantine))
        q[day_index] = frozenset(people)
        return replace(self, quarantine=tuple(q))

    def people_on(self, day_index: int) -> list[Person]:
        q = self.quarantined_on(day_index)
        return [replace(p, quarantined=p.index in q) for p in self.people]

    def wall_segments(self) -> np.ndarray:
        return unique_walls(self.zones)


def _interiors_overlap(a, b) -> bool:
    return a[0] < b[2] and b[0] < a[2] and a[1] < b[3] and b[1] < a[3]


def unique_walls(zones: Iterable[Zone]) -> np.ndarray:
    """All wall segments of the map; a wall shared by two zones appears once."""
    seen = {}
    for z in zones:
        for x1, y1, x2, y2 in z.walls:
            key = tuple(sorted([(x1, y1), (x2, y2)]))
            seen.setdefault(key, (x1, y1, x2, y2))
    return np.array(list(seen.values()), dtype=float).reshape(-1, 4)


def walls_between(p1, p2, zones: Iterable[Zone]) -> int:
    """Number of zone walls the segment p1-p2 crosses (touching counts)."""
    return int(count_crossings(np.array([p1]), np.array([p2]), unique_walls(zones))[0])


def pair_count(n_active: int) -> int:
    if n_active < 0:
        raise ValueError(f"n_active must be >= 0, got {n_active!r}")
    return n_active * (n_active - 1) // 2


def _id_words(pid: AnonymousId) -> list[int]:
    v = int(pid, 16)
    return [(v >> s) & 0xFFFFFFFF for s in (96, 64, 32, 0)]


def daily_uniforms(seed: int, pid: AnonymousId, day_index: int) -> np.ndarray:
    """(1440, 2) uniforms in [0, 1) for one person and one day, one row per minute."""
    rng = np.random.default_rng([seed, _POSITION_KEY, day_index, *_id_words(pid)])
    return rng.random((MINUTES_PER_DAY, 2))


_cached_uniforms = lru_cache(maxsize=256)(daily_uniforms)


def place(person: Person, segment: ZoneKind, step: int, seed: int) -> tuple[float, float]:
    """Position of ``person`` at absolute minute ``step``.

    Quarantined people sit at the centre of their residence; pinned
    people never move.
    """
    if person.quarantined:
        return person.residence.center
    if person.pinned is not None:
        return tuple(person.pinned)
    day, minute = divmod(int(step), MINUTES_PER_DAY)
    u = _cached_uniforms(seed, person.id, day)[minute]
    x0, y0, x1, y1 = person.zone_for(segment).bounds
    return (x0 + u[0] * (x1 - x0), y0 + u[1] * (y1 - y0))


@dataclass(frozen=True, slots=True)
class ContactEvent:
    step: int
    a: AnonymousId
    b: AnonymousId
    true_distance: float
    walls_crossed: int
    rssi: float
    estimated_distance: float
    recorded: bool


@dataclass
class DayResult:
    day_index: int
    events: list[ContactEvent]
    devices: dict[AnonymousId, DeviceState]
    checks_per_step: list[int]
    recorded_count: int

    @property
    def checks(self) -> int:
        return sum(self.checks_per_step)

    def recorded_events(self) -> list[ContactEvent]:
        return [e for e in self.events if e.recorded]


def new_devices(scenario: Scenario) -> dict[AnonymousId, DeviceState]:
    return {p.id: DeviceState(p.id, scenario.d_limit) for p in scenario.people}


def simulate_day(scenario: Scenario, day_index: int,
                 devices: dict[AnonymousId, DeviceState] | None = None,
                 keep: str = "all") -> DayResult:
    """Run one simulated day.

    ``devices`` carries contact stores over from earlier days and is
    updated in place; a fresh set is created when omitted. ``keep`` is
    ``"all"`` to log every pair check or ``"recorded"`` to log only the
    checks that led to an ID exchange (large populations).
    """
    if keep not in ("all", "recorded"):
        raise ValueError(f"keep must be 'all' or 'recorded', got {keep!r}")
    scenario.validate()
    if devices is None:
        devices = new_devices(scenario)
    radio, d_limit, schedule = scenario.radio, scenario.d_limit, scenario.schedule

    people = sorted(scenario.people_on(day_index), key=lambda p: p.id)
    n = len(people)
    ids = [p.id for p in people]
    steps = schedule.step_times(day_index)
    events: list[ContactEvent] = []
    if n < 2:
        return DayResult(day_index, events, devices, [0] * len(steps), 0)

    zones = list(scenario.zones)
    zone_pos = {z: k for k, z in enumerate(zones)}
    zlo = np.array([z.bounds[:2] for z in zones], dtype=float)
    zhi = np.array([z.bounds[2:] for z in zones], dtype=float)
    walls = scenario.wall_segments()

    quarantined = np.array([p.quarantined for p in people])
    anchors = np.array([p.residence.center for p in people], dtype=float)
    pinned = np.array([p.pinned is not None and not p.quarantined for p in people])
    pins = np.array([p.pinned if p.pinned is not None else (0.0, 0.0) for p in people], dtype=float)
    seg_zone = {seg: np.array([zone_pos[p.zone_for(seg)] for p in people])
                for seg in (ZoneKind.WORK, ZoneKind.COMMUNITY, ZoneKind.RESIDENTIAL)}
    minutes = steps - day_index * MINUTES_PER_DAY
    step_zone = np.stack([seg_zone[segment_for_time(int(m), schedule)] for m in minutes])
    uniforms = np.stack([daily_uniforms(scenario.seed, pid, day_index)[minutes] for pid in ids],
                        axis=1)  # (S, n, 2)

    iu, ju = np.triu_indices(n, 1)
    total_pairs = len(iu)
    active = ~quarantined
    pair_idx = np.nonzero(active[iu] & active[ju])[0]
    ia, ja = iu[pair_idx], ju[pair_idx]
    n_pairs = len(pair_idx)
    checks_per_step = [n_pairs] * len(steps)
    if n_pairs == 0:
        return DayResult(day_index, events, devices, checks_per_step, 0)

    sigma = radio.noise_sigma_db
    threshold = d_limit * (1 + 1e-6)
    recorded_count = 0
    batch = max(1, _BATCH_CELLS // n_pairs)
    for s0 in range(0, len(steps), batch):
        sl = slice(s0, s0 + batch)
        zidx = step_zone[sl]  # (B, n)
        lo, hi = zlo[zidx], zhi[zidx]
        pos = lo + uniforms[sl] * (hi - lo)
        pos[:, quarantined] = anchors[quarantined]
        pos[:, pinned] = pins[pinned]
        interior = np.all((pos > lo) & (pos < hi), axis=2)
        interior[:, quarantined] = True  # anchor is the zone centre
        interior[:, pinned] = False  # a pin may lie anywhere

        pa, pb = pos[:, ia], pos[:, ja]  # (B, P, 2)
        dist = np.hypot(pa[..., 0] - pb[..., 0], pa[..., 1] - pb[..., 1])
        if sigma > 0:
            noise = np.stack([
                np.random.default_rng([scenario.seed, _NOISE_KEY, day_index, int(m)])
                .standard_normal(total_pairs)[pair_idx] * sigma
                for m in minutes[sl]])
        else:
            noise = np.zeros_like(dist)
        rssi = rssi_array(dist, 0, radio, noise)

        # A pair sharing one zone with both people strictly inside it is
        # wall-free: zone interiors are disjoint and rectangles are convex.
        same_zone = (zidx[:, ia] == zidx[:, ja]) & interior[:, ia] & interior[:, ja]
        if keep == "all":
            need_walls = ~same_zone
        else:
            # walls only lower RSSI, so only pairs under the limit without
            # walls can end up recorded
            need_walls = ~same_zone & (distance_array(rssi, radio) < threshold)
        wall_count = np.zeros(dist.shape, dtype=np.int64)
        rows, cols = np.nonzero(need_walls)
        if len(rows):
            wall_count[rows, cols] = count_crossings(pa[rows, cols], pb[rows, cols], walls)
            rssi = rssi - wall_count * radio.wall_attenuation_db
        est = distance_array(rssi, radio)

        candidate = est < threshold
        if keep == "all":
            rows, cols = np.nonzero(np.ones_like(candidate))
        else:
            rows, cols = np.nonzero(candidate)
        for r, c in zip(rows.tolist(), cols.tolist()):
            now = int(steps[s0 + r])
            a, b = ids[ia[c]], ids[ja[c]]
            d, w = float(dist[r, c]), int(wall_count[r, c])
            if candidate[r, c]:
                # scalar path decides the exchange so the logged estimate and
                # the devices agree bit for bit at the threshold
                x = rssi_from_distance(d, w, radio, float(noise[r, c]))
                e = distance_from_rssi(x, radio)
                rec_a = devices[a].on_beacon(b, x, now, radio)
                rec_b = devices[b].on_beacon(a, x, now, radio)
                if rec_a != rec_b:
                    raise AssertionError(f"asymmetric exchange between {a!r} and {b!r}")
                recorded = rec_a
            else:
                x, e, recorded = float(rssi[r, c]), float(est[r, c]), False
            recorded_count += recorded
            if keep == "all" or recorded:
                events.append(ContactEvent(now, a, b, d, w, x, e, recorded))
    return DayResult(day_index, events, devices, checks_per_step, recorded_count)
