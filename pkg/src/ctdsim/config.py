"""Scenario configuration files.

A scenario is a single YAML document (``schema: 1``). Every validation
error is raised as :class:`ConfigError` carrying the line of the
offending key, so the CLI can print ``file:line: message``.

Example::

    schema: 1
    seed: 7
    d_limit_m: 1.83
    radio: {path_loss_exponent: 2.0, wall_attenuation_db: 15.0}
    schedule: {step_minutes: 5}
    people: 10            # or an explicit list, see below
    initial_infected: 2
    quarantine: [[], [0, 3]]
    case_study:
      policies: {case-I: infected, case-II: "infected+at_risk:3"}

Explicit people look like ``{workplace: office-a, residence: home-1,
status: infected}``; ``community`` is optional and defaults to the first
community zone, and ``position: [x, y]`` pins a person in place all day.
Without ``zones`` the generated default map is used.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .device import DEFAULT_D_LIMIT_M, IdCollisionError, generate_ids
from .mobility import ConfigError, Person, Scenario, Schedule, Zone, ZoneKind
from .radio import InvalidParameterError, RadioParams
from .registry import HealthStatus

SCHEMA_VERSION = 1
DEFAULT_INITIAL_INFECTED = 2
DEFAULT_AUTHORITY = "health-authority"

_TOP_KEYS = {"schema", "seed", "d_limit_m", "days", "radio", "schedule", "zones", "people",
             "initial_infected", "quarantine", "case_study", "authority_tokens"}
_RADIO_KEYS = {"path_loss_exponent": "path_loss_exponent",
               "system_constant_dbm": "system_constant_dbm",
               "noise_sigma_db": "noise_sigma_db",
               "wall_attenuation_db": "wall_attenuation_db",
               "min_distance_m": "min_distance_m"}
_SCHEDULE_KEYS = {"step_minutes", "work_start", "community_start", "residential_start"}


def default_map(n_people: int) -> tuple[list[Zone], list[tuple[str, str]]]:
    """Invented town layout scaled to ``n_people``.

    Offices hold five people, homes two, and everybody shares one
    community hall. Returns the zones and a (workplace, residence) name
    pair per person.
    """
    n_work = max(1, math.ceil(n_people / 5))
    n_home = max(1, math.ceil(n_people / 2))
    zones = []
    gap = 5.0
    office, home = 100.0, 12.0
    cols = max(1, math.ceil(math.sqrt(n_work)))
    for k in range(n_work):
        x, y = (k % cols) * (office + gap), (k // cols) * (office + gap)
        zones.append(Zone(f"office-{k + 1}", ZoneKind.WORK, (x, y, x + office, y + office)))
    work_width = cols * (office + gap)
    hall = math.sqrt(1000.0 * max(n_people, 1))
    zones.append(Zone("hall", ZoneKind.COMMUNITY, (work_width, 0.0, work_width + hall, hall)))
    x_home = work_width + hall + gap
    cols = max(1, math.ceil(math.sqrt(n_home)))
    for k in range(n_home):
        x, y = x_home + (k % cols) * (home + gap), (k // cols) * (home + gap)
        zones.append(Zone(f"home-{k + 1}", ZoneKind.RESIDENTIAL, (x, y, x + home, y + home)))
    assignment = [(f"office-{i % n_work + 1}", f"home-{i // 2 + 1}") for i in range(n_people)]
    return zones, assignment


def _key_lines(node, path=(), out=None) -> dict[tuple, int]:
    if out is None:
        out = {}
    out.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _key_lines(v, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _key_lines(v, path + (i,), out)
    return out


class _Checker:
    def __init__(self, lines: dict[tuple, int]):
        self.lines = lines

    def fail(self, message: str, path=()):
        path = tuple(path)
        while path and path not in self.lines:
            path = path[:-1]
        raise ConfigError(message, self.lines.get(path))

    def number(self, value, path, *, positive=False, integer=False, minimum=None):
        name = ".".join(str(p) for p in path)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"{name} must be a number, got {value!r}", path)
        if integer and not isinstance(value, int):
            self.fail(f"{name} must be an integer, got {value!r}", path)
        if not math.isfinite(value):
            self.fail(f"{name} must be finite", path)
        if positive and not value > 0:
            self.fail(f"{name} must be > 0, got {value!r}", path)
        if minimum is not None and value < minimum:
            self.fail(f"{name} must be >= {minimum}, got {value!r}", path)
        return value

    def mapping(self, value, path, allowed):
        if not isinstance(value, dict):
            self.fail(f"{'.'.join(map(str, path)) or 'config'} must be a mapping", path)
        for key in value:
            if key not in allowed:
                self.fail(f"unknown key {key!r}", tuple(path) + (key,))
        return value


def load_config(path: str | Path) -> dict:
    """Read and parse a scenario file, keeping key line numbers for errors."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_config(text)


def parse_config(text: str) -> dict:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                          None if mark is None else mark.line + 1) from None
    lines = _key_lines(node) if node is not None else {}
    if data is None:
        data = {}
    _Checker(lines).mapping(data, (), _TOP_KEYS)
    return {"data": data, "lines": lines}


def build_scenario(config: dict, seed: int | None = None) -> Scenario:
    """Validate a parsed config and materialise the :class:`Scenario`.

    ``seed`` overrides the file's seed (IDs, infected picks and all
    trajectories follow it).
    """
    data, chk = config["data"], _Checker(config["lines"])

    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        chk.fail(f"unsupported schema {schema!r} (expected {SCHEMA_VERSION})", ("schema",))
    if seed is None:
        seed = chk.number(data.get("seed", 0), ("seed",), integer=True, minimum=0)
    d_limit = float(chk.number(data.get("d_limit_m", DEFAULT_D_LIMIT_M), ("d_limit_m",), positive=True))
    days = chk.number(data.get("days", 1), ("days",), integer=True, minimum=1)

    radio_cfg = chk.mapping(data.get("radio", {}), ("radio",), _RADIO_KEYS)
    for k, v in radio_cfg.items():
        chk.number(v, ("radio", k))
        try:  # each field's constraint is independent, so blame the key itself
            RadioParams(**{_RADIO_KEYS[k]: float(v)})
        except InvalidParameterError as exc:
            chk.fail(str(exc), ("radio", k))
    try:
        radio = RadioParams(**{_RADIO_KEYS[k]: float(v) for k, v in radio_cfg.items()})
    except InvalidParameterError as exc:
        chk.fail(str(exc), ("radio",))

    sched_cfg = chk.mapping(data.get("schedule", {}), ("schedule",), _SCHEDULE_KEYS)
    for k, v in sched_cfg.items():
        chk.number(v, ("schedule", k), integer=True, minimum=0, positive=k == "step_minutes")
    try:
        schedule = Schedule(**sched_cfg)
    except ConfigError as exc:
        chk.fail(str(exc), ("schedule",))

    people_cfg = data.get("people", 10)
    zones_cfg = data.get("zones")
    if zones_cfg is None:
        if not isinstance(people_cfg, int) or isinstance(people_cfg, bool):
            chk.fail("explicit people need an explicit zones list", ("people",))
        chk.number(people_cfg, ("people",), integer=True, minimum=0)
        zones, assignment = default_map(people_cfg)
    else:
        zones = _parse_zones(zones_cfg, chk)
        assignment = None
    by_name = {z.name: z for z in zones}
    communities = [z for z in zones if z.kind is ZoneKind.COMMUNITY]

    specs = []  # (workplace, residence, community, status or None, path, pinned position)
    if isinstance(people_cfg, int) and not isinstance(people_cfg, bool):
        chk.number(people_cfg, ("people",), integer=True, minimum=0)
        if assignment is None:
            works = [z.name for z in zones if z.kind is ZoneKind.WORK]
            homes = [z.name for z in zones if z.kind is ZoneKind.RESIDENTIAL]
            if people_cfg and not (works and homes):
                chk.fail("people given as a count need at least one work and one residential zone",
                         ("zones",))
            assignment = [(works[i % len(works)], homes[i % len(homes)]) for i in range(people_cfg)]
        specs = [(w, h, None, None, ("people",), None) for w, h in assignment]
    elif isinstance(people_cfg, list):
        for i, p in enumerate(people_cfg):
            path = ("people", i)
            chk.mapping(p, path, {"workplace", "residence", "community", "status", "position"})
            for key in ("workplace", "residence"):
                if key not in p:
                    chk.fail(f"person {i} is missing {key!r}", path)
            status = None
            if "status" in p:
                try:
                    status = HealthStatus.parse(str(p["status"]))
                except ValueError as exc:
                    chk.fail(str(exc), path + ("status",))
            pin = p.get("position")
            if pin is not None:
                if not isinstance(pin, list) or len(pin) != 2:
                    chk.fail(f"person {i}: position must be [x, y]", path + ("position",))
                pin = tuple(float(chk.number(v, path + ("position", j))) for j, v in enumerate(pin))
            specs.append((p["workplace"], p["residence"], p.get("community"), status, path, pin))
    else:
        chk.fail("people must be a count or a list", ("people",))

    explicit_status = any(s[3] is not None for s in specs)
    if "initial_infected" in data and explicit_status:
        chk.fail("initial_infected conflicts with explicit per-person statuses", ("initial_infected",))
    n = len(specs)
    statuses = [s[3] or HealthStatus.NOT_AT_RISK for s in specs]
    if not explicit_status:
        k = chk.number(data.get("initial_infected", min(DEFAULT_INITIAL_INFECTED, n)),
                       ("initial_infected",), integer=True, minimum=0)
        if k > n:
            chk.fail(f"initial_infected={k} exceeds population {n}", ("initial_infected",))
        rng = np.random.default_rng([seed, 0x1F])
        for i in rng.choice(n, size=k, replace=False):
            statuses[int(i)] = HealthStatus.INFECTED

    try:
        ids = generate_ids(n, seed)
    except IdCollisionError as exc:
        chk.fail(str(exc), ("seed",))
    people = []
    for i, (w, h, c, _, path, pin) in enumerate(specs):
        for key, name in (("workplace", w), ("residence", h), ("community", c)):
            if name is not None and name not in by_name:
                chk.fail(f"person {i}: unknown zone {name!r}", path + (key,) if path[-1] != "people" else path)
        if c is None:
            if not communities:
                chk.fail("the map has no community zone", ("zones",))
            community = communities[0]
        else:
            community = by_name[c]
        try:
            people.append(Person(i, ids[i], by_name[w], by_name[h], community, statuses[i],
                                 pinned=pin))
        except ConfigError as exc:
            chk.fail(str(exc), path)

    quarantine = _parse_quarantine(data.get("quarantine", []), n, chk)
    tokens = data.get("authority_tokens", [DEFAULT_AUTHORITY])
    if not isinstance(tokens, list) or not tokens or not all(isinstance(t, str) and t for t in tokens):
        chk.fail("authority_tokens must be a non-empty list of strings", ("authority_tokens",))

    case_study = {}
    if "case_study" in data:
        cs = chk.mapping(data["case_study"], ("case_study",), {"policies"})
        policies = cs.get("policies")
        if not isinstance(policies, dict) or not policies:
            chk.fail("case_study.policies must be a non-empty mapping name -> policy",
                     ("case_study", "policies"))
        for name, spec in policies.items():
            if not isinstance(spec, (str, list)):
                chk.fail(f"policy {name!r} must be a string or a list of person indices",
                         ("case_study", "policies", name))
            if isinstance(spec, list):
                _indices(spec, n, chk, ("case_study", "policies", name))
        case_study = {str(k): v for k, v in policies.items()}

    scenario = Scenario(seed=seed, zones=tuple(zones), people=tuple(people), schedule=schedule,
                        radio=radio, d_limit=d_limit, quarantine=quarantine,
                        authority_tokens=tuple(tokens), days=days, case_study=case_study)
    try:
        scenario.validate()
    except ConfigError as exc:
        chk.fail(str(exc), ("zones",))
    return _with_canonical(scenario)


def _parse_zones(zones_cfg, chk: _Checker) -> list[Zone]:
    if not isinstance(zones_cfg, list):
        chk.fail("zones must be a list", ("zones",))
    zones = []
    for i, z in enumerate(zones_cfg):
        path = ("zones", i)
        chk.mapping(z, path, {"name", "kind", "bounds", "walled"})
        for key in ("name", "kind", "bounds"):
            if key not in z:
                chk.fail(f"zone {i} is missing {key!r}", path)
        try:
            kind = ZoneKind(str(z["kind"]).lower())
        except ValueError:
            chk.fail(f"zone {i}: unknown kind {z['kind']!r}", path + ("kind",))
        bounds = z["bounds"]
        if not isinstance(bounds, list) or len(bounds) != 4:
            chk.fail(f"zone {i}: bounds must be [x0, y0, x1, y1]", path + ("bounds",))
        for j, v in enumerate(bounds):
            chk.number(v, path + ("bounds", j))
        walled = z.get("walled", True)
        if not isinstance(walled, bool):
            chk.fail(f"zone {i}: walled must be true or false", path + ("walled",))
        try:
            zones.append(Zone(str(z["name"]), kind, tuple(float(v) for v in bounds), walled))
        except ConfigError as exc:
            chk.fail(str(exc), path + ("bounds",))
    return zones


def _indices(values, n: int, chk: _Checker, path) -> frozenset[int]:
    if not isinstance(values, list):
        chk.fail("expected a list of person indices", path)
    for j, v in enumerate(values):
        chk.number(v, tuple(path) + (j,), integer=True, minimum=0)
        if v >= n:
            chk.fail(f"person index {v} out of range (population {n})", tuple(path) + (j,))
    return frozenset(values)


def _parse_quarantine(value, n: int, chk: _Checker) -> tuple[frozenset[int], ...]:
    if not isinstance(value, list):
        chk.fail("quarantine must be a list of per-day index lists", ("quarantine",))
    return tuple(_indices(day, n, chk, ("quarantine", k)) for k, day in enumerate(value))


def canonical_form(scenario: Scenario) -> dict[str, Any]:
    """Everything that changes a run, in a key-order-free JSON-able form."""
    return {
        "schema": SCHEMA_VERSION,
        "seed": scenario.seed,
        "d_limit_m": scenario.d_limit,
        "days": scenario.days,
        "radio": scenario.radio.to_dict(),
        "schedule": {"step_minutes": scenario.schedule.step_minutes,
                     "work_start": scenario.schedule.work_start,
                     "community_start": scenario.schedule.community_start,
                     "residential_start": scenario.schedule.residential_start},
        "zones": [{"name": z.name, "kind": z.kind.value, "bounds": list(z.bounds), "walled": z.walled}
                  for z in scenario.zones],
        "people": [{"workplace": p.workplace.name, "residence": p.residence.name,
                    "community": p.community.name, "status": p.initial_status.label,
                    "position": None if p.pinned is None else list(p.pinned)}
                   for p in scenario.people],
        "quarantine": [sorted(q) for q in scenario.quarantine],
        "authorities": sorted(hashlib.sha256(t.encode()).hexdigest() for t in scenario.authority_tokens),
        "case_study": {k: (v if isinstance(v, str) else sorted(v))
                       for k, v in sorted(scenario.case_study.items())},
    }


def scenario_hash(scenario: Scenario) -> str:
    blob = json.dumps(canonical_form(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _with_canonical(scenario: Scenario) -> Scenario:
    scenario.config.update(canonical_form(scenario))
    return scenario


def default_scenario(n_people: int = 10, seed: int = 0, initial_infected: int = DEFAULT_INITIAL_INFECTED,
                     **overrides) -> Scenario:
    """The stock town: default map, ``n_people`` people, random infected."""
    data = {"schema": SCHEMA_VERSION, "seed": seed, "people": n_people,
            "initial_infected": min(initial_infected, n_people)}
    data.update(overrides)
    return build_scenario({"data": data, "lines": {}})
