import textwrap

import pytest

from ctdsim.config import (build_scenario, default_map, default_scenario, load_config, parse_config,
                           scenario_hash)
from ctdsim.mobility import ConfigError, ZoneKind
from ctdsim.registry import HealthStatus

BASE = """\
schema: 1
seed: 3
people: 10
radio:
  path_loss_exponent: 2.0
  wall_attenuation_db: 15.0
schedule:
  step_minutes: 5
"""

ROOMS = """\
schema: 1
seed: 1
zones:
  - {name: a, kind: work, bounds: [0, 0, 1, 1]}
  - {name: b, kind: work, bounds: [1, 0, 2, 1]}
  - {name: h, kind: residential, bounds: [10, 10, 20, 20]}
  - {name: c, kind: community, bounds: [30, 0, 40, 10]}
people:
  - {workplace: a, residence: h, status: infected, position: [0.5, 0.5]}
  - {workplace: b, residence: h, community: c}
"""


def build(text, seed=None):
    return build_scenario(parse_config(textwrap.dedent(text)), seed)


def line_of(text):
    with pytest.raises(ConfigError) as err:
        build(text)
    return err.value.line


def test_base_builds():
    sc = build(BASE)
    assert len(sc.people) == 10 and sc.seed == 3
    assert sum(p.initial_status is HealthStatus.INFECTED for p in sc.people) == 2
    assert sc.radio.wall_attenuation_db == 15.0 and sc.d_limit == 1.83


@pytest.mark.parametrize("text,line", [
    (BASE.replace("path_loss_exponent: 2.0", "path_loss_exponent: -1"), 5),
    (BASE.replace("wall_attenuation_db: 15.0", "wall_attenuation_db: loud"), 6),
    (BASE.replace("step_minutes: 5", "step_minutes: 0"), 8),
    (BASE.replace("step_minutes: 5", "step_minutes: 5\n  work_start: 1300"), 7),
    (BASE + "d_limit_m: 0\n", 9),
    (BASE + "colour: red\n", 9),
    (BASE + "initial_infected: 11\n", 9),
    (BASE.replace("schema: 1", "schema: 2"), 1),
    (ROOMS.replace("kind: work, bounds: [1", "kind: office, bounds: [1"), 5),
    (ROOMS.replace("residence: h, community", "residence: x, community"), 10),
    (ROOMS.replace("[1, 0, 2, 1]", "[0.5, 0, 2, 1]"), 3),
    (ROOMS + "quarantine: [[0, 7]]\n", 11),
])
def test_errors_point_at_line(text, line):
    assert line_of(text) == line


def test_yaml_syntax_error_has_line():
    with pytest.raises(ConfigError) as err:
        parse_config("schema: 1\nseed: [1, 2\npeople: 3\n")
    assert err.value.line is not None and "YAML" in str(err.value)


def test_load_from_file(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(BASE)
    assert scenario_hash(build_scenario(load_config(path))) == scenario_hash(build(BASE))


def test_seed_override():
    sc = build(BASE, seed=99)
    assert sc.seed == 99
    assert scenario_hash(sc) == scenario_hash(build(BASE.replace("seed: 3", "seed: 99")))
    assert [p.id for p in sc.people] != [p.id for p in build(BASE).people]


def test_hash_ignores_layout():
    reordered = """\
    schedule: {step_minutes: 5}
    radio: {wall_attenuation_db: 15.0,   path_loss_exponent: 2}
    people: 10   # same town
    seed: 3

    schema: 1
    """
    assert scenario_hash(build(reordered)) == scenario_hash(build(BASE))


@pytest.mark.parametrize("old,new", [
    ("seed: 3", "seed: 4"), ("people: 10", "people: 11"), ("step_minutes: 5", "step_minutes: 10"),
    ("wall_attenuation_db: 15.0", "wall_attenuation_db: 14.0"),
    ("schema: 1", "schema: 1\nd_limit_m: 2.0"),
    ("schema: 1", "schema: 1\ninitial_infected: 3"),
    ("schema: 1", "schema: 1\nauthority_tokens: [someone-else]"),
    ("schema: 1", "schema: 1\nquarantine: [[1]]"),
])
def test_hash_tracks_meaningful_changes(old, new):
    assert scenario_hash(build(BASE.replace(old, new))) != scenario_hash(build(BASE))


def test_explicit_people_and_pins():
    sc = build(ROOMS)
    a, b = sc.people
    assert a.pinned == (0.5, 0.5) and b.pinned is None
    assert a.initial_status is HealthStatus.INFECTED and b.initial_status is HealthStatus.NOT_AT_RISK
    assert b.community.name == "c" and a.community.name == "c"
    moved = ROOMS.replace("position: [0.5, 0.5]", "position: [0.25, 0.5]")
    assert scenario_hash(build(moved)) != scenario_hash(sc)


def test_initial_infected_conflicts_with_statuses():
    assert line_of(ROOMS + "initial_infected: 1\n") == 11


def test_explicit_people_need_zones():
    with pytest.raises(ConfigError):
        build("schema: 1\npeople:\n  - {workplace: a, residence: b}\n")


def test_zero_people():
    sc = build("schema: 1\npeople: 0\n")
    assert sc.people == ()


def test_default_map_kinds():
    for n in (1, 10, 37):
        zones, assignment = default_map(n)
        kinds = {z.kind for z in zones}
        assert {ZoneKind.WORK, ZoneKind.RESIDENTIAL, ZoneKind.COMMUNITY} <= kinds
        assert len(assignment) == n


def test_default_scenario_infected_count():
    for seed in range(20):
        sc = default_scenario(10, seed=seed)
        assert sum(p.initial_status is HealthStatus.INFECTED for p in sc.people) == 2
    assert default_scenario(1, seed=0).people[0].initial_status is HealthStatus.INFECTED
