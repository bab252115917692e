import pytest

from ctdsim.device import generate_ids
from ctdsim.mobility import Person, Scenario, Zone, ZoneKind
from ctdsim.registry import HealthStatus


def barrier_scenario(walled: bool, seed: int = 5) -> Scenario:
    """Two rooms sharing a wall at x=1 with one person pinned in each,
    exactly 1 m apart. Homes and hall are far away and never used."""
    rooms = [Zone("room-a", ZoneKind.WORK, (0.0, 0.0, 1.0, 1.0), walled),
             Zone("room-b", ZoneKind.WORK, (1.0, 0.0, 2.0, 1.0), walled)]
    home = Zone("home", ZoneKind.RESIDENTIAL, (50.0, 50.0, 60.0, 60.0))
    hall = Zone("hall", ZoneKind.COMMUNITY, (80.0, 50.0, 90.0, 60.0))
    ids = generate_ids(2, seed)
    people = tuple(
        Person(i, ids[i], rooms[i], home, hall,
               HealthStatus.INFECTED if i == 0 else HealthStatus.NOT_AT_RISK,
               pinned=(0.5 + i, 0.5))
        for i in range(2))
    return Scenario(seed=seed, zones=(*rooms, home, hall), people=people)


def strip_scenario(walled: bool, seed: int = 5) -> Scenario:
    """Two people kept within ~1 m of each other all day, always on
    opposite sides of a shared wall (one strip pair per schedule segment)."""
    zones = []
    for k, kind in enumerate((ZoneKind.WORK, ZoneKind.COMMUNITY, ZoneKind.RESIDENTIAL)):
        y = 10.0 * k
        zones.append(Zone(f"{kind.value}-a", kind, (0.0, y, 0.5, y + 0.1), walled))
        zones.append(Zone(f"{kind.value}-b", kind, (0.5, y, 1.0, y + 0.1), walled))
    by = {z.name: z for z in zones}
    ids = generate_ids(2, seed)
    people = tuple(
        Person(i, ids[i], by[f"work-{s}"], by[f"residential-{s}"], by[f"community-{s}"],
               HealthStatus.INFECTED if i == 0 else HealthStatus.NOT_AT_RISK)
        for i, s in enumerate("ab"))
    return Scenario(seed=seed, zones=tuple(zones), people=people)


@pytest.fixture
def town_config(tmp_path):
    path = tmp_path / "scenario.yaml"
    path.write_text(
        "schema: 1\n"
        "seed: 84\n"
        "people: 10\n"
        "initial_infected: 2\n"
        "case_study:\n"
        "  policies:\n"
        "    case-I: infected\n"
        "    case-II: \"infected+at_risk:3\"\n"
        "    full: \"infected+at_risk\"\n")
    return path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
