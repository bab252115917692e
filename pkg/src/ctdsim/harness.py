"""Experiment pipeline: config -> simulation -> tracing -> registry -> reports."""

from __future__ import annotations

import json
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .config import build_scenario, load_config, scenario_hash
from .device import AnonymousId, DeviceState
from .formats import (contact_matrix, devices_to_csv, events_to_csv, labels_to_csv,
                      matrix_to_csv)
from .mobility import (MINUTES_PER_DAY, ConfigError, Scenario, new_devices, pair_count,
                       simulate_day)
from .registry import HealthStatus, Registry
from .svg import heatmap_svg, snapshots_svg
from .tracing import (Label, RiskLabeling, TemporalContactGraph, compare_policies, initial_seeds,
                      oracle_propagate, propagate_risk, random_instance, simulate_day_one)

log = logging.getLogger(__name__)

# full event logs above this many pair checks per day switch to recorded-only
AUTO_LOG_LIMIT = 2_000_000


class InvariantViolation(AssertionError):
    pass


@dataclass
class ExperimentReport:
    scenario_hash: str
    seed: int
    population: int
    initial_infected: int
    days: list[dict] = field(default_factory=list)
    final_status: dict[str, str] = field(default_factory=dict)
    contact_ids: list[str] = field(default_factory=list)
    contact_matrix: list[list[int | None]] = field(default_factory=list)
    policies: list[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def sync_registry(registry: Registry, devices: Mapping[AnonymousId, DeviceState],
                  auth: str, now: int) -> list[AnonymousId]:
    """Upload the stored contacts of every flagged device, breadth first,
    until no new ID is marked. Returns everything newly marked at-risk."""
    queue = deque(e.id for e in registry.entries() if e.status >= HealthStatus.AT_RISK)
    done, marked = set(), []
    while queue:
        source = queue.popleft()
        if source in done or source not in devices:
            continue
        done.add(source)
        peers = [r.peer for r in devices[source].export_contacts()]
        newly = registry.upload_contacts(source, peers, auth, now)
        marked.extend(newly)
        queue.extend(newly)
    return marked


def check_invariants(scenario: Scenario, events, devices: Mapping[AnonymousId, DeviceState],
                     labels: RiskLabeling, registry: Registry) -> None:
    """Self-checks run after every experiment; raises InvariantViolation."""
    for e in events:
        if e.recorded != (e.estimated_distance < scenario.d_limit):
            raise InvariantViolation(f"recorded flag disagrees with estimate at step {e.step}")
        if e.recorded:
            ra, rb = devices[e.a].contacts.get(e.b), devices[e.b].contacts.get(e.a)
            if ra is None or rb is None or ra.first_contact > e.step or rb.first_contact > e.step:
                raise InvariantViolation(f"devices missing recorded contact {e.a}-{e.b}@{e.step}")
    for own, dev in devices.items():
        if own in dev.contacts:
            raise InvariantViolation(f"device {own} stores its own ID")
        for peer, rec in dev.contacts.items():
            back = devices[peer].contacts.get(own)
            if back is None or back.first_contact != rec.first_contact:
                raise InvariantViolation(f"asymmetric contact stores {own}/{peer}")
    for pid, lab in labels.items():
        if registry.query_status(pid) < lab.status:
            raise InvariantViolation(f"registry status of {pid} below traced label {lab.status.label}")


def _choose_keep(scenario: Scenario, log_mode: str) -> str:
    if log_mode != "auto":
        return log_mode
    checks = pair_count(len(scenario.people)) * len(scenario.schedule.step_times())
    return "all" if checks <= AUTO_LOG_LIMIT else "recorded"


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")


def run_experiment(config_path, out_dir, seed: int | None = None, log_mode: str = "auto"
                   ) -> ExperimentReport:
    """Simulate every configured day and emit logs, snapshot, labels and plots."""
    scenario = build_scenario(load_config(config_path), seed)
    return run_scenario(scenario, out_dir, log_mode)


def run_scenario(scenario: Scenario, out_dir, log_mode: str = "auto") -> ExperimentReport:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    keep = _choose_keep(scenario, log_mode)
    ids = sorted(p.id for p in scenario.people)
    auth = scenario.authority_tokens[0]

    registry = Registry(scenario.authority_tokens)
    for pid, lab in initial_seeds(scenario).items():
        if lab.status is HealthStatus.INFECTED:
            registry.flag_infected(pid, auth, 0)
    devices = new_devices(scenario)
    labels: RiskLabeling = {pid: Label(HealthStatus.NOT_AT_RISK) for pid in ids}
    labels.update(initial_seeds(scenario))

    report = ExperimentReport(scenario_hash(scenario), scenario.seed, len(ids),
                              sum(p.initial_status is HealthStatus.INFECTED for p in scenario.people))
    all_events = []
    for day in range(scenario.days):
        result = simulate_day(scenario, day, devices, keep=keep)
        graph = TemporalContactGraph.from_events(result.events, nodes=ids)
        before = labels
        labels = propagate_risk(graph, labels)
        marked = sync_registry(registry, devices, auth, (day + 1) * MINUTES_PER_DAY)
        log.info("day %d: %d checks, %d recorded, %d newly at risk", day + 1, result.checks,
                 result.recorded_count, sum(1 for k in labels if labels[k] != before.get(k)))
        report.days.append({"day": day + 1, "checks": result.checks,
                            "recorded": result.recorded_count,
                            "quarantined": sorted(scenario.quarantined_on(day)),
                            "registry_marked": len(marked)})
        all_events.extend(result.events)

    check_invariants(scenario, all_events, devices, labels, registry)
    matrix = contact_matrix(ids, devices)
    report.final_status = {pid: labels[pid].status.label for pid in ids}
    report.contact_ids = list(ids)
    report.contact_matrix = matrix

    _write(out / "events.csv", events_to_csv(all_events))
    _write(out / "devices.csv", devices_to_csv(devices))
    _write(out / "registry.csv", registry.snapshot_csv())
    _write(out / "labels.csv", labels_to_csv(labels))
    _write(out / "contact_matrix.csv", matrix_to_csv(ids, matrix))
    _write(out / "contact_matrix.svg", heatmap_svg(ids, matrix))
    _write(out / "snapshots.svg", snapshots_svg(scenario, labels))
    _write(out / "report.json", report.to_json())
    return report


def _policy_rows(seed, outcomes) -> list[dict]:
    return [{"seed": seed, "policy": o.name, "quarantined": sorted(o.quarantined),
             "new_at_risk": o.new_at_risk_count} for o in outcomes]


def run_case_study(config_path, out_dir, seed: int | None = None, sweep: int = 0
                   ) -> ExperimentReport:
    """Day-1 once, then Day-2 under each configured quarantine policy.

    With ``sweep > 0`` the comparison is also repeated for ``sweep``
    consecutive seeds starting at the scenario seed and written to
    ``sweep.csv``.
    """
    config = load_config(config_path)
    scenario = build_scenario(config, seed)
    if not scenario.case_study:
        raise ConfigError("config has no case_study section", config["lines"].get(()))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    day_one = simulate_day_one(scenario)
    outcomes = compare_policies(scenario, scenario.case_study, day_one)
    ids = sorted(p.id for p in scenario.people)
    report = ExperimentReport(scenario_hash(scenario), scenario.seed, len(ids),
                              sum(p.initial_status is HealthStatus.INFECTED for p in scenario.people))
    report.days.append({"day": 1, "recorded": len(day_one.events),
                        "at_risk": sum(l.status is HealthStatus.AT_RISK for l in day_one.labels.values())})
    report.final_status = {pid: day_one.labels[pid].status.label for pid in ids}
    report.contact_ids = list(ids)
    report.contact_matrix = contact_matrix(ids, day_one.devices)
    report.policies = _policy_rows(scenario.seed, outcomes)

    _write(out / "day1_events.csv", events_to_csv(day_one.events))
    _write(out / "day1_labels.csv", labels_to_csv(day_one.labels))
    _write(out / "day1_devices.csv", devices_to_csv(day_one.devices))
    for o in outcomes:
        _write(out / f"day2_{o.name}_events.csv", events_to_csv(o.events))
        _write(out / f"day2_{o.name}_labels.csv", labels_to_csv(o.labels))
    lines = ["policy,quarantined,new_at_risk"]
    lines += [f"{o.name},{' '.join(map(str, sorted(o.quarantined)))},{o.new_at_risk_count}"
              for o in outcomes]
    _write(out / "case_study.csv", "\n".join(lines) + "\n")

    if sweep > 0:
        rows = []
        for s in range(scenario.seed, scenario.seed + sweep):
            sc = build_scenario(config, s)
            rows += _policy_rows(s, compare_policies(sc, sc.case_study))
        lines = ["seed,policy,new_at_risk"] + [f"{r['seed']},{r['policy']},{r['new_at_risk']}"
                                               for r in rows]
        _write(out / "sweep.csv", "\n".join(lines) + "\n")
        means = {}
        for name in scenario.case_study:
            means[name] = float(np.mean([r["new_at_risk"] for r in rows if r["policy"] == name]))
        report.policies.append({"sweep_seeds": sweep, "mean_new_at_risk": means})

    _write(out / "report.json", report.to_json())
    return report


def registry_dump(config_path, out_path, seed: int | None = None) -> Registry:
    """Run the configured days and write only the registry snapshot."""
    scenario = build_scenario(load_config(config_path), seed)
    registry = Registry(scenario.authority_tokens)
    auth = scenario.authority_tokens[0]
    for pid, lab in initial_seeds(scenario).items():
        if lab.status is HealthStatus.INFECTED:
            registry.flag_infected(pid, auth, 0)
    devices = new_devices(scenario)
    for day in range(scenario.days):
        simulate_day(scenario, day, devices, keep="recorded")
        sync_registry(registry, devices, auth, (day + 1) * MINUTES_PER_DAY)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    _write(Path(out_path), registry.snapshot_csv())
    return registry


def oracle_check(instances: int = 200, seed: int = 0, max_nodes: int = 12, max_steps: int = 50
                 ) -> list[int]:
    """Differential run of propagate_risk against the replay oracle.

    Returns the indices of mismatching instances (empty when all agree).
    """
    rng = np.random.default_rng(seed)
    mismatches = []
    for k in range(instances):
        edges, seeds = random_instance(rng, max_nodes, max_steps, max_edges=3 * max_nodes)
        fast = propagate_risk(TemporalContactGraph.from_events(edges), seeds)
        slow = oracle_propagate(edges, seeds)
        if fast != slow:
            mismatches.append(k)
    return mismatches
