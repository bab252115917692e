"""Risk labels over the temporal contact graph.

Risk travels only along chronologically consistent chains: a person
becomes at-risk at step t when they share a recorded contact at t with
someone already infected or at-risk at or before t. Contacts within one
step chain freely, since a step is a coarse time snap.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations, groupby
from typing import Iterable, Mapping, NamedTuple

from .device import AnonymousId, DeviceState
from .mobility import ConfigError, Scenario, simulate_day
from .registry import HealthStatus


class Label(NamedTuple):
    status: HealthStatus
    step: int | None = None


RiskLabeling = dict[AnonymousId, Label]
Edge = tuple[AnonymousId, AnonymousId, int]


@dataclass
class TemporalContactGraph:
    nodes: set[AnonymousId] = field(default_factory=set)
    edges: list[Edge] = field(default_factory=list)

    @classmethod
    def from_events(cls, events: Iterable, nodes: Iterable[AnonymousId] = ()) -> TemporalContactGraph:
        """Build from ContactEvents (only recorded ones) or (a, b, step) triples."""
        graph = cls(set(nodes))
        for ev in events:
            if isinstance(ev, tuple):
                a, b, step = ev
            elif ev.recorded:
                a, b, step = ev.a, ev.b, ev.step
            else:
                continue
            graph.add_edge(a, b, step)
        return graph

    def add_edge(self, a: AnonymousId, b: AnonymousId, step: int) -> None:
        self.nodes.update((a, b))
        self.edges.append((a, b, int(step)))

    def neighbours_since(self, node: AnonymousId, step: int) -> set[AnonymousId]:
        """Peers that ``node`` contacted at or after ``step``."""
        out = set()
        for a, b, t in self.edges:
            if t >= step:
                if a == node:
                    out.add(b)
                elif b == node:
                    out.add(a)
        return out


def _normalise_seeds(seeds) -> dict[AnonymousId, Label]:
    if isinstance(seeds, Mapping):
        return {AnonymousId(k): Label(HealthStatus(v[0]), None if v[1] is None else int(v[1]))
                for k, v in seeds.items()}
    return {AnonymousId(s): Label(HealthStatus.INFECTED, 0) for s in seeds}


def _initial(nodes: Iterable[AnonymousId], seeds) -> RiskLabeling:
    labels = {n: Label(HealthStatus.NOT_AT_RISK) for n in nodes}
    for node, label in _normalise_seeds(seeds).items():
        if label.status is not HealthStatus.NOT_AT_RISK:
            labels[node] = label
        else:
            labels.setdefault(node, label)
    return labels


def _exposed(label: Label | None, step: int) -> bool:
    return (label is not None and label.status is not HealthStatus.NOT_AT_RISK
            and label.step is not None and label.step <= step)


def propagate_risk(graph: TemporalContactGraph, seeds) -> RiskLabeling:
    """Label every node by temporal reachability from ``seeds``.

    ``seeds`` is either an iterable of IDs (infected at step 0) or a
    mapping ID -> (status, step), e.g. an earlier day's labeling.
    Edges are grouped by step; within a step, each connected component
    containing an exposed node becomes at-risk at that step.
    """
    labels = _initial(graph.nodes, seeds)
    for step, group in groupby(sorted(graph.edges, key=lambda e: e[2]), key=lambda e: e[2]):
        parent: dict[AnonymousId, AnonymousId] = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b, _ in group:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        components = defaultdict(list)
        for node in parent:
            components[find(node)].append(node)
        for members in components.values():
            if any(_exposed(labels[m], step) for m in members):
                for m in members:
                    if labels[m].status is HealthStatus.NOT_AT_RISK:
                        labels[m] = Label(HealthStatus.AT_RISK, step)
    return labels


def oracle_propagate(events: Iterable, seeds) -> RiskLabeling:
    """Reference labeling by plain chronological replay.

    Walks the steps in order and sweeps that step's contacts repeatedly
    until nothing new is marked. Quadratic and slow; meant for small
    instances in tests.
    """
    triples = []
    for ev in events:
        if isinstance(ev, tuple):
            triples.append((ev[0], ev[1], int(ev[2])))
        elif ev.recorded:
            triples.append((ev.a, ev.b, int(ev.step)))
    status: dict[AnonymousId, HealthStatus] = {}
    since: dict[AnonymousId, int | None] = {}
    for a, b, _ in triples:
        status[a] = status[b] = HealthStatus.NOT_AT_RISK
        since[a] = since[b] = None
    for node, (st, t) in _normalise_seeds(seeds).items():
        if st is not HealthStatus.NOT_AT_RISK or node not in status:
            status[node], since[node] = st, t
    for step in sorted({t for _, _, t in triples}):
        todays = [(a, b) for a, b, t in triples if t == step]
        changed = True
        while changed:
            changed = False
            for a, b in todays:
                for src, dst in ((a, b), (b, a)):
                    src_exposed = (status[src] is not HealthStatus.NOT_AT_RISK
                                   and since[src] is not None and since[src] <= step)
                    if src_exposed and status[dst] is HealthStatus.NOT_AT_RISK:
                        status[dst], since[dst] = HealthStatus.AT_RISK, step
                        changed = True
    return {k: Label(status[k], since[k]) for k in status}


def newly_at_risk(before: RiskLabeling, after: RiskLabeling) -> list[AnonymousId]:
    """IDs that were not at risk in ``before`` and are at risk in ``after``."""
    return sorted(k for k, v in after.items()
                  if v.status is HealthStatus.AT_RISK
                  and before.get(k, Label(HealthStatus.NOT_AT_RISK)).status is HealthStatus.NOT_AT_RISK)


def initial_seeds(scenario: Scenario) -> dict[AnonymousId, Label]:
    return {p.id: Label(p.initial_status, 0) for p in scenario.people
            if p.initial_status is not HealthStatus.NOT_AT_RISK}


def resolve_policy(policy, scenario: Scenario, labels: RiskLabeling) -> frozenset[int]:
    """Turn a quarantine policy into the set of person indices to isolate.

    Accepted forms: ``"none"``, ``"everyone"``, ``"infected"``,
    ``"infected+at_risk"`` (all at-risk), ``"infected+at_risk:K"`` (the K
    earliest-exposed at-risk people, ties by person index), or an explicit
    collection of person indices.
    """
    people = scenario.people
    if not isinstance(policy, str):
        chosen = frozenset(int(i) for i in policy)
        unknown = sorted(i for i in chosen if not 0 <= i < len(people))
        if unknown:
            raise ConfigError(f"quarantine policy names unknown people {unknown}")
        return chosen

    def status(p):
        return labels.get(p.id, Label(HealthStatus.NOT_AT_RISK)).status

    text = policy.strip().lower().replace("-", "_")
    if text == "none":
        return frozenset()
    if text == "everyone":
        return frozenset(p.index for p in people)
    infected = {p.index for p in people if status(p) is HealthStatus.INFECTED}
    if text == "infected":
        return frozenset(infected)
    if text.startswith("infected+at_risk"):
        at_risk = sorted((labels[p.id].step, p.index) for p in people
                         if status(p) is HealthStatus.AT_RISK)
        rest = text[len("infected+at_risk"):]
        if rest:
            if not rest.startswith(":") or not rest[1:].isdigit():
                raise ConfigError(f"bad quarantine policy {policy!r}")
            at_risk = at_risk[:int(rest[1:])]
        return frozenset(infected | {i for _, i in at_risk})
    raise ConfigError(f"unknown quarantine policy {policy!r}")


@dataclass
class PolicyOutcome:
    name: str
    quarantined: frozenset[int]
    new_at_risk: list[AnonymousId]
    labels: RiskLabeling
    events: list = field(default_factory=list, repr=False)

    @property
    def new_at_risk_count(self) -> int:
        return len(self.new_at_risk)


@dataclass
class DayOneOutcome:
    labels: RiskLabeling
    devices: dict[AnonymousId, DeviceState]
    events: list = field(default_factory=list, repr=False)


def simulate_day_one(scenario: Scenario) -> DayOneOutcome:
    day1 = simulate_day(scenario, 0, keep="recorded")
    graph = TemporalContactGraph.from_events(day1.events, nodes=[p.id for p in scenario.people])
    labels = propagate_risk(graph, initial_seeds(scenario))
    return DayOneOutcome(labels, day1.devices, day1.events)


def compare_policies(scenario: Scenario, policies, day_one: DayOneOutcome | None = None
                     ) -> list[PolicyOutcome]:
    """Re-run Day-2 once per quarantine policy and count fresh at-risk labels.

    ``policies`` is a list of policy specs (see :func:`resolve_policy`)
    or a mapping name -> spec.
    """
    if day_one is None:
        day_one = simulate_day_one(scenario)
    items = policies.items() if isinstance(policies, Mapping) else \
        ((f"policy-{k + 1}", p) for k, p in enumerate(policies))
    ids = [p.id for p in scenario.people]
    outcomes = []
    for name, policy in items:
        chosen = resolve_policy(policy, scenario, day_one.labels)
        day2 = simulate_day(scenario.with_quarantine(1, chosen), 1,
                            devices={k: d.copy() for k, d in day_one.devices.items()},
                            keep="recorded")
        graph = TemporalContactGraph.from_events(day2.events, nodes=ids)
        labels = propagate_risk(graph, day_one.labels)
        outcomes.append(PolicyOutcome(name, chosen, newly_at_risk(day_one.labels, labels),
                                      labels, day2.events))
    return outcomes


def random_instance(rng, max_nodes: int = 6, max_steps: int = 10, max_edges: int = 15
                    ) -> tuple[list[Edge], list[AnonymousId]]:
    """A random small edge list and seed set for differential testing.

    ``rng`` is a :class:`numpy.random.Generator`.
    """
    n = int(rng.integers(2, max_nodes + 1))
    nodes = [AnonymousId(f"{k:032x}") for k in range(n)]
    pairs = list(combinations(nodes, 2))
    n_edges = int(rng.integers(0, max_edges + 1))
    edges = []
    for _ in range(n_edges):
        a, b = pairs[int(rng.integers(len(pairs)))]
        edges.append((a, b, int(rng.integers(0, max_steps))))
    n_seeds = int(rng.integers(1, min(3, n) + 1))
    seeds = [nodes[int(i)] for i in rng.choice(n, size=n_seeds, replace=False)]
    return edges, seeds
