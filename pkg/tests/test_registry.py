import random

import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.stateful import RuleBasedStateMachine, invariant, rule

from ctdsim.device import generate_ids
from ctdsim.registry import (AuthorizationError, HealthStatus, PreconditionError, Registry,
                             token_hash)

TOKEN = "dr-who"
ALICE, BOB, CHUCK, DANNI, ERIN = generate_ids(5, seed=4)
NOT, RISK, INF = HealthStatus.NOT_AT_RISK, HealthStatus.AT_RISK, HealthStatus.INFECTED


def test_alice_bob_sequence():
    reg = Registry([TOKEN])
    reg.flag_infected(ALICE, TOKEN, now=1440)
    assert reg.query_status(ALICE) is INF
    assert reg.upload_contacts(ALICE, [BOB], TOKEN, now=1450) == [BOB]
    assert reg.query_status(BOB) is RISK
    assert reg.query_status(CHUCK) is NOT
    assert reg.query_status(DANNI) is NOT


def test_reflag_keeps_first_timestamp():
    reg = Registry([TOKEN])
    reg.flag_infected(ALICE, TOKEN, 10)
    reg.flag_infected(ALICE, TOKEN, 99)
    (entry,) = reg.entries()
    assert entry.flagged_at == 10 and entry.flagged_by == token_hash(TOKEN)


def test_at_risk_upgrades_to_infected():
    reg = Registry([TOKEN])
    reg.flag_infected(ALICE, TOKEN, 0)
    reg.upload_contacts(ALICE, [BOB], TOKEN, 5)
    reg.flag_infected(BOB, TOKEN, 50)
    assert reg.query_status(BOB) is INF
    assert [e for e in reg.entries() if e.id == BOB][0].flagged_at == 50


def test_bad_token_changes_nothing():
    reg = Registry([TOKEN])
    with pytest.raises(AuthorizationError):
        reg.flag_infected(ALICE, "not-a-token", 0)
    assert reg.entries() == [] and reg.query_status(ALICE) is NOT
    reg.flag_infected(ALICE, TOKEN, 0)
    with pytest.raises(AuthorizationError):
        reg.upload_contacts(ALICE, [BOB], "nope", 1)
    assert reg.query_status(BOB) is NOT


def test_upload_never_downgrades_and_skips_known():
    reg = Registry([TOKEN])
    reg.flag_infected(ALICE, TOKEN, 0)
    reg.flag_infected(CHUCK, TOKEN, 0)
    assert reg.upload_contacts(ALICE, [ALICE, BOB, CHUCK], TOKEN, 3) == [BOB]
    assert reg.query_status(ALICE) is INF and reg.query_status(CHUCK) is INF


def test_at_risk_source_propagates():
    reg = Registry([TOKEN])
    reg.flag_infected(ALICE, TOKEN, 0)
    reg.upload_contacts(ALICE, [BOB], TOKEN, 1)
    assert reg.upload_contacts(BOB, [ERIN], TOKEN, 2) == [ERIN]
    assert reg.query_status(ERIN) is RISK


def test_unflagged_source_refused():
    reg = Registry([TOKEN])
    with pytest.raises(PreconditionError):
        reg.upload_contacts(CHUCK, [DANNI], TOKEN, 0)
    assert reg.query_status(DANNI) is NOT


def test_snapshot_round_trip():
    reg = Registry([TOKEN])
    reg.flag_infected(ALICE, TOKEN, 0)
    reg.upload_contacts(ALICE, [BOB, CHUCK], TOKEN, 7)
    text = reg.snapshot_csv()
    assert text.splitlines()[0] == "id,status,flagged_at_min,flagged_by_hash"
    again = Registry.from_snapshot(text)
    assert again.entries() == reg.entries()
    assert again.snapshot_csv() == text


@given(st.permutations([BOB, CHUCK, DANNI, ERIN, ALICE]))
def test_upload_order_insensitive(contacts):
    def run(order):
        reg = Registry([TOKEN])
        reg.flag_infected(ALICE, TOKEN, 0)
        reg.flag_infected(DANNI, TOKEN, 0)
        newly = reg.upload_contacts(ALICE, order, TOKEN, 4)
        return reg.snapshot_csv(), newly
    assert run(contacts) == run([ALICE, BOB, CHUCK, DANNI, ERIN])


@given(st.text(min_size=0, max_size=20).filter(lambda t: t not in {TOKEN, "other"}))
def test_auth_soundness(bad):
    reg = Registry([TOKEN, "other"])
    reg.flag_infected(ALICE, TOKEN, 0)
    before = reg.snapshot_csv()
    with pytest.raises(AuthorizationError):
        reg.flag_infected(BOB, bad, 1)
    with pytest.raises(AuthorizationError):
        reg.upload_contacts(ALICE, [BOB], bad, 1)
    assert reg.snapshot_csv() == before


def random_ops(reg, rng, ids, n_ops):
    """Apply a random operation sequence; return the status history."""
    history = []
    for t in range(n_ops):
        op = rng.random()
        token = TOKEN if rng.random() < 0.9 else "forged"
        try:
            if op < 0.3:
                reg.flag_infected(rng.choice(ids), token, t)
            else:
                reg.upload_contacts(rng.choice(ids), rng.sample(ids, rng.randint(0, 4)), token, t)
        except (AuthorizationError, PreconditionError):
            pass
        history.append({i: reg.query_status(i) for i in ids})
    return history


def test_monotone_and_audited_random_sequences():
    ids = generate_ids(8, seed=12)
    rng = random.Random(5)
    for _ in range(500):
        reg = Registry([TOKEN])
        history = random_ops(reg, rng, ids, 20)
        for before, after in zip(history, history[1:]):
            assert all(after[i] >= before[i] for i in ids)
        # every change is in the audit trail with a time and an authority
        changed = {e.id for e in reg.entries()}
        assert changed == {a.id for a in reg.audit}
        for a in reg.audit:
            assert a.new > a.old and a.by == token_hash(TOKEN) and a.at is not None
        for e in reg.entries():
            assert e.status is NOT or (e.flagged_at is not None and e.flagged_by is not None)


class RegistryMachine(RuleBasedStateMachine):
    """Registry against a plain dict model."""

    ids = generate_ids(5, seed=21)

    def __init__(self):
        super().__init__()
        self.reg = Registry([TOKEN])
        self.model = {}
        self.t = 0

    @rule(i=st.integers(0, 4))
    def flag(self, i):
        self.t += 1
        self.reg.flag_infected(self.ids[i], TOKEN, self.t)
        self.model[self.ids[i]] = INF

    @rule(src=st.integers(0, 4), peers=st.lists(st.integers(0, 4), max_size=4))
    def upload(self, src, peers):
        self.t += 1
        source = self.ids[src]
        if self.model.get(source, NOT) < RISK:
            with pytest.raises(PreconditionError):
                self.reg.upload_contacts(source, [self.ids[p] for p in peers], TOKEN, self.t)
            return
        newly = self.reg.upload_contacts(source, [self.ids[p] for p in peers], TOKEN, self.t)
        expected = sorted({self.ids[p] for p in peers if self.model.get(self.ids[p], NOT) is NOT})
        assert newly == expected
        for p in expected:
            self.model[p] = RISK

    @invariant()
    def statuses_match(self):
        for i in self.ids:
            assert self.reg.query_status(i) is self.model.get(i, NOT)


TestRegistryMachine = RegistryMachine.TestCase
TestRegistryMachine.settings = settings(max_examples=50, stateful_step_count=30)
