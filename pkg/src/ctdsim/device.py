"""Contact-tracing device (CTD) state.

A device holds its own anonymous ID (the ROM role), a deduplicated store
of peers it has been close to (the NVM role) and a small scratch map used
to debounce repeat encounters (the RAM role). It never sees names,
positions or trajectories.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .radio import RadioParams, distance_from_rssi

DEFAULT_D_LIMIT_M = 1.83  # 6 ft
RECONTACT_INTERVAL_MIN = 30

_HEX32 = re.compile(r"[0-9a-f]{32}")


class SelfBeaconError(RuntimeError):
    """A device was handed its own ID; the simulation wiring is broken."""


class IdCollisionError(ValueError):
    pass


class AnonymousId(str):
    """128-bit opaque token rendered as 32 lowercase hex characters."""

    __slots__ = ()

    def __new__(cls, token: str):
        if isinstance(token, AnonymousId):
            return token
        if not isinstance(token, str) or not _HEX32.fullmatch(token):
            raise ValueError(f"not a 32-char lowercase hex token: {token!r}")
        return super().__new__(cls, token)

    def __repr__(self):
        return f"AnonymousId({str(self)[:8]}…)"


def generate_ids(n: int, seed: int) -> list[AnonymousId]:
    """Draw ``n`` IDs uniformly at random from a generator seeded by ``seed``.

    The i-th ID does not depend on ``n``, so growing a population keeps the
    existing IDs. A collision raises :class:`IdCollisionError`.
    """
    rng = np.random.default_rng([seed, 0x1D])
    ids = [AnonymousId(rng.bytes(16).hex()) for _ in range(n)]
    if len(set(ids)) != len(ids):
        raise IdCollisionError(f"anonymous ID collision among {n} devices (seed {seed})")
    return ids


@dataclass(frozen=True)
class ContactRecord:
    peer: AnonymousId
    first_contact: int
    encounter_count: int = 1


@dataclass
class DeviceState:
    own_id: AnonymousId
    d_limit: float = DEFAULT_D_LIMIT_M
    contacts: dict[AnonymousId, ContactRecord] = field(default_factory=dict)
    # peer -> time of the last encounter that was counted
    last_counted: dict[AnonymousId, int] = field(default_factory=dict, repr=False)
    recontact_interval: int = RECONTACT_INTERVAL_MIN

    def __post_init__(self):
        self.own_id = AnonymousId(self.own_id)
        if not self.d_limit > 0:
            raise ValueError(f"d_limit must be > 0, got {self.d_limit!r}")

    def on_beacon(self, peer: AnonymousId, rssi: float, now: int, params: RadioParams) -> bool:
        """Handle one received beacon; return True if it was a risky contact.

        The estimated distance must be strictly below ``d_limit``. A new
        peer is inserted with count 1; a known peer's count only grows once
        ``recontact_interval`` minutes have passed since the last counted
        encounter.
        """
        if peer == self.own_id:
            raise SelfBeaconError(f"device {self.own_id!r} received its own beacon")
        if not distance_from_rssi(rssi, params) < self.d_limit:
            return False
        record = self.contacts.get(peer)
        if record is None:
            self.contacts[peer] = ContactRecord(peer, now, 1)
            self.last_counted[peer] = now
        elif now - self.last_counted[peer] >= self.recontact_interval:
            self.contacts[peer] = ContactRecord(peer, record.first_contact,
                                                record.encounter_count + 1)
            self.last_counted[peer] = now
        return True

    def export_contacts(self) -> list[ContactRecord]:
        """Read out the contact store, ordered by first contact then peer."""
        return sorted(self.contacts.values(), key=lambda r: (r.first_contact, r.peer))

    def copy(self) -> DeviceState:
        return DeviceState(self.own_id, self.d_limit, dict(self.contacts),
                           dict(self.last_counted), self.recontact_interval)
