"""Central flagging registry.

Authorized personnel flag IDs as infected and upload a flagged device's
contact list, which marks those peers at-risk. Anyone can query an ID.
Statuses only ever move up the NotAtRisk < AtRisk < Infected lattice.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import threading
from dataclasses import dataclass
from typing import Iterable

from .device import AnonymousId


class HealthStatus(enum.IntEnum):
    NOT_AT_RISK = 0
    AT_RISK = 1
    INFECTED = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, text: str) -> HealthStatus:
        key = text.strip().lower().replace("-", "_").replace(" ", "_")
        try:
            return cls[key.upper()]
        except KeyError:
            raise ValueError(f"unknown health status {text!r}") from None


class RegistryError(Exception):
    pass


class AuthorizationError(RegistryError):
    pass


class PreconditionError(RegistryError):
    pass


def token_hash(token: str) -> str:
    return hashlib.sha256(token.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RegistryEntry:
    id: AnonymousId
    status: HealthStatus = HealthStatus.NOT_AT_RISK
    flagged_at: int | None = None
    flagged_by: str | None = None


@dataclass(frozen=True)
class AuditRecord:
    id: AnonymousId
    old: HealthStatus
    new: HealthStatus
    at: int
    by: str


SNAPSHOT_HEADER = ["id", "status", "flagged_at_min", "flagged_by_hash"]


class Registry:
    """In-process registry; reads are lock-free, mutations are serialized."""

    def __init__(self, authority_tokens: Iterable[str] = ()):
        self._authorities = frozenset(token_hash(t) for t in authority_tokens)
        self._entries: dict[AnonymousId, RegistryEntry] = {}
        self.audit: list[AuditRecord] = []
        self._lock = threading.Lock()

    def _check_auth(self, auth: str) -> str:
        digest = token_hash(auth) if isinstance(auth, str) else None
        if digest is None or digest not in self._authorities:
            raise AuthorizationError("authority token not recognised")
        return digest

    def flag_infected(self, id: AnonymousId, auth: str, now: int) -> None:
        digest = self._check_auth(auth)
        id = AnonymousId(id)
        with self._lock:
            entry = self._entries.get(id)
            if entry is not None and entry.status == HealthStatus.INFECTED:
                return
            self._set(id, HealthStatus.INFECTED, now, digest)

    def upload_contacts(self, source: AnonymousId, contacts: Iterable[AnonymousId],
                        auth: str, now: int) -> list[AnonymousId]:
        """Mark every not-at-risk contact of a flagged ``source`` as at-risk.

        Returns the newly marked IDs in sorted order.
        """
        digest = self._check_auth(auth)
        contacts = sorted({AnonymousId(c) for c in contacts})
        with self._lock:
            if self._status(AnonymousId(source)) < HealthStatus.AT_RISK:
                raise PreconditionError(f"source {source!r} is not flagged; refusing to trace")
            newly = []
            for peer in contacts:
                if self._status(peer) == HealthStatus.NOT_AT_RISK:
                    self._set(peer, HealthStatus.AT_RISK, now, digest)
                    newly.append(peer)
            return newly

    def _set(self, id: AnonymousId, status: HealthStatus, now: int, digest: str) -> None:
        self.audit.append(AuditRecord(id, self._status(id), status, now, digest))
        self._entries[id] = RegistryEntry(id, status, now, digest)

    def _status(self, id: AnonymousId) -> HealthStatus:
        entry = self._entries.get(id)
        return HealthStatus.NOT_AT_RISK if entry is None else entry.status

    def query_status(self, id: AnonymousId) -> HealthStatus:
        return self._status(id)

    def entries(self) -> list[RegistryEntry]:
        with self._lock:
            return sorted(self._entries.values(), key=lambda e: e.id)

    def statuses(self) -> dict[AnonymousId, HealthStatus]:
        return {e.id: e.status for e in self.entries()}

    def snapshot_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SNAPSHOT_HEADER)
        for e in self.entries():
            writer.writerow([e.id, e.status.label,
                             "" if e.flagged_at is None else e.flagged_at,
                             e.flagged_by or ""])
        return buf.getvalue()

    @classmethod
    def from_snapshot(cls, text: str, authority_tokens: Iterable[str] = ()) -> Registry:
        reg = cls(authority_tokens)
        rows = csv.DictReader(io.StringIO(text))
        if rows.fieldnames != SNAPSHOT_HEADER:
            raise ValueError(f"bad registry snapshot header: {rows.fieldnames}")
        for row in rows:
            eid = AnonymousId(row["id"])
            reg._entries[eid] = RegistryEntry(
                eid, HealthStatus.parse(row["status"]),
                int(row["flagged_at_min"]) if row["flagged_at_min"] else None,
                row["flagged_by_hash"] or None)
        return reg
