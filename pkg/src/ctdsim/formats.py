"""CSV readers and writers for everything the harness emits.

Floats are written with ``repr`` so that reading a file back gives the
exact same values.
"""

from __future__ import annotations

import csv
import io
from typing import Iterable, Mapping

from .device import AnonymousId, ContactRecord, DeviceState
from .mobility import ContactEvent
from .registry import HealthStatus
from .tracing import Label, RiskLabeling

EVENT_HEADER = ["step", "id_a", "id_b", "true_distance_m", "walls", "rssi_dbm",
                "estimated_distance_m", "recorded"]
DEVICE_HEADER = ["own_id", "peer_id", "first_contact_min", "encounter_count"]
LABEL_HEADER = ["id", "status", "acquisition_step"]


def _writer(buf):
    return csv.writer(buf, lineterminator="\n")


def _reader(text: str, header: list[str]):
    rows = csv.reader(io.StringIO(text))
    found = next(rows, None)
    if found != header:
        raise ValueError(f"expected header {header}, found {found}")
    return rows


def events_to_csv(events: Iterable[ContactEvent]) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(EVENT_HEADER)
    for e in events:
        w.writerow([e.step, e.a, e.b, repr(e.true_distance), e.walls_crossed, repr(e.rssi),
                    repr(e.estimated_distance), int(e.recorded)])
    return buf.getvalue()


def events_from_csv(text: str) -> list[ContactEvent]:
    return [ContactEvent(int(s), AnonymousId(a), AnonymousId(b), float(d), int(w), float(r),
                         float(est), rec == "1")
            for s, a, b, d, w, r, est, rec in _reader(text, EVENT_HEADER)]


def devices_to_csv(devices: Mapping[AnonymousId, DeviceState]) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(DEVICE_HEADER)
    for own in sorted(devices):
        for r in devices[own].export_contacts():
            w.writerow([own, r.peer, r.first_contact, r.encounter_count])
    return buf.getvalue()


def devices_from_csv(text: str) -> dict[AnonymousId, list[ContactRecord]]:
    out: dict[AnonymousId, list[ContactRecord]] = {}
    for own, peer, first, count in _reader(text, DEVICE_HEADER):
        out.setdefault(AnonymousId(own), []).append(
            ContactRecord(AnonymousId(peer), int(first), int(count)))
    return out


def labels_to_csv(labels: RiskLabeling) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(LABEL_HEADER)
    for node in sorted(labels):
        lab = labels[node]
        w.writerow([node, lab.status.label, "" if lab.step is None else lab.step])
    return buf.getvalue()


def labels_from_csv(text: str) -> RiskLabeling:
    return {AnonymousId(i): Label(HealthStatus.parse(s), int(t) if t else None)
            for i, s, t in _reader(text, LABEL_HEADER)}


def contact_matrix(ids: list[AnonymousId], devices: Mapping[AnonymousId, DeviceState]
                   ) -> list[list[int | None]]:
    """First-contact minute for every ordered pair, ``None`` where they never met."""
    matrix = []
    for a in ids:
        store = devices[a].contacts
        matrix.append([store[b].first_contact if b in store else None for b in ids])
    return matrix


def matrix_to_csv(ids: list[AnonymousId], matrix: list[list[int | None]]) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(["id", *ids])
    for a, row in zip(ids, matrix):
        w.writerow([a, *("" if v is None else v for v in row)])
    return buf.getvalue()


def matrix_from_csv(text: str) -> tuple[list[AnonymousId], list[list[int | None]]]:
    rows = csv.reader(io.StringIO(text))
    header = next(rows)
    if not header or header[0] != "id":
        raise ValueError("contact matrix must start with an 'id' column")
    ids = [AnonymousId(h) for h in header[1:]]
    matrix = []
    for row in rows:
        matrix.append([int(v) if v else None for v in row[1:]])
    return ids, matrix
