"""Append-only store of reading-record events, one checksummed line per event.

The store file is the single durable source of truth: UTF-8 text, one event
per line as ``<event_id> <checksum> <canonical JSON>``. Lines are never
rewritten; a torn trailing line (no newline) from a crash is ignored on open.
Per-pupil export produces a self-verifying archive that reimports to the
exact same events.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import re
import threading
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable

from .errors import ReadAloudError

EVENT_KINDS = ("SessionCompleted", "AttemptLogged", "FlagRaised", "RemarkAdded")

ARCHIVE_FORMAT = "readaloud-archive"
ARCHIVE_VERSION = 1

LEGACY_HEADER = ("date", "material", "remarks")


class RecordsError(ReadAloudError):
    pass


class StorageError(RecordsError):
    pass


class ValidationError(RecordsError):
    pass


class CorruptArchiveError(RecordsError):
    pass


class LegacyParseError(RecordsError):
    """One unparseable legacy row; collected per row, never raised in bulk."""


def canonical_json(value) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class RecordEvent:
    event_id: int
    pupil_id: str
    at: float
    kind: str
    author: str
    payload: dict

    def body_json(self) -> str:
        return canonical_json(
            {
                "pupil_id": self.pupil_id,
                "at": self.at,
                "kind": self.kind,
                "author": self.author,
                "payload": self.payload,
            }
        )

    def line(self) -> str:
        body = self.body_json()
        return f"{self.event_id} {_checksum(self.event_id, body)} {body}"


@dataclass(frozen=True)
class Remark:
    """A digitized handwritten record row: date, material read, free-text remark."""

    date: date
    material: str
    remarks: str
    author_initials: str | None = None
    year_inferred: bool = False

    def to_payload(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "material": self.material,
            "remarks": self.remarks,
            "author_initials": self.author_initials,
            "year_inferred": self.year_inferred,
        }


def _checksum(event_id: int, body_json: str) -> str:
    return hashlib.sha256(f"{event_id} {body_json}".encode("utf-8")).hexdigest()[:16]


def _parse_line(line: str, lineno: int) -> RecordEvent:
    try:
        id_part, checksum, body_json = line.split(" ", 2)
        event_id = int(id_part)
        body = json.loads(body_json)
    except (ValueError, json.JSONDecodeError) as exc:
        raise StorageError(f"line {lineno}: malformed event line") from exc
    if _checksum(event_id, canonical_json(body)) != checksum:
        raise StorageError(f"line {lineno}: checksum mismatch for event {event_id}")
    try:
        return RecordEvent(
            event_id=event_id,
            pupil_id=body["pupil_id"],
            at=body["at"],
            kind=body["kind"],
            author=body["author"],
            payload=body["payload"],
        )
    except KeyError as exc:
        raise StorageError(f"line {lineno}: event body missing field {exc}") from exc


class EventStore:
    """Single-writer append-only event log backed by one text file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._last_id = 0
        if self.path.exists():
            self._discard_torn_tail()
            for ev in self.events():
                if ev.event_id != self._last_id + 1:
                    raise StorageError(
                        f"event ids must be gapless: got {ev.event_id} after {self._last_id}"
                    )
                self._last_id = ev.event_id
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch()

    def _discard_torn_tail(self) -> None:
        # A crash mid-append can leave a partial final line. Readers skip it,
        # but the writer must drop it before appending or the next event would
        # fuse onto the fragment.
        raw = self.path.read_bytes()
        if not raw or raw.endswith(b"\n"):
            return
        keep = raw.rfind(b"\n") + 1        # 0 when no newline at all
        with open(self.path, "r+b") as fh:
            fh.truncate(keep)
            fh.flush()
            os.fsync(fh.fileno())

    def _read_lines(self) -> list[str]:
        try:
            text = self.path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise StorageError(f"store is not valid UTF-8 at byte {exc.start}") from exc
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        elif lines:
            lines.pop()          # torn trailing write: ignore the partial line
        return lines

    def events(self) -> list[RecordEvent]:
        return [_parse_line(line, i + 1) for i, line in enumerate(self._read_lines())]

    def append(self, *, pupil_id: str, at: float, kind: str, author: str, payload: dict) -> RecordEvent:
        return self.append_many(
            [{"pupil_id": pupil_id, "at": at, "kind": kind, "author": author, "payload": payload}]
        )[0]

    def append_many(self, bodies: Iterable[dict]) -> list[RecordEvent]:
        """Append a batch as one durable write: all or none become visible."""
        bodies = list(bodies)
        for body in bodies:
            if body.get("kind") not in EVENT_KINDS:
                raise ValidationError(f"unknown event kind {body.get('kind')!r}")
            if not body.get("pupil_id"):
                raise ValidationError("pupil_id must be non-empty")
            if not body.get("author"):
                raise ValidationError("author must be non-empty")
            canonical_json(body.get("payload", {}))    # must be JSON-serializable
        with self._lock:
            events = []
            chunk = []
            next_id = self._last_id
            for body in bodies:
                next_id += 1
                ev = RecordEvent(
                    event_id=next_id,
                    pupil_id=body["pupil_id"],
                    at=body["at"],
                    kind=body["kind"],
                    author=body["author"],
                    payload=body.get("payload", {}),
                )
                events.append(ev)
                chunk.append(ev.line() + "\n")
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write("".join(chunk))
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"append to {self.path} failed: {exc}") from exc
            self._last_id = next_id
            return events

    def query(
        self,
        pupil_id: str,
        from_ts: float | None = None,
        to_ts: float | None = None,
        kinds: Iterable[str] | None = None,
    ) -> list[RecordEvent]:
        """Matching events in event_id order; an empty result is valid."""
        kind_set = set(kinds) if kinds is not None else None
        out = []
        for ev in self.events():
            if ev.pupil_id != pupil_id:
                continue
            if from_ts is not None and ev.at < from_ts:
                continue
            if to_ts is not None and ev.at > to_ts:
                continue
            if kind_set is not None and ev.kind not in kind_set:
                continue
            out.append(ev)
        return out

    def content_hash(self) -> str:
        return hashlib.sha256(self.path.read_bytes()).hexdigest()

    def export(self, pupil_id: str) -> str:
        """Portable per-pupil archive: header line plus that pupil's event lines."""
        lines = [ev.line() for ev in self.query(pupil_id)]
        blob = "".join(line + "\n" for line in lines)
        header = canonical_json(
            {
                "format": ARCHIVE_FORMAT,
                "version": ARCHIVE_VERSION,
                "pupil_id": pupil_id,
                "count": len(lines),
                "sha256": hashlib.sha256(blob.encode("utf-8")).hexdigest(),
            }
        )
        return header + "\n" + blob


def import_archive(archive: str) -> list[RecordEvent]:
    """Verify and decode an exported archive into its exact original events."""
    try:
        header_line, _, blob = archive.partition("\n")
        header = json.loads(header_line)
    except json.JSONDecodeError as exc:
        raise CorruptArchiveError("archive header is not valid JSON") from exc
    if header.get("format") != ARCHIVE_FORMAT or header.get("version") != ARCHIVE_VERSION:
        raise CorruptArchiveError(f"unsupported archive format {header.get('format')!r}")
    if hashlib.sha256(blob.encode("utf-8")).hexdigest() != header.get("sha256"):
        raise CorruptArchiveError("archive checksum mismatch")
    lines = blob.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != header.get("count"):
        raise CorruptArchiveError(f"archive count {header.get('count')} != {len(lines)} lines")
    try:
        events = [_parse_line(line, i + 2) for i, line in enumerate(lines)]
    except StorageError as exc:
        raise CorruptArchiveError(str(exc)) from exc
    for ev in events:
        if ev.pupil_id != header.get("pupil_id"):
            raise CorruptArchiveError(
                f"event {ev.event_id} belongs to {ev.pupil_id!r}, archive is for {header.get('pupil_id')!r}"
            )
    return events


_DATE_RE = re.compile(r"^\s*(\d{1,2})\s*/\s*(\d{1,2})\s*(?:/\s*(\d{2}|\d{4}))?\s*$")


def parse_legacy_date(text: str, default_year: int | None = None) -> tuple[date, bool]:
    """day/month[/year] with 2- or 4-digit year; returns (date, year_inferred).

    Two-digit years resolve to 2000-2099. A missing year needs default_year
    and marks the date as inferred.
    """
    m = _DATE_RE.match(text)
    if not m:
        raise LegacyParseError(f"unparseable date {text!r}")
    day, month, year_part = int(m.group(1)), int(m.group(2)), m.group(3)
    inferred = False
    if year_part is None:
        if default_year is None:
            raise LegacyParseError(f"date {text!r} has no year and no default year was given")
        year = default_year
        inferred = True
    else:
        year = int(year_part)
        if year < 100:
            year += 2000
    try:
        return date(year, month, day), inferred
    except ValueError as exc:
        raise LegacyParseError(f"invalid calendar date {text!r}: {exc}") from exc


@dataclass(frozen=True)
class LegacyImportReport:
    remarks: tuple[tuple[int, Remark], ...]      # (1-based row number, parsed remark)
    errors: tuple[tuple[int, str], ...]          # (1-based row number, what went wrong)

    @property
    def ok(self) -> bool:
        return not self.errors


def import_legacy(rows_text: str, default_year: int | None = None) -> LegacyImportReport:
    """Parse a legacy handwritten-record table (CSV or TSV, header date,material,remarks).

    Rows are parsed independently: bad rows are reported with their row
    number, never silently dropped, and never block the good rows.
    """
    first_line = rows_text.splitlines()[0] if rows_text.strip() else ""
    delimiter = "\t" if "\t" in first_line else ","
    reader = csv.reader(io.StringIO(rows_text), delimiter=delimiter)
    rows = list(reader)
    if not rows:
        raise ValidationError("legacy table is empty")
    header = tuple(cell.strip().lower() for cell in rows[0][:3])
    if header != LEGACY_HEADER:
        raise ValidationError(f"legacy header must start with {','.join(LEGACY_HEADER)}, got {rows[0]!r}")
    remarks: list[tuple[int, Remark]] = []
    errors: list[tuple[int, str]] = []
    for row_number, row in enumerate(rows[1:], start=1):
        if not any(cell.strip() for cell in row):
            continue
        try:
            if len(row) < 3:
                raise LegacyParseError(f"expected at least 3 columns, got {len(row)}")
            when, inferred = parse_legacy_date(row[0], default_year)
            material = row[1].strip()
            remark_text = row[2].strip()
            if not remark_text:
                raise LegacyParseError("remarks column is empty")
            initials = row[3].strip() if len(row) > 3 and row[3].strip() else None
            remarks.append(
                (
                    row_number,
                    Remark(
                        date=when,
                        material=material,
                        remarks=remark_text,
                        author_initials=initials,
                        year_inferred=inferred,
                    ),
                )
            )
        except LegacyParseError as exc:
            errors.append((row_number, str(exc)))
    return LegacyImportReport(remarks=tuple(remarks), errors=tuple(errors))


def remark_event_bodies(
    report: LegacyImportReport, pupil_id: str, author: str, at: float
) -> list[dict]:
    """RemarkAdded event bodies for every successfully parsed legacy row."""
    return [
        {
            "pupil_id": pupil_id,
            "at": at,
            "kind": "RemarkAdded",
            "author": author,
            "payload": remark.to_payload(),
        }
        for _, remark in report.remarks
    ]
