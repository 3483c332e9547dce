"""Catalogue of readable items grouped into dense, ordered difficulty bands.

Banks are immutable after loading. Item selection is a pure function of
(bank, request): the same seed always yields the same scaffolded set, which
keeps practice sessions replayable.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ReadAloudError

ITEM_KINDS = ("letter", "phoneme", "word", "number")

BANK_HEADER = ("item_id", "text", "kind", "band")


class BankError(ReadAloudError):
    pass


class ParseError(BankError):
    """Source rows are structurally malformed."""


class ValidationError(BankError):
    """Rows parsed but violate a bank invariant (duplicate id, band gap, ...)."""


class UnknownBandError(BankError):
    pass


class EmptyBandError(BankError):
    """Target band and both neighbouring bands are exhausted."""


@dataclass(frozen=True)
class PhonicsItem:
    """One readable unit: what a single bubble shows."""

    item_id: str
    text: str
    kind: str
    band: int


@dataclass(frozen=True)
class SelectionRequest:
    target_band: int
    count: int
    seed: int
    exclude: frozenset[str] = field(default_factory=frozenset)


@dataclass(frozen=True)
class ItemBank:
    items: tuple[PhonicsItem, ...]
    bands: tuple[int, ...]

    def item(self, item_id: str) -> PhonicsItem:
        for it in self.items:
            if it.item_id == item_id:
                return it
        raise KeyError(item_id)

    def has_item(self, item_id: str) -> bool:
        return any(it.item_id == item_id for it in self.items)


def _check_item(item: PhonicsItem) -> None:
    if not item.item_id:
        raise ParseError("item_id must be non-empty")
    if item.kind not in ITEM_KINDS:
        raise ParseError(f"item {item.item_id!r}: unknown kind {item.kind!r}")
    if not isinstance(item.band, int) or isinstance(item.band, bool):
        raise ParseError(f"item {item.item_id!r}: band must be an integer")
    if not item.text:
        raise ValidationError(f"item {item.item_id!r}: text must be non-empty")
    if item.band < 1:
        raise ValidationError(f"item {item.item_id!r}: band must be >= 1, got {item.band}")
    if item.kind == "letter" and len(item.text) != 1:
        raise ValidationError(f"item {item.item_id!r}: letter text must be a single character")
    if item.kind == "number" and not (item.text.isdigit()):
        raise ValidationError(f"item {item.item_id!r}: number text must be a non-negative integer")


def load_bank(source: Iterable[PhonicsItem | Mapping[str, object]]) -> ItemBank:
    """Build a validated bank from item records (mappings or PhonicsItem).

    Raises ParseError for malformed records and ValidationError for duplicate
    ids, empty text or a gap in the band sequence.
    """
    items: list[PhonicsItem] = []
    seen: set[str] = set()
    for record in source:
        if isinstance(record, PhonicsItem):
            item = record
        else:
            try:
                band_raw = record["band"]
                band = int(band_raw) if not isinstance(band_raw, bool) else None
                if band is None:
                    raise TypeError
                item = PhonicsItem(
                    item_id=str(record["item_id"]),
                    text=str(record["text"]),
                    kind=str(record["kind"]),
                    band=band,
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed item record {record!r}") from exc
        _check_item(item)
        if item.item_id in seen:
            raise ValidationError(f"duplicate item_id {item.item_id!r}")
        seen.add(item.item_id)
        items.append(item)

    if not items:
        raise ValidationError("bank has no items")

    present = sorted({it.band for it in items})
    top = present[-1]
    missing = [b for b in range(1, top + 1) if b not in present]
    if missing:
        raise ValidationError(f"band sequence has gaps at {missing}; bands present: {present}")

    return ItemBank(items=tuple(items), bands=tuple(present))


def load_bank_text(text: str) -> ItemBank:
    """Parse the repo-wide delimited table format (comma or tab separated)."""
    delimiter = "\t" if "\t" in text.splitlines()[0] else ","
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError("empty bank file")
    header = tuple(cell.strip().lower() for cell in rows[0])
    if header != BANK_HEADER:
        raise ParseError(f"bank header must be {','.join(BANK_HEADER)}, got {rows[0]!r}")
    records = []
    for row in rows[1:]:
        if len(row) != len(BANK_HEADER):
            raise ParseError(f"expected {len(BANK_HEADER)} columns, got {row!r}")
        records.append(dict(zip(BANK_HEADER, (cell.strip() for cell in row))))
    return load_bank(records)


def load_bank_file(path: str | Path) -> ItemBank:
    return load_bank_text(Path(path).read_text(encoding="utf-8"))


def dump_bank_text(bank: ItemBank) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(BANK_HEADER)
    for it in bank.items:
        writer.writerow([it.item_id, it.text, it.kind, it.band])
    return out.getvalue()


def default_bank() -> ItemBank:
    """The bundled starter bank: 5 bands from single letters up to long words."""
    text = resources.files("readaloud.data").joinpath("default_bank.csv").read_text("utf-8")
    return load_bank_text(text)


def band_items(bank: ItemBank, band: int) -> tuple[PhonicsItem, ...]:
    """All items of one band, ordered by item_id."""
    if band not in bank.bands:
        raise UnknownBandError(f"band {band} not present; bank has bands {list(bank.bands)}")
    return tuple(sorted((it for it in bank.items if it.band == band), key=lambda it: it.item_id))


def select_items(bank: ItemBank, req: SelectionRequest) -> list[PhonicsItem]:
    """Pick a scaffolded item set for one power-up phase.

    Draws from the target band first; when it runs short the easier
    neighbouring band (band-1) backfills before the harder one (band+1).
    Deterministic for a fixed (bank, req); excluded items never appear.
    """
    if req.count < 1:
        raise ValidationError(f"count must be >= 1, got {req.count}")
    if req.target_band not in bank.bands:
        raise UnknownBandError(f"target band {req.target_band} not present in bank")

    rng = random.Random(f"select:{req.seed}")

    def pool(band: int) -> list[PhonicsItem]:
        if band not in bank.bands:
            return []
        eligible = [it for it in band_items(bank, band) if it.item_id not in req.exclude]
        rng.shuffle(eligible)
        return eligible

    picked: list[PhonicsItem] = []
    for band in (req.target_band, req.target_band - 1, req.target_band + 1):
        for it in pool(band):
            if len(picked) == req.count:
                break
            picked.append(it)
        if len(picked) == req.count:
            break

    if not picked:
        raise EmptyBandError(
            f"band {req.target_band} and both neighbours have no unexcluded items"
        )
    return picked
