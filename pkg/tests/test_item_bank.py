from __future__ import annotations

import random

import pytest

from readaloud.item_bank import (
    BankError,
    EmptyBandError,
    ParseError,
    PhonicsItem,
    SelectionRequest,
    UnknownBandError,
    ValidationError,
    band_items,
    default_bank,
    dump_bank_text,
    load_bank,
    load_bank_text,
    select_items,
)

GOOD_CSV = """item_id,text,kind,band
a,a,letter,1
s,s,letter,1
sh,sh,phoneme,2
cat,cat,word,3
7,7,number,2
"""


def test_load_bank_text_happy_path():
    bank = load_bank_text(GOOD_CSV)
    assert len(bank.items) == 5
    assert bank.bands == (1, 2, 3)
    assert bank.item("sh").kind == "phoneme"


def test_load_bank_text_tab_delimited():
    tsv = GOOD_CSV.replace(",", "\t")
    bank = load_bank_text(tsv)
    assert len(bank.items) == 5


def test_header_required():
    with pytest.raises(ParseError):
        load_bank_text("a,a,letter,1\ns,s,letter,1\n")


def test_duplicate_ids_rejected():
    rows = GOOD_CSV + "a,a,letter,2\n"
    with pytest.raises(ValidationError, match="duplicate"):
        load_bank_text(rows)


def test_band_gap_rejected():
    csv = "item_id,text,kind,band\na,a,letter,1\ncat,cat,word,3\n"
    with pytest.raises(ValidationError, match="gap"):
        load_bank_text(csv)


def test_empty_text_rejected():
    with pytest.raises(ValidationError):
        load_bank([PhonicsItem(item_id="x", text="", kind="word", band=1)])


def test_letter_must_be_single_char():
    with pytest.raises(ValidationError):
        load_bank([PhonicsItem(item_id="ab", text="ab", kind="letter", band=1)])


def test_number_must_be_digits():
    with pytest.raises(ValidationError):
        load_bank([PhonicsItem(item_id="seven", text="seven", kind="number", band=1)])


def test_unknown_kind_rejected():
    with pytest.raises(ParseError):
        load_bank([PhonicsItem(item_id="a", text="a", kind="glyph", band=1)])


def test_band_must_be_positive():
    with pytest.raises(ValidationError):
        load_bank([PhonicsItem(item_id="a", text="a", kind="letter", band=0)])


def test_dump_load_round_trip():
    bank = load_bank_text(GOOD_CSV)
    again = load_bank_text(dump_bank_text(bank))
    assert again.items == bank.items


def test_default_bank_is_valid_and_dense():
    bank = default_bank()
    assert len(bank.items) >= 26
    assert bank.bands[0] == 1
    assert bank.bands == tuple(range(1, bank.bands[-1] + 1))
    for band in bank.bands:
        assert len(band_items(bank, band)) >= 3


def test_band_items_sorted_by_id():
    bank = default_bank()
    ids = [item.item_id for item in band_items(bank, 1)]
    assert ids == sorted(ids)


def test_band_items_unknown_band():
    with pytest.raises(UnknownBandError):
        band_items(default_bank(), 99)


def test_selection_same_seed_same_items():
    bank = default_bank()
    req = SelectionRequest(target_band=2, count=5, seed=77)
    assert select_items(bank, req) == select_items(bank, req)


def test_selection_different_seeds_differ_somewhere():
    bank = default_bank()
    picks = {
        tuple(i.item_id for i in select_items(bank, SelectionRequest(target_band=2, count=5, seed=s)))
        for s in range(8)
    }
    assert len(picks) > 1


def test_selection_prefers_target_band():
    bank = default_bank()
    items = select_items(bank, SelectionRequest(target_band=3, count=4, seed=5))
    assert all(item.band == 3 for item in items)


def test_selection_falls_back_down_then_up():
    # exhaust band 3, forcing spill into band 2 before band 4
    bank = default_bank()
    n3 = len(band_items(bank, 3))
    items = select_items(bank, SelectionRequest(target_band=3, count=n3 + 2, seed=5))
    assert len(items) == n3 + 2
    spill = [item.band for item in items if item.band != 3]
    assert spill == [2, 2]


def test_selection_excludes():
    bank = default_bank()
    block = frozenset(item.item_id for item in band_items(bank, 1)[:5])
    items = select_items(bank, SelectionRequest(target_band=1, count=6, seed=1, exclude=block))
    assert not (block & {item.item_id for item in items})


def test_selection_short_when_bank_small():
    bank = load_bank_text(GOOD_CSV)
    items = select_items(bank, SelectionRequest(target_band=3, count=10, seed=0))
    # band 3 has one item and band 2 two; there is no band 4
    assert len(items) == 3


def test_selection_empty_all_bands():
    bank = load_bank_text(GOOD_CSV)
    every = frozenset(item.item_id for item in bank.items)
    with pytest.raises(EmptyBandError):
        select_items(bank, SelectionRequest(target_band=2, count=1, seed=0, exclude=every))


def test_selection_never_duplicates_or_leaks():
    bank = default_bank()
    rng = random.Random(4242)
    for _ in range(50):
        band = rng.choice(bank.bands)
        count = rng.randint(1, 12)
        exclude = frozenset(
            item.item_id for item in bank.items if rng.random() < 0.3
        )
        req = SelectionRequest(target_band=band, count=count, seed=rng.randint(0, 2**32), exclude=exclude)
        try:
            items = select_items(bank, req)
        except EmptyBandError:
            continue
        ids = [item.item_id for item in items]
        assert len(ids) == len(set(ids))
        assert len(ids) <= count
        assert not (set(ids) & exclude)
        assert all(abs(item.band - band) <= 1 for item in items)


def test_selection_rejects_bad_count():
    with pytest.raises(BankError):
        select_items(default_bank(), SelectionRequest(target_band=1, count=0, seed=0))
