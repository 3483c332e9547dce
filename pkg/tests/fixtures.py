"""Shared test data: a digitized page of handwritten reading-record rows."""

LEGACY_HEADER_TSV = "date\tmaterial\tremarks"

# Four dated rows as they appear in the source notebook, transcribed verbatim.
LEGACY_DATED_ROWS = [
    ("17/6/12", "The new baby", "Well done Megan. Read to P12."),
    ("19/6", "Vocabulary custom", "Read this without any problems. Well done SE"),
    ("20/6", "Etchers", "Enjoy. Excellent. Sanding out and using pictures is a help. Megan well to English."),
    ("27/6/12", "Masha and the incredible bird", "Excellent reading. Mustafa"),
]

# One row on the page has no date at all — a per-row error case.
LEGACY_UNDATED_ROW = ("", "Vocabulary custom", "Kate")

LEGACY_DEFAULT_YEAR = 2012


def legacy_tsv(rows) -> str:
    return "\n".join([LEGACY_HEADER_TSV] + ["\t".join(row) for row in rows]) + "\n"
