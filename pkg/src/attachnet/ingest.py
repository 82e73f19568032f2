"""Survey response ingestion: parsing, demographics, cohort filtering.

Input files are delimited text (comma or tab, auto-detected from the header
row) with item columns named ``Q1``/``Q01`` ... and optional ``age``,
``gender`` and ``country`` columns.  Item names are canonicalized to the
zero-padded form.  Unparseable numeric cells become missing values; ragged
rows are dropped and counted.  Country codes map to continental regions via a
bundled ISO-3166 table, demographic codes via a key=value codebook.

Typical flow::

    table = parse_responses("data.csv")
    cohort = filter_cohort(table, standard_filter())
    report = demographic_summary(cohort)
"""
from __future__ import annotations

import csv
import io
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCohortError, ParseError, ValidationError

GENDERS = ("female", "male", "other", "unknown")
REGIONS = (
    "Africa",
    "NorthAmerica",
    "SouthAmerica",
    "Asia",
    "Europe",
    "Oceania",
    "Unknown",
)

AGE_BANDS = ((18, 20), (21, 30), (31, 40), (41, 60))

_ITEM_RE = re.compile(r"^[Qq]0*([1-9][0-9]*)$")

_region_table: dict[str, str] | None = None


def _load_region_table() -> dict[str, str]:
    global _region_table
    if _region_table is None:
        from .fixtures import data_path

        table = {}
        with open(data_path("country_continents.csv"), newline="") as fh:
            for row in csv.DictReader(fh):
                table[row["code"]] = row["region"]
        _region_table = table
    return _region_table


def map_region(country_code: str) -> str:
    """Continental region for a 2-letter country code; total function."""
    if not country_code:
        return "Unknown"
    return _load_region_table().get(country_code.strip().upper(), "Unknown")


def default_codebook() -> dict[str, dict[str, str]]:
    from .fixtures import data_path

    return read_codebook(data_path("codebook_default.cfg"))


def read_codebook(path) -> dict[str, dict[str, str]]:
    """Parse a ``column.raw_value = label`` config file."""
    book: dict[str, dict[str, str]] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line or "." not in line.split("=", 1)[0]:
                raise ParseError(f"malformed codebook entry {line!r}", line=lineno)
            key, label = (part.strip() for part in line.split("=", 1))
            column, raw_value = key.split(".", 1)
            book.setdefault(column, {})[raw_value] = label
    return book


@dataclass(frozen=True)
class ColumnSchema:
    """Names of the demographic columns in a raw export."""

    age: str = "age"
    gender: str = "gender"
    country: str = "country"


@dataclass(frozen=True)
class Demographics:
    age: np.ndarray  # int16, -1 = unknown
    gender: tuple[str, ...]
    country: tuple[str, ...]
    region: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.gender)

    def take(self, mask) -> "Demographics":
        idx = np.flatnonzero(mask)
        return Demographics(
            age=self.age[idx],
            gender=tuple(self.gender[i] for i in idx),
            country=tuple(self.country[i] for i in idx),
            region=tuple(self.region[i] for i in idx),
        )

    @classmethod
    def empty(cls, n: int) -> "Demographics":
        return cls(
            age=np.full(n, -1, dtype=np.int16),
            gender=("unknown",) * n,
            country=("",) * n,
            region=("Unknown",) * n,
        )


@dataclass(frozen=True)
class ResponseTable:
    items: tuple[str, ...]
    rows: np.ndarray  # float64 (n, m); NaN marks a missing response
    demographics: Demographics
    dropped_rows: int = 0
    row_errors: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResponseTable):
            return NotImplemented
        return (
            self.items == other.items
            and self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows, equal_nan=True)
            and np.array_equal(self.demographics.age, other.demographics.age)
            and self.demographics.gender == other.demographics.gender
            and self.demographics.country == other.demographics.country
        )

    __hash__ = None


@dataclass(frozen=True)
class CohortFilter:
    age_range: tuple[int, int] | None = None
    genders: frozenset[str] | None = None
    regions: frozenset[str] | None = None
    require_complete: bool = False

    def __post_init__(self):
        if self.age_range is not None:
            lo, hi = self.age_range
            if lo > hi:
                raise ValidationError(f"age range [{lo}, {hi}] has lo > hi")
        if self.genders is not None:
            object.__setattr__(self, "genders", frozenset(self.genders))
        if self.regions is not None:
            object.__setattr__(self, "regions", frozenset(self.regions))


def standard_filter() -> CohortFilter:
    """The cohort used throughout the reference analysis: ages 18-60,
    reported female/male gender, complete in-range responses."""
    return CohortFilter(
        age_range=(18, 60),
        genders=frozenset({"female", "male"}),
        regions=None,
        require_complete=True,
    )


@dataclass(frozen=True)
class DemographicReport:
    n: int
    region: dict[str, int] = field(default_factory=dict)
    gender: dict[str, int] = field(default_factory=dict)
    age_band: dict[str, int] = field(default_factory=dict)

    def merged_america(self) -> dict[str, int]:
        """Region counts with the Americas collapsed into one group."""
        merged: dict[str, int] = {}
        for region, count in self.region.items():
            key = "America" if region in ("NorthAmerica", "SouthAmerica") else region
            merged[key] = merged.get(key, 0) + count
        return merged


def _open_text(stream):
    if isinstance(stream, (str, os.PathLike)):
        return open(stream, "r", encoding="utf-8", newline="")
    if isinstance(stream, bytes):
        return io.StringIO(stream.decode("utf-8"))
    if not hasattr(stream, "read"):
        raise ValidationError(f"cannot read from {type(stream).__name__}")
    probe = stream.read(0)
    if isinstance(probe, bytes):
        return io.TextIOWrapper(stream, encoding="utf-8")
    return stream


def parse_responses(stream, schema: ColumnSchema | None = None, codebook=None) -> ResponseTable:
    """Parse a delimited survey export into a ResponseTable.

    Raises ParseError when the header has no item columns; ragged rows are
    dropped, counted in ``dropped_rows`` and described in ``row_errors``.
    """
    schema = schema or ColumnSchema()
    if codebook is None:
        codebook = default_codebook()
    gender_map = codebook.get("gender", {})
    country_map = codebook.get("country", {})

    fh = _open_text(stream)
    header_line = fh.readline()
    if not header_line:
        raise ParseError("empty input", line=1)
    delimiter = "\t" if "\t" in header_line else ","
    header = next(csv.reader([header_line], delimiter=delimiter))
    header = [h.strip() for h in header]

    item_cols: list[tuple[int, int, str]] = []  # (column, number, canonical)
    for i, name in enumerate(header):
        match = _ITEM_RE.match(name)
        if match:
            num = int(match.group(1))
            item_cols.append((i, num, f"Q{num:02d}"))
    if not item_cols:
        raise ParseError("header contains no item columns (Q1... or Q01...)", line=1)
    item_cols.sort(key=lambda t: t[1])
    items = tuple(canon for _, _, canon in item_cols)

    lower = [h.lower() for h in header]

    def find_col(name: str) -> int | None:
        return lower.index(name.lower()) if name.lower() in lower else None

    age_col = find_col(schema.age)
    gender_col = find_col(schema.gender)
    country_col = find_col(schema.country)

    rows: list[list[float]] = []
    ages: list[int] = []
    genders: list[str] = []
    countries: list[str] = []
    errors: list[str] = []

    reader = csv.reader(fh, delimiter=delimiter)
    for lineno, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            errors.append(f"line {lineno}: expected {len(header)} fields, got {len(cells)}")
            continue
        values = []
        for col, _, _ in item_cols:
            cell = cells[col].strip()
            try:
                values.append(float(cell))
            except ValueError:
                values.append(np.nan)
        rows.append(values)

        age = -1
        if age_col is not None:
            try:
                age = int(float(cells[age_col]))
            except ValueError:
                age = -1
        ages.append(age)

        if gender_col is not None:
            raw = cells[gender_col].strip()
            if raw in gender_map:
                gender = gender_map[raw]
            elif raw.lower() in GENDERS:
                gender = raw.lower()
            else:
                gender = "unknown"
        else:
            gender = "unknown"
        genders.append(gender)

        country = cells[country_col].strip() if country_col is not None else ""
        country = country_map.get(country, country).upper()
        countries.append(country)

    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(items))
    demo = Demographics(
        age=np.array(ages, dtype=np.int16),
        gender=tuple(genders),
        country=tuple(countries),
        region=tuple(map_region(c) for c in countries),
    )
    return ResponseTable(
        items=items,
        rows=matrix,
        demographics=demo,
        dropped_rows=len(errors),
        row_errors=tuple(errors),
    )


def serialize_responses(table: ResponseTable, buf=None) -> str:
    """Canonical CSV form: zero-padded item columns, then age,gender,country."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(table.items) + ["age", "gender", "country"])
    demo = table.demographics
    for i in range(table.n):
        cells = []
        for value in table.rows[i]:
            cells.append("" if np.isnan(value) else f"{value:g}")
        cells.append("" if demo.age[i] < 0 else str(int(demo.age[i])))
        cells.append(demo.gender[i])
        cells.append(demo.country[i])
        writer.writerow(cells)
    text = out.getvalue()
    if buf is not None:
        if isinstance(buf, str):
            with open(buf, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            buf.write(text)
    return text


def filter_cohort(table: ResponseTable, f: CohortFilter) -> ResponseTable:
    """Rows satisfying every filter criterion; raises on an empty result."""
    demo = table.demographics
    mask = np.ones(table.n, dtype=bool)
    if f.age_range is not None:
        lo, hi = f.age_range
        mask &= (demo.age >= lo) & (demo.age <= hi)
    if f.genders is not None:
        mask &= np.array([g in f.genders for g in demo.gender])
    if f.regions is not None:
        mask &= np.array([r in f.regions for r in demo.region])
    if f.require_complete:
        in_range = np.isfinite(table.rows) & (table.rows >= 1) & (table.rows <= 5)
        mask &= in_range.all(axis=1)
    if not mask.any():
        raise EmptyCohortError("cohort filter removed every row")
    return ResponseTable(
        items=table.items,
        rows=table.rows[mask],
        demographics=demo.take(mask),
        dropped_rows=0,
        row_errors=(),
    )


def _age_band(age: int) -> str:
    for lo, hi in AGE_BANDS:
        if lo <= age <= hi:
            return f"{lo}-{hi}"
    return "other"


def demographic_summary(table: ResponseTable) -> DemographicReport:
    """Counts per region, gender and age band; each dimension sums to n."""
    region = {r: 0 for r in REGIONS}
    gender = {g: 0 for g in GENDERS}
    age_band = {f"{lo}-{hi}": 0 for lo, hi in AGE_BANDS}
    age_band["other"] = 0
    demo = table.demographics
    for i in range(table.n):
        region[demo.region[i]] += 1
        gender[demo.gender[i]] += 1
        age_band[_age_band(int(demo.age[i]))] += 1
    return DemographicReport(n=table.n, region=region, gender=gender, age_band=age_band)
