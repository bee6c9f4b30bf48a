"""Reading NDBC standard-meteorological (stdmet) archive files.

The annual archives look like::

    #YY  MM DD hh mm WDIR WSPD GST  WVHT   DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE
    #yr  mo dy hr mn degT m/s  m/s     m   sec   sec degT   hPa  degC  degC  degC  nmi    ft
    2009 01 01 00 50 999 99.0 99.0  1.46 14.81  8.41 274 9999.0 999.0  15.1 999.0 99.0 99.00

Older years drop the ``#`` on the label line, use ``WD``/``BAR`` labels,
two-digit years, and no minute column. Missing measurements are coded with
all-nines sentinels whose width depends on the column.
"""
from __future__ import annotations

import csv
import datetime as dt
import enum
import gzip
import io
import logging
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

logger = logging.getLogger(__name__)


class Feature(str, enum.Enum):
    WDIR = "WDIR"
    WSPD = "WSPD"
    GST = "GST"
    WVHT = "WVHT"
    DPD = "DPD"
    APD = "APD"
    MWD = "MWD"
    PRES = "PRES"
    ATMP = "ATMP"
    WTMP = "WTMP"
    DEWP = "DEWP"
    VIS = "VIS"
    TIDE = "TIDE"

    def __str__(self) -> str:
        return self.value


FEATURES: Tuple[Feature, ...] = tuple(Feature)

# Temperatures are archived as 999.0 when missing even though the columns are
# four characters wide, so both codes are accepted there.
DEFAULT_SENTINELS: Dict[Feature, Tuple[float, ...]] = {
    Feature.WDIR: (999.0,),
    Feature.MWD: (999.0,),
    Feature.PRES: (9999.0,),
    Feature.WSPD: (99.0,),
    Feature.GST: (99.0,),
    Feature.WVHT: (99.0,),
    Feature.DPD: (99.0,),
    Feature.APD: (99.0,),
    Feature.VIS: (99.0,),
    Feature.TIDE: (99.0,),
    Feature.ATMP: (99.0, 999.0),
    Feature.WTMP: (99.0, 999.0),
    Feature.DEWP: (99.0, 999.0),
}

_LABEL_ALIASES = {"WD": "WDIR", "BAR": "PRES", "DIR": "WDIR", "SPD": "WSPD"}
_TIME_LABELS = {"YY", "YYYY", "MM", "DD", "HH", "MN"}

DEFAULT_URL_TEMPLATE = "https://www.ndbc.noaa.gov/data/historical/stdmet/{station}h{year}.txt.gz"


class StdmetFormatError(ValueError):
    """A data row that cannot be parsed; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EmptyAlignmentError(ValueError):
    pass


def feature(name) -> Feature:
    name = str(name).upper()
    return Feature(_LABEL_ALIASES.get(name, name))


def is_missing(feat, raw: float, sentinels: Optional[Mapping] = None) -> bool:
    codes = (sentinels or DEFAULT_SENTINELS)[feature(feat)]
    return any(abs(raw - code) <= 1e-9 for code in codes)


@dataclass
class IngestReport:
    station_id: str = ""
    rows_read: int = 0
    rows_rejected: int = 0
    duplicates: int = 0
    errors: List[str] = field(default_factory=list)
    missing: Dict[str, int] = field(default_factory=dict)

    @property
    def rows_kept(self) -> int:
        return self.rows_read - self.rows_rejected - self.duplicates

    CSV_FIELDS = ("station_id", "rows_read", "rows_rejected", "duplicates", "rows_kept") + tuple(
        f"missing_{f.value}" for f in FEATURES
    )

    def csv_row(self) -> Dict[str, object]:
        row = {
            "station_id": self.station_id,
            "rows_read": self.rows_read,
            "rows_rejected": self.rows_rejected,
            "duplicates": self.duplicates,
            "rows_kept": self.rows_kept,
        }
        for f in FEATURES:
            row[f"missing_{f.value}"] = self.missing.get(f.value, "")
        return row

    def summary(self) -> str:
        lines = [
            f"station {self.station_id or '?'}: {self.rows_read} rows read, "
            f"{self.rows_rejected} rejected, {self.duplicates} duplicate timestamps, "
            f"{self.rows_kept} kept"
        ]
        for name, count in self.missing.items():
            if count:
                lines.append(f"  {name}: {count} missing")
        for err in self.errors[:20]:
            lines.append(f"  ! {err}")
        if len(self.errors) > 20:
            lines.append(f"  ! ... {len(self.errors) - 20} more")
        return "\n".join(lines)


@dataclass(frozen=True)
class StationSeries:
    """Time-ordered measurements of one station.

    ``values`` has one column per entry of ``features``; missing cells are NaN.
    """

    station_id: str
    timestamps: np.ndarray  # datetime64[m], strictly increasing
    values: np.ndarray
    features: Tuple[Feature, ...]
    report: Optional[IngestReport] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def column(self, feat) -> np.ndarray:
        return self.values[:, self.features.index(feature(feat))]

    def has_feature(self, feat) -> bool:
        return feature(feat) in self.features

    def year_mask(self, year: int) -> np.ndarray:
        years = self.timestamps.astype("datetime64[Y]").astype(int) + 1970
        return years == year

    def select(self, mask) -> "StationSeries":
        return StationSeries(self.station_id, self.timestamps[mask], self.values[mask], self.features)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _expand_year(yy: int) -> int:
    if yy >= 100:
        return yy
    return 1900 + yy if yy >= 70 else 2000 + yy


def _default_layout(ntokens: int) -> Tuple[int, List[str]]:
    n_time = 5 if ntokens >= 18 else 4
    return n_time, [f.value for f in FEATURES[: ntokens - n_time]]


def _layout_from_labels(tokens: Sequence[str]) -> Tuple[int, List[str]]:
    labels = [t.lstrip("#").upper() for t in tokens]
    labels = [l for l in labels if l]
    n_time = 0
    while n_time < len(labels) and labels[n_time] in _TIME_LABELS:
        n_time += 1
    if n_time not in (4, 5):
        raise ValueError(f"unrecognised stdmet header: {' '.join(tokens)}")
    return n_time, [_LABEL_ALIASES.get(l, l) for l in labels[n_time:]]


def parse_stdmet(
    text: str,
    station_id: str = "",
    strict: bool = False,
    sentinels: Optional[Mapping] = None,
) -> StationSeries:
    """Parse the contents of one stdmet file.

    Rows with the wrong number of columns or non-numeric fields are
    rejected; with ``strict=True`` the first such row raises
    :class:`StdmetFormatError`. Rows with impossible timestamps are rejected
    and counted. Duplicate timestamps keep their first occurrence.
    """
    if not text or not text.strip():
        raise ValueError("empty stdmet text")
    sentinels = dict(DEFAULT_SENTINELS if sentinels is None else sentinels)
    report = IngestReport(station_id=station_id)

    layout = None
    stamps: List[dt.datetime] = []
    rows: List[List[float]] = []
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if tokens[0].startswith("#") or not _is_number(tokens[0]):
            if layout is None and tokens[0].lstrip("#").upper() in ("YY", "YYYY"):
                layout = _layout_from_labels(tokens)
            continue
        if layout is None:
            layout = _default_layout(len(tokens))
        n_time, labels = layout
        report.rows_read += 1
        if len(tokens) != n_time + len(labels):
            msg = f"expected {n_time + len(labels)} columns, found {len(tokens)}"
            if strict:
                raise StdmetFormatError(lineno, msg)
            report.rows_rejected += 1
            report.errors.append(f"line {lineno}: {msg}")
            continue
        try:
            parts = [int(t) for t in tokens[:n_time]]
            values = [float(t) for t in tokens[n_time:]]
        except ValueError:
            if strict:
                raise StdmetFormatError(lineno, "non-numeric field")
            report.rows_rejected += 1
            report.errors.append(f"line {lineno}: non-numeric field")
            continue
        minute = parts[4] if n_time == 5 else 0
        try:
            stamp = dt.datetime(_expand_year(parts[0]), parts[1], parts[2], parts[3], minute)
        except ValueError as exc:
            report.rows_rejected += 1
            report.errors.append(f"line {lineno}: bad timestamp ({exc})")
            continue
        if stamp in seen:
            report.duplicates += 1
            continue
        seen.add(stamp)
        stamps.append(stamp)
        rows.append(values)

    if layout is None:
        raise ValueError("stdmet text contains no data rows")
    _, labels = layout
    keep = [i for i, l in enumerate(labels) if l in Feature.__members__]
    feats = tuple(Feature(labels[i]) for i in keep)
    values = np.array([[r[i] for i in keep] for r in rows], dtype=float).reshape(len(rows), len(keep))
    for j, f in enumerate(feats):
        col = values[:, j]
        mask = np.zeros(len(col), dtype=bool)
        for code in sentinels[f]:
            mask |= np.abs(col - code) <= 1e-9
        col[mask] = np.nan
        report.missing[f.value] = int(mask.sum())

    ts = np.array(stamps, dtype="datetime64[m]").reshape(len(stamps))
    order = np.argsort(ts, kind="stable")
    return StationSeries(station_id, ts[order], values[order], feats, report)


def write_stdmet(series: StationSeries, sentinels: Optional[Mapping] = None) -> str:
    """Serialise back to the 5-time-column stdmet layout (debugging aid)."""
    sentinels = sentinels or DEFAULT_SENTINELS
    out = io.StringIO()
    out.write("#YY  MM DD hh mm " + " ".join(f.value for f in series.features) + "\n")
    out.write("#yr  mo dy hr mn" + " -" * len(series.features) + "\n")
    for stamp, row in zip(series.timestamps.astype(dt.datetime), series.values):
        fields = [stamp.strftime("%Y %m %d %H %M")]
        for f, v in zip(series.features, row):
            fields.append(repr(sentinels[f][0]) if np.isnan(v) else repr(float(v)))
        out.write(" ".join(fields) + "\n")
    return out.getvalue()


def read_stdmet(path, station_id: Optional[str] = None, **kwargs) -> StationSeries:
    """Parse a local ``.txt`` or ``.txt.gz`` archive.

    The station id defaults to the first five characters of the file name,
    which is how NDBC names its archives (``46069h2009.txt.gz``).
    """
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix == ".gz":
        raw = gzip.decompress(raw)
    if station_id is None:
        station_id = path.name[:5]
    return parse_stdmet(raw.decode("ascii", errors="replace"), station_id=station_id, **kwargs)


def concat_series(parts: Sequence[StationSeries]) -> StationSeries:
    """Join several archives (e.g. consecutive years) of one station."""
    if not parts:
        raise ValueError("nothing to concatenate")
    feats = parts[0].features
    for p in parts[1:]:
        if p.station_id != parts[0].station_id:
            raise ValueError("cannot concatenate different stations")
        feats = tuple(f for f in feats if f in p.features)
    ts = np.concatenate([p.timestamps for p in parts])
    vals = np.concatenate([np.stack([p.column(f) for f in feats], axis=1) for p in parts])
    _, first = np.unique(ts, return_index=True)
    return StationSeries(parts[0].station_id, ts[first], vals[first], feats)


def fetch_stdmet(
    station: str,
    year: int,
    dest: Path,
    url_template: str = DEFAULT_URL_TEMPLATE,
    allow_net: bool = False,
    timeout: float = 60.0,
) -> Path:
    """Return a local copy of one annual archive, downloading it if allowed."""
    dest = Path(dest)
    target = dest / f"{station}h{year}.txt"
    if target.exists():
        return target
    if not allow_net:
        raise FileNotFoundError(f"{target} not present and network access is disabled")
    url = url_template.format(station=station, year=year)
    logger.info("fetching %s", url)
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        payload = resp.read()
    if url.endswith(".gz"):
        payload = gzip.decompress(payload)
    dest.mkdir(parents=True, exist_ok=True)
    target.write_bytes(payload)
    return target


def refined_station_filter(series: StationSeries, year: int) -> bool:
    """True when ``year`` holds at least 1000 rows with both WVHT and APD."""
    if not (series.has_feature(Feature.WVHT) and series.has_feature(Feature.APD)):
        return False
    mask = series.year_mask(year)
    ok = ~np.isnan(series.column(Feature.WVHT)[mask]) & ~np.isnan(series.column(Feature.APD)[mask])
    return int(ok.sum()) >= 1000


ColumnKey = Tuple[str, str]


def column_label(key: ColumnKey) -> str:
    return f"{key[0]}:{key[1]}"


def parse_column_label(label: str) -> ColumnKey:
    station, sep, name = label.strip().partition(":")
    if not sep or not station or not name:
        raise ValueError(f"column label must look like STATION:FEATURE, got {label!r}")
    return station, name.upper()


@dataclass(frozen=True)
class AlignedTable:
    """Gap-free table of station/feature columns on shared timestamps."""

    timestamps: np.ndarray
    keys: Tuple[ColumnKey, ...]
    data: np.ndarray  # (rows, columns)

    def __post_init__(self):
        if self.data.shape != (len(self.timestamps), len(self.keys)):
            raise ValueError("table data shape does not match timestamps/keys")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("aligned table cannot contain missing values")

    def __len__(self) -> int:
        return len(self.timestamps)

    def index(self, key) -> int:
        key = (str(key[0]), str(key[1]).upper())
        try:
            return self.keys.index(key)
        except ValueError:
            raise KeyError(f"no column {column_label(key)}") from None

    def column(self, key) -> np.ndarray:
        return self.data[:, self.index(key)]

    def columns(self, keys: Sequence) -> np.ndarray:
        return self.data[:, [self.index(k) for k in keys]]

    def with_column(self, key: ColumnKey, values) -> "AlignedTable":
        values = np.asarray(values, dtype=float).reshape(len(self), 1)
        return AlignedTable(self.timestamps, self.keys + ((key[0], key[1].upper()),), np.hstack([self.data, values]))

    def rows(self, sl) -> "AlignedTable":
        return AlignedTable(self.timestamps[sl], self.keys, self.data[sl])

    def year_rows(self, years: Iterable[int]) -> np.ndarray:
        yrs = self.timestamps.astype("datetime64[Y]").astype(int) + 1970
        return np.flatnonzero(np.isin(yrs, list(years)))

    def to_csv(self, path_or_buf) -> None:
        own = isinstance(path_or_buf, (str, Path))
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["timestamp"] + [column_label(k) for k in self.keys])
            for stamp, row in zip(self.timestamps, self.data):
                w.writerow([format_timestamp(stamp)] + [repr(float(v)) for v in row])
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path_or_buf) -> "AlignedTable":
        own = isinstance(path_or_buf, (str, Path))
        fh = open(path_or_buf, newline="") if own else path_or_buf
        try:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[0] != "timestamp":
                raise ValueError("table CSV must start with a 'timestamp' column")
            keys = tuple(parse_column_label(h) for h in header[1:])
            stamps, rows = [], []
            for rec in reader:
                if not rec:
                    continue
                stamps.append(parse_timestamp(rec[0]))
                rows.append([float(v) for v in rec[1:]])
        finally:
            if own:
                fh.close()
        ts = np.array(stamps, dtype="datetime64[m]").reshape(len(stamps))
        return cls(ts, keys, np.array(rows, dtype=float).reshape(len(rows), len(keys)))

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(self.timestamps.astype("datetime64[m]").astype(np.int64).tobytes())
        h.update("|".join(column_label(k) for k in self.keys).encode())
        h.update(np.ascontiguousarray(self.data, dtype="<f8").tobytes())
        return h.hexdigest()[:16]


def format_timestamp(stamp) -> str:
    return np.datetime_as_string(np.datetime64(stamp, "m"), unit="m") + "Z"


def parse_timestamp(text: str) -> np.datetime64:
    return np.datetime64(text.strip().rstrip("Z"), "m")


def align_stations(series: Sequence[StationSeries], wanted: Sequence[Tuple[str, object]]) -> AlignedTable:
    """Keep the timestamps where every series reports every wanted feature.

    A timestamp missing from any input series, or at which any wanted
    feature is missing, is dropped for all stations.
    """
    by_id = {s.station_id: s for s in series}
    if len(by_id) != len(series):
        raise ValueError("duplicate station ids in input series")
    keys: List[ColumnKey] = []
    for station, feat in wanted:
        if station not in by_id:
            raise ValueError(f"station {station} not among input series")
        f = feature(feat)
        if not by_id[station].has_feature(f):
            raise ValueError(f"station {station} has no {f.value} column")
        keys.append((station, f.value))

    common = None
    for s in series:
        ok = np.ones(len(s), dtype=bool)
        for station, name in keys:
            if station == s.station_id:
                ok &= ~np.isnan(s.column(name))
        stamps = s.timestamps[ok]
        common = stamps if common is None else np.intersect1d(common, stamps, assume_unique=True)
    if common is None or common.size == 0:
        raise EmptyAlignmentError("no timestamps shared by all stations with every wanted feature present")

    cols = []
    for station, name in keys:
        s = by_id[station]
        idx = np.searchsorted(s.timestamps, common)
        cols.append(s.column(name)[idx])
    return AlignedTable(common, tuple(keys), np.column_stack(cols))


def series_to_csv(series: StationSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp"] + [f.value for f in series.features])
        for stamp, row in zip(series.timestamps, series.values):
            w.writerow([format_timestamp(stamp)] + ["" if np.isnan(v) else repr(float(v)) for v in row])


def series_from_csv(path, station_id: Optional[str] = None) -> StationSeries:
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        feats = tuple(feature(h) for h in header[1:])
        stamps, rows = [], []
        for rec in reader:
            if not rec:
                continue
            stamps.append(parse_timestamp(rec[0]))
            rows.append([float(v) if v else np.nan for v in rec[1:]])
    ts = np.array(stamps, dtype="datetime64[m]").reshape(len(stamps))
    return StationSeries(station_id or path.stem[:5], ts, np.array(rows, dtype=float).reshape(len(rows), len(feats)), feats)
