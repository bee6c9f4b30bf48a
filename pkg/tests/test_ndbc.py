import gzip

import numpy as np
import pytest

from waveseq.ndbc import (AlignedTable, EmptyAlignmentError, Feature, StationSeries, StdmetFormatError,
                          align_stations, column_label, concat_series, feature, fetch_stdmet, is_missing,
                          parse_column_label, parse_stdmet, read_stdmet, refined_station_filter, series_from_csv,
                          series_to_csv, write_stdmet)

MODERN = """#YY  MM DD hh mm WDIR WSPD GST  WVHT   DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE
#yr  mo dy hr mn degT m/s  m/s     m   sec   sec degT   hPa  degC  degC  degC   mi    ft
2010 02 03 04 50 200  3.0  4.0  1.10   9.00  6.00 250 1010.0  10.0  11.0   9.0 99.0 99.00
2010 02 03 05 50 999 99.0 99.0 99.00  99.00 99.00 999 9999.0 999.0 999.0 999.0 99.0 99.00
"""


def test_modern_header_and_sentinels():
    s = parse_stdmet(MODERN, "46001")
    assert len(s) == 2
    assert s.features == tuple(Feature)
    assert s.timestamps[0] == np.datetime64("2010-02-03T04:50")
    assert not np.isnan(s.values[0, :11]).any()
    assert np.isnan(s.values[1]).all()
    assert s.report.missing["WVHT"] == 1


def test_headerless_rows_use_default_layout():
    body = "2010 02 03 04 50 200 3.0 4.0 1.10 9.00 6.00 250 1010.0 10.0 11.0 9.0 99.0 99.00\n"
    s = parse_stdmet(body, "x")
    assert len(s) == 1 and s.column("WVHT")[0] == pytest.approx(1.10)


def test_two_digit_years():
    text = "YY MM DD hh WD WSPD GST WVHT DPD APD MWD BAR ATMP WTMP DEWP VIS\n" \
           "98 01 01 00 10 1 1 1.0 5 4 10 1000 10 10 10 5\n" \
           "05 01 01 00 10 1 1 1.0 5 4 10 1000 10 10 10 5\n"
    s = parse_stdmet(text, "x")
    years = s.timestamps.astype("datetime64[Y]").astype(int) + 1970
    assert sorted(years.tolist()) == [1998, 2005]
    assert Feature.PRES in s.features and Feature.WDIR in s.features


def test_strict_mode_raises_with_line_number():
    bad = MODERN + "2010 02 03 06 50 1 2 3\n"
    with pytest.raises(StdmetFormatError) as exc:
        parse_stdmet(bad, "x", strict=True)
    assert exc.value.lineno == 5
    lenient = parse_stdmet(bad, "x")
    assert lenient.report.rows_rejected == 1 and len(lenient) == 2


def test_empty_input_rejected():
    with pytest.raises(ValueError):
        parse_stdmet("", "x")
    assert len(parse_stdmet("#YY MM DD hh mm WDIR\n", "x")) == 0
    with pytest.raises(ValueError):
        parse_stdmet("# comment only\n", "x")


def test_is_missing_and_feature_aliases():
    assert is_missing("WVHT", 99.0)
    assert is_missing(Feature.ATMP, 999.0) and is_missing("ATMP", 99.0)
    assert not is_missing("WVHT", 9.9)
    assert feature("wvht") is Feature.WVHT
    with pytest.raises(ValueError):
        feature("FOO")


def test_write_then_parse_round_trip():
    s = parse_stdmet(MODERN, "46001")
    again = parse_stdmet(write_stdmet(s), "46001")
    np.testing.assert_array_equal(again.timestamps, s.timestamps)
    np.testing.assert_allclose(again.values, s.values, equal_nan=True)


def test_read_gz_and_station_from_name(tmp_path):
    p = tmp_path / "46042h2010.txt.gz"
    p.write_bytes(gzip.compress(MODERN.encode()))
    s = read_stdmet(p)
    assert s.station_id == "46042" and len(s) == 2


def test_fetch_without_network_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        fetch_stdmet("46025", 2009, tmp_path, allow_net=False)
    (tmp_path / "46025h2009.txt").write_text(MODERN)
    assert fetch_stdmet("46025", 2009, tmp_path).name == "46025h2009.txt"


def _series(station, stamps, wvht, apd=None):
    ts = np.array(stamps, dtype="datetime64[m]")
    cols = [np.asarray(wvht, float)]
    feats = [Feature.WVHT]
    if apd is not None:
        cols.append(np.asarray(apd, float))
        feats.append(Feature.APD)
    return StationSeries(station, ts, np.column_stack(cols), tuple(feats))


def test_align_drops_any_missing_wanted_row():
    t = ["2009-01-01T00:00", "2009-01-01T01:00", "2009-01-01T02:00", "2009-01-01T03:00"]
    a = _series("A", t, [1, np.nan, 3, 4], apd=[5, 5, np.nan, 5])
    b = _series("B", t[:3] + ["2009-01-01T05:00"], [1, 2, 3, 4])
    only_h = align_stations([a, b], [("A", "WVHT"), ("B", "WVHT")])
    assert only_h.timestamps.tolist() == np.array(t[:1] + t[2:3], dtype="datetime64[m]").tolist()
    both = align_stations([a, b], [("A", "WVHT"), ("A", "APD"), ("B", "WVHT")])
    assert len(both) == 1
    assert both.keys == (("A", "WVHT"), ("A", "APD"), ("B", "WVHT"))
    with pytest.raises(EmptyAlignmentError):
        align_stations([a, _series("B", ["2011-01-01T00:00"], [1])], [("A", "WVHT"), ("B", "WVHT")])


def test_align_rejects_unknown_station_or_feature():
    a = _series("A", ["2009-01-01T00:00"], [1])
    with pytest.raises(ValueError):
        align_stations([a], [("Z", "WVHT")])
    with pytest.raises(ValueError):
        align_stations([a], [("A", "APD")])


def test_refined_filter_threshold():
    n = 1000
    ts = np.datetime64("2009-01-01T00:00", "m") + np.arange(n) * np.timedelta64(60, "m")
    s = _series("A", ts, np.ones(n), apd=np.ones(n))
    assert refined_station_filter(s, 2009)
    apd = np.ones(n)
    apd[0] = np.nan
    assert not refined_station_filter(_series("A", ts, np.ones(n), apd=apd), 2009)
    assert not refined_station_filter(_series("A", ts, np.ones(n)), 2009)


def test_concat_keeps_first_duplicate():
    a = _series("A", ["2009-12-31T23:00", "2010-01-01T00:00"], [1, 2])
    b = _series("A", ["2010-01-01T00:00", "2010-01-01T01:00"], [9, 3])
    c = concat_series([a, b])
    assert c.column("WVHT").tolist() == [1, 2, 3]
    with pytest.raises(ValueError):
        concat_series([a, _series("B", ["2010-01-01T00:00"], [1])])


def test_table_csv_round_trip(tmp_path):
    ts = np.array(["2009-01-01T00:00", "2009-01-01T01:00"], dtype="datetime64[m]")
    t = AlignedTable(ts, (("A", "WVHT"), ("B", "APD")), np.array([[1.0, 0.1 + 0.2], [2.5, 3.0]]))
    p = tmp_path / "t.csv"
    t.to_csv(p)
    assert p.read_text().splitlines()[0] == "timestamp,A:WVHT,B:APD"
    u = AlignedTable.from_csv(p)
    assert u.keys == t.keys and np.array_equal(u.data, t.data) and u.fingerprint() == t.fingerprint()
    assert len(t.year_rows([2009])) == 2 and len(t.year_rows([2010])) == 0


def test_table_rejects_missing_values():
    with pytest.raises(ValueError):
        AlignedTable(np.array(["2009-01-01T00:00"], dtype="datetime64[m]"), (("A", "WVHT"),), np.array([[np.nan]]))


def test_series_csv_round_trip(tmp_path):
    s = parse_stdmet(MODERN, "46001")
    p = tmp_path / "s.csv"
    series_to_csv(s, p)
    u = series_from_csv(p, "46001")
    np.testing.assert_allclose(u.values, s.values, equal_nan=True)


def test_column_labels():
    assert column_label(("46069", "WVHT")) == "46069:WVHT"
    assert parse_column_label("46069:wvht") == ("46069", "WVHT")
    with pytest.raises(ValueError):
        parse_column_label("WVHT")
