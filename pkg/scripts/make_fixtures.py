"""Regenerate the bundled test fixtures under src/waveseq/data/.

Every file is synthetic. The two hand-written stdmet snippets mimic the
archive layouts (4 and 5 time columns) and exercise sentinel handling; the
buoy subset is a simulated, correlated sea state for stations 46025, 46042
and 46069, not NDBC data.

    python3 scripts/make_fixtures.py
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

DATA = Path(__file__).resolve().parents[1] / "src" / "waveseq" / "data"

# 5 time columns, modern '#' header. Row notes:
#   r1 complete; r2 WVHT/DPD/APD/MWD missing (99/999); r3 PRES 9999, ATMP 999, TIDE 99;
#   r4 too few columns (rejected); r5 duplicate of r1 (dropped); r6 WDIR 999, WTMP 99, DEWP 999;
#   r7 month 13 (rejected); r8 complete; r9 non-numeric GST (rejected); r10 complete, out of order.
STDMET_5COL = """\
#YY  MM DD hh mm WDIR WSPD GST  WVHT   DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE
#yr  mo dy hr mn degT m/s  m/s     m   sec   sec degT   hPa  degC  degC  degC   mi    ft
2009 01 01 00 50 270  5.1  6.3  1.52  11.43  7.21 280 1021.3  11.2  12.9   8.1 99.0 99.00
2009 01 01 01 50 265  4.8  6.0 99.00  99.00 99.00 999 1021.5  11.0  12.9   8.0 99.0 99.00
2009 01 01 02 50 260  4.2  5.5  1.61  12.12  7.40 285 9999.0 999.0  12.8   7.9 99.0 99.00
2009 01 01 03 50 255  4.0  5.1  1.66  12.50
2009 01 01 00 50 270  5.1  6.3  1.52  11.43  7.21 280 1021.3  11.2  12.9   8.1 99.0 99.00
2009 01 01 04 50 999  3.9  5.0  1.70  12.50  7.62 290 1022.0  10.7  99.0 999.0 99.0 99.00
2009 13 01 05 50 250  3.7  4.8  1.72  12.90  7.70 290 1022.1  10.6  12.7   7.6 99.0 99.00
2009 01 01 06 50 245  3.5  4.6  1.75  13.30  7.81 292 1022.3  10.5  12.7   7.5 99.0 99.00
2009 01 01 07 50 240  3.3  n/a  1.77  13.30  7.90 293 1022.4  10.4  12.6   7.4 99.0 99.00
2009 01 01 05 50 250  3.6  4.7  1.73  12.90  7.73 291 1022.2  10.6  12.7   7.6 99.0 99.00
"""

# 4 time columns, pre-1999 header without '#', two-digit years.
#   r1 complete; r2 WVHT 99; r3 BAR 9999 and WTMP 999; r4 complete; r5 VIS and DEWP 99;
#   r6 extra column (rejected); r7 complete; r8 WD 999 and MWD 999.
STDMET_4COL = """\
YY MM DD hh  WD WSPD  GST  WVHT  DPD  APD MWD    BAR  ATMP  WTMP  DEWP  VIS
97 03 14 00 310  7.2  8.9  2.10 10.0  6.9 300 1015.2  13.1  13.8  10.2 99.0
97 03 14 01 312  7.5  9.1 99.00 10.0  7.0 302 1015.0  13.0  13.8  10.1 99.0
97 03 14 02 315  7.9  9.8  2.31 10.5  7.1 305 9999.0  12.9 999.0  10.0 99.0
97 03 14 03 318  8.1 10.2  2.45 11.1  7.3 305 1014.6  12.8  13.7   9.9  8.0
97 03 14 04 320  8.3 10.5  2.52 11.1  7.4 306 1014.4  12.7  13.7  99.0 99.0
97 03 14 05 321  8.4 10.6  2.60 11.1  7.5 306 1014.2  12.6  13.6   9.8  8.0 1.0
97 03 14 06 322  8.6 10.8  2.66 11.8  7.6 307 1014.0  12.5  13.6   9.7  8.0
97 03 14 07 999  8.7 11.0  2.71 11.8  7.7 999 1013.9  12.4  13.5   9.6  8.0
"""

HEADER = ("#YY  MM DD hh mm WDIR WSPD GST  WVHT   DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE\n"
          "#yr  mo dy hr mn degT m/s  m/s     m   sec   sec degT   hPa  degC  degC  degC   mi    ft\n")


def sine_table(n: int = 2000) -> str:
    lines = ["timestamp,synth:WVHT"]
    t0 = np.datetime64("2000-01-01T00:00", "m")
    for t in range(n):
        stamp = np.datetime_as_string(t0 + np.timedelta64(60 * t, "m"), unit="m") + "Z"
        lines.append(f"{stamp},{math.sin(2 * math.pi * t / 24)!r}")
    return "\n".join(lines) + "\n"


def buoy_subset(seed: int = 20090101, days: int = 30):
    """Three hourly stdmet archives per year with shared swell and local noise."""
    rng = np.random.default_rng(seed)
    out = {}
    for year in (2009, 2010):
        n = days * 24
        t = np.arange(n)
        swell = np.zeros(n)
        for k in range(1, n):
            swell[k] = 0.97 * swell[k - 1] + 0.06 * rng.normal()
        base = 1.8 + 0.6 * np.sin(2 * np.pi * t / (24 * 7)) + 2.0 * swell
        hs = {
            "46025": base + 0.10 * rng.normal(size=n),
            "46042": np.roll(base, 1) + 0.10 * rng.normal(size=n),
        }
        hs["46069"] = 0.5 * hs["46025"] + 0.5 * hs["46042"] + 0.15 + 0.08 * rng.normal(size=n)
        for st, h in hs.items():
            h = np.clip(h, 0.3, None)
            apd = 4.5 + 1.6 * h + 0.2 * rng.normal(size=n)
            dpd = apd * 1.5
            gap = rng.random(n) < 0.03
            rows = [HEADER]
            for k in range(n):
                stamp = np.datetime64(f"{year}-01-01T00:50", "m") + np.timedelta64(60 * k, "m")
                y, mo, d, hh, mi = stamp.astype(object).timetuple()[:5]
                wv = 99.0 if gap[k] else h[k]
                ap = 99.0 if gap[k] else apd[k]
                dp = 99.0 if gap[k] else dpd[k]
                rows.append(
                    f"{y:4d} {mo:02d} {d:02d} {hh:02d} {mi:02d} {270:3d} {5.0:4.1f} {6.5:4.1f} "
                    f"{wv:5.2f} {dp:5.2f} {ap:5.2f} {999:3d} {1018.0:6.1f} {999.0:5.1f} {14.0:5.1f} "
                    f"{999.0:5.1f} {99.0:4.1f} {99.0:5.2f}\n"
                )
            out[f"{st}h{year}.txt"] = "".join(rows)
    return out


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "stdmet_5col.txt").write_text(STDMET_5COL)
    (DATA / "stdmet_4col.txt").write_text(STDMET_4COL)
    (DATA / "sine.csv").write_text(sine_table())
    sub = DATA / "synthetic_buoys"
    sub.mkdir(exist_ok=True)
    for name, text in buoy_subset().items():
        (sub / name).write_text(text)
    (DATA / "README.txt").write_text(
        "Synthetic fixtures generated by scripts/make_fixtures.py. None of these files is real NDBC data.\n"
        "stdmet_5col.txt, stdmet_4col.txt: hand-written snippets in the two archive layouts.\n"
        "sine.csv: hourly sin(2*pi*t/24), 2000 rows.\n"
        "synthetic_buoys/: simulated 30-day hourly archives for 46025, 46042, 46069 in 2009 and 2010.\n"
    )


if __name__ == "__main__":
    main()
