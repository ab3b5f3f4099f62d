"""Plain-text data ingestion and result/report writers.

Input directory layout (CSV, header row, UTF-8)::

    sites.csv          site_id, area_km2, elevation_m, mean_annual_flow_volume_1e6m3
    annual_maxima.csv  site_id, year, discharge_m3s
    precipitation.csv  site_id, date, precip_mm
    crops.csv          site_id, cell_id, crop_area_km2, yield2000_t_ha, yield_trend_t_ha_yr
    reservoirs.csv     site_id, year_built, capacity_1e6m3, drainage_area_km2
    flood_dates.csv    site_id, year, day_of_year

``sites.csv`` and ``annual_maxima.csv`` are required; the others may be absent.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from .config import RunConfig
from .covariates import CropCell, DailySeries, ReservoirRecord
from .pipeline import SiteRecord, SiteResult
from .selection import Driver
from .series import AnnualMaxSeries

SCHEMA_VERSION = 1

FILES = {
    "sites": ("sites.csv", ["site_id", "area_km2", "elevation_m", "mean_annual_flow_volume_1e6m3"]),
    "annual_maxima": ("annual_maxima.csv", ["site_id", "year", "discharge_m3s"]),
    "precipitation": ("precipitation.csv", ["site_id", "date", "precip_mm"]),
    "crops": ("crops.csv", ["site_id", "cell_id", "crop_area_km2", "yield2000_t_ha", "yield_trend_t_ha_yr"]),
    "reservoirs": ("reservoirs.csv", ["site_id", "year_built", "capacity_1e6m3", "drainage_area_km2"]),
    "flood_dates": ("flood_dates.csv", ["site_id", "year", "day_of_year"]),
}
REQUIRED = ("sites", "annual_maxima")


class IngestError(ValueError):
    """Validation failure; the message names the file, the line and the violated rule."""

    def __init__(self, path, line, rule):
        self.path, self.line, self.rule = str(path), line, rule
        super().__init__(f"{path}:{line}: {rule}")


def _rows(path: Path, header: list[str]):
    """Yield ``(line_number, row_dict)``; the header must match exactly."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise IngestError(path, 1, "empty file, expected a header row") from None
        got = [h.strip() for h in got]
        if got != header:
            raise IngestError(path, 1, f"header {got} does not match expected {header}")
        for i, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestError(path, i, f"expected {len(header)} fields, got {len(row)}")
            yield i, dict(zip(header, (c.strip() for c in row)))


def _num(path, line, row, key, kind=float):
    try:
        v = kind(row[key])
    except ValueError:
        raise IngestError(path, line, f"{key}={row[key]!r} is not a valid {kind.__name__}") from None
    if kind is float and not np.isfinite(v):
        raise IngestError(path, line, f"{key} must be finite")
    return v


def ingest(data_dir, config: RunConfig | None = None) -> list[SiteRecord]:
    """Read and validate every site in ``data_dir``; returns records sorted by site id."""
    cfg = config or RunConfig()
    data_dir = Path(data_dir)
    paths = {k: data_dir / name for k, (name, _) in FILES.items()}
    for k in REQUIRED:
        if not paths[k].exists():
            raise IngestError(paths[k], 0, "required file is missing")

    meta = {}
    p = paths["sites"]
    for line, row in _rows(p, FILES["sites"][1]):
        sid = row["site_id"]
        if not sid:
            raise IngestError(p, line, "empty site_id")
        if sid in meta:
            raise IngestError(p, line, f"duplicate site_id {sid!r}")
        area = _num(p, line, row, "area_km2")
        vol = _num(p, line, row, "mean_annual_flow_volume_1e6m3")
        if area <= 0 or vol <= 0:
            raise IngestError(p, line, "area and mean annual flow volume must be positive")
        meta[sid] = (area, _num(p, line, row, "elevation_m"), vol)

    def check_site(path, line, sid):
        if sid not in meta:
            raise IngestError(path, line, f"site_id {sid!r} not declared in sites.csv")

    am = defaultdict(dict)
    p = paths["annual_maxima"]
    for line, row in _rows(p, FILES["annual_maxima"][1]):
        sid = row["site_id"]
        check_site(p, line, sid)
        year = _num(p, line, row, "year", int)
        q = _num(p, line, row, "discharge_m3s")
        if year in am[sid]:
            raise IngestError(p, line, f"duplicate year {year} for site {sid}")
        if q <= 0:
            raise IngestError(p, line, f"non-positive discharge {q} in {year} for site {sid}")
        am[sid][year] = q

    precip = defaultdict(list)
    p = paths["precipitation"]
    if p.exists():
        for line, row in _rows(p, FILES["precipitation"][1]):
            sid = row["site_id"]
            check_site(p, line, sid)
            try:
                day = dt.date.fromisoformat(row["date"])
            except ValueError:
                raise IngestError(p, line, f"date {row['date']!r} is not ISO-8601") from None
            v = _num(p, line, row, "precip_mm")
            if v < 0:
                raise IngestError(p, line, f"negative precipitation on {day.isoformat()}")
            precip[sid].append((day, v, line))

    crops = defaultdict(dict)
    p = paths["crops"]
    if p.exists():
        for line, row in _rows(p, FILES["crops"][1]):
            sid = row["site_id"]
            check_site(p, line, sid)
            if row["cell_id"] in crops[sid]:
                raise IngestError(p, line, f"duplicate cell_id {row['cell_id']!r} for site {sid}")
            try:
                crops[sid][row["cell_id"]] = CropCell(
                    _num(p, line, row, "crop_area_km2"),
                    _num(p, line, row, "yield2000_t_ha"),
                    _num(p, line, row, "yield_trend_t_ha_yr"),
                )
            except ValueError as exc:
                raise IngestError(p, line, str(exc)) from None

    reservoirs = defaultdict(list)
    p = paths["reservoirs"]
    if p.exists():
        for line, row in _rows(p, FILES["reservoirs"][1]):
            sid = row["site_id"]
            check_site(p, line, sid)
            try:
                r = ReservoirRecord(
                    _num(p, line, row, "year_built", int),
                    _num(p, line, row, "capacity_1e6m3"),
                    _num(p, line, row, "drainage_area_km2"),
                )
            except ValueError as exc:
                raise IngestError(p, line, str(exc)) from None
            if r.drainage_area > meta[sid][0]:
                raise IngestError(p, line, f"reservoir drainage area exceeds catchment area of site {sid}")
            reservoirs[sid].append(r)

    dates = defaultdict(list)
    p = paths["flood_dates"]
    if p.exists():
        for line, row in _rows(p, FILES["flood_dates"][1]):
            sid = row["site_id"]
            check_site(p, line, sid)
            year, doy = _num(p, line, row, "year", int), _num(p, line, row, "day_of_year", int)
            if not 1 <= doy <= (366 if _leap(year) else 365):
                raise IngestError(p, line, f"day_of_year {doy} out of range for {year}")
            dates[sid].append((year, doy))

    needs_precip = any(k.is_precipitation for k in cfg.covariates)
    out = []
    for sid in sorted(meta):
        area, elev, vol = meta[sid]
        years = sorted(am[sid])
        if len(years) < cfg.min_record_length:
            raise IngestError(
                paths["annual_maxima"], 0,
                f"site {sid} has {len(years)} annual maxima, fewer than the required {cfg.min_record_length}",
            )
        daily = _daily_series(paths["precipitation"], sid, precip.get(sid))
        if daily is None and needs_precip:
            raise IngestError(paths["precipitation"], 0, f"site {sid} has no daily precipitation")
        out.append(
            SiteRecord(
                sid, area, elev, vol,
                AnnualMaxSeries(np.array(years), np.array([am[sid][y] for y in years]), sid),
                daily,
                [crops[sid][c] for c in sorted(crops[sid])],
                sorted(reservoirs[sid], key=lambda r: (r.year_built, r.capacity, r.drainage_area)),
                sorted(dates[sid]),
            )
        )
    return out


def _leap(year):
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def _daily_series(path, sid, rows):
    if not rows:
        return None
    rows = sorted(rows)
    first, last = rows[0][0], rows[-1][0]
    if (first.month, first.day) != (1, 1):
        raise IngestError(path, rows[0][2], f"site {sid}: precipitation starts mid-year on {first.isoformat()}")
    if (last.month, last.day) != (12, 31):
        raise IngestError(path, rows[-1][2], f"site {sid}: precipitation ends mid-year on {last.isoformat()}")
    for (d0, _, _), (d1, _, line) in zip(rows, rows[1:]):
        if d1 == d0:
            raise IngestError(path, line, f"site {sid}: duplicate date {d1.isoformat()}")
        if d1 != d0 + dt.timedelta(days=1):
            missing = d0 + dt.timedelta(days=1)
            raise IngestError(path, line, f"site {sid}: missing date {missing.isoformat()}")
    return DailySeries(first, np.array([v for _, v, _ in rows]))


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows, schema: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema: {schema} v{SCHEMA_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_site_records(sites, data_dir):
    """Write ``SiteRecord`` objects in the input layout read by :func:`ingest`."""
    d = Path(data_dir)
    d.mkdir(parents=True, exist_ok=True)

    def write(key, rows):
        name, header = FILES[key]
        with open(d / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])

    sites = sorted(sites, key=lambda s: s.site_id)
    write("sites", [(s.site_id, s.catchment_area, s.outlet_elevation, s.mean_annual_flow_volume) for s in sites])
    write("annual_maxima", [
        (s.site_id, int(y), float(q)) for s in sites for y, q in zip(s.annual_max.years, s.annual_max.discharge)
    ])

    def precip_rows():
        for s in sites:
            if s.precipitation is None:
                continue
            day = s.precipitation.start_date
            for v in s.precipitation.values:
                yield s.site_id, day.isoformat(), float(v)
                day += dt.timedelta(days=1)

    write("precipitation", precip_rows())
    write("crops", [
        (s.site_id, f"c{i:04d}", c.crop_area, c.yield_2000, c.yield_trend)
        for s in sites for i, c in enumerate(s.crop_cells)
    ])
    write("reservoirs", [
        (s.site_id, r.year_built, r.capacity, r.drainage_area) for s in sites for r in s.reservoirs
    ])
    write("flood_dates", [(s.site_id, y, doy) for s in sites for y, doy in s.flood_dates])


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False, separators=(",", ":"))


def write_results_jsonl(results, path):
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dumps({"schema": "floodattrib/site-result", "version": SCHEMA_VERSION}) + "\n")
        for r in sorted(results, key=lambda r: r.site_id):
            fh.write(_dumps(r.to_dict()) + "\n")


def read_results_jsonl(path) -> list[SiteResult]:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != "floodattrib/site-result":
            raise ValueError(f"{path}: not a site-result file")
        if header.get("version") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported schema version {header.get('version')}")
        return [SiteResult.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_failures(failures, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dumps({"schema": "floodattrib/failure", "version": SCHEMA_VERSION}) + "\n")
        for f in sorted(failures, key=lambda f: f["site_id"]):
            fh.write(_dumps(f) + "\n")


def occurrence_table(results, decision=lambda r: r.decision) -> dict:
    """Counts of selected driver x Mann-Kendall significance (upward)."""
    table = {d: {"significant_upward": 0, "not_significant": 0} for d in Driver}
    for r in results:
        col = "significant_upward" if (r.mk is not None and r.mk.significant_upward) else "not_significant"
        table[decision(r).selected][col] += 1
    return table


def report(results, out_dir) -> list[Path]:
    """Write per-site records, occurrence tables and plot-ready series; returns written paths."""
    results = sorted(results, key=lambda r: r.site_id)
    if not results:
        raise ValueError("refusing to write a report for an empty result list")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    p = out / "site_results.jsonl"
    write_results_jsonl(results, p)
    written.append(p)

    table = occurrence_table(results)
    p = out / "occurrence.csv"
    _write_csv(p, ["selected", "significant_upward", "not_significant"],
               [(d.value, c["significant_upward"], c["not_significant"]) for d, c in table.items()],
               "floodattrib/occurrence")
    written.append(p)

    kinds = sorted({k for r in results for k in r.sweep}, key=lambda k: k.value)
    rows = []
    for kind in kinds:
        subset = [r for r in results if kind in r.sweep]
        t = occurrence_table(subset, lambda r, k=kind: r.sweep[k])
        rows += [(kind.value, d.value, c["significant_upward"], c["not_significant"])
                 for d, c in t.items() if d in (Driver.TIME_INVARIANT, Driver.ATMOSPHERIC)]
    p = out / "sweep_occurrence.csv"
    _write_csv(p, ["covariate", "selected", "significant_upward", "not_significant"], rows,
               "floodattrib/sweep-occurrence")
    written.append(p)

    rows = []
    for r in results:
        if r.trend is None:
            continue
        rows.append((r.site_id, r.catchment_area, r.trend.slope, r.trend.ci_low, r.trend.ci_high,
                     bool(r.mk and r.mk.significant_upward), r.decision.selected.value))
    p = out / "trend_vs_area.csv"
    _write_csv(p, ["site_id", "area_km2", "slope_pct_yr", "ci_low", "ci_high", "mk_significant", "selected"],
               rows, "floodattrib/trend-vs-area")
    written.append(p)

    rows = []
    for r in results:
        for key in sorted(r.models):
            m = r.models[key]
            if m.b_density is None:
                continue
            rows += [(r.site_id, key, b, dens) for b, dens in zip(*m.b_density)]
    p = out / "b_posterior_density.csv"
    _write_csv(p, ["site_id", "model", "b", "density"], rows, "floodattrib/b-density")
    written.append(p)

    rows = []
    for r in results:
        s = r.seasonality
        if s is None:
            continue
        rows.append((r.site_id, s.mean_angle, s.mean_day, s.concentration_r,
                     s.concentration_r * np.cos(s.mean_angle), s.concentration_r * np.sin(s.mean_angle),
                     r.catchment_area, r.decision.selected.value, bool(r.mk and r.mk.significant_upward)))
    p = out / "seasonality_polar.csv"
    _write_csv(p, ["site_id", "mean_angle_rad", "mean_day", "r", "x", "y", "area_km2", "selected",
                   "mk_significant"], rows, "floodattrib/seasonality")
    written.append(p)
    return written
