"""CSV and JSON serialization for scans, curves, and fit reports.

All CSV files are comma separated with one header line; metadata rides in
leading comment lines of the form '# key = value' so that ground truth and
provenance survive a round trip through the file system.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .pipeline import NormalizedScan, RawScan
from .synth import DecayCurve


def _format_meta(meta: dict) -> list:
    lines = []
    for key, value in meta.items():
        lines.append(f"# {key} = {value}")
    return lines


def _read_with_meta(path):
    """Read a CSV with '#' comment metadata; return (meta, header, columns)."""
    meta = {}
    header = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line.lstrip("#").strip()
                if "=" in body:
                    key, _, value = body.partition("=")
                    meta[key.strip()] = value.strip()
                continue
            if header is None:
                header = [c.strip() for c in line.split(",")]
                continue
            rows.append([v.strip() for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header line found")
    if not rows:
        return meta, header, {name: np.array([]) for name in header}
    raw = np.array(rows, dtype=object)
    columns = {}
    for i, name in enumerate(header):
        col = raw[:, i]
        try:
            columns[name] = col.astype(float)
        except ValueError:
            columns[name] = col
    return meta, header, columns


def _require_columns(header, required, path):
    missing = [c for c in required if c not in header]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}; "
                         f"found {header}")


def write_decay_curve(path, curve: DecayCurve):
    lines = _format_meta(curve.meta)
    if curve.power_w is not None and "power_w" not in curve.meta:
        lines.append(f"# power_w = {curve.power_w}")
    lines.append("time_s,counts_per_s")
    for t, y in zip(curve.time_s, curve.counts_per_s):
        lines.append(f"{float(t)!r},{float(y)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_decay_curve(path) -> DecayCurve:
    meta, header, cols = _read_with_meta(path)
    _require_columns(header, ["time_s", "counts_per_s"], path)
    power = None
    if "power_w" in meta:
        power = float(meta["power_w"])
    return DecayCurve(time_s=cols["time_s"], counts_per_s=cols["counts_per_s"],
                      power_w=power, meta=meta)


def write_raw_scan(path, scan: RawScan):
    meta = dict(scan.meta)
    meta.setdefault("aom_off_start", scan.aom_off_range[0])
    meta.setdefault("aom_off_stop", scan.aom_off_range[1])
    lines = _format_meta(meta)
    lines.append("freq_hz,fluor_counts,power_counts")
    for f, y, p in zip(scan.freq, scan.fluor_counts, scan.power_monitor):
        lines.append(f"{float(f)!r},{float(y)!r},{float(p)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_raw_scan(path, aom_off_range=None) -> RawScan:
    meta, header, cols = _read_with_meta(path)
    _require_columns(header, ["freq_hz", "fluor_counts", "power_counts"], path)
    if aom_off_range is None:
        try:
            aom_off_range = (int(float(meta["aom_off_start"])),
                             int(float(meta["aom_off_stop"])))
        except KeyError:
            raise ValueError(f"{path}: no aom_off_range in metadata; "
                             "pass one explicitly") from None
    return RawScan(freq=cols["freq_hz"], fluor_counts=cols["fluor_counts"],
                   power_monitor=cols["power_counts"],
                   aom_off_range=tuple(aom_off_range), meta=meta)


def write_treated_scan(path, scan: RawScan, normalized: NormalizedScan):
    """Treated scan in the raw schema plus the excluded flag column.

    fluor_counts holds the power-normalized signal and power_counts the
    background-subtracted power trace.
    """
    lines = _format_meta(normalized.meta)
    lines.append("freq_hz,fluor_counts,power_counts,excluded")
    for f, y, p, ex in zip(normalized.freq, normalized.signal,
                           scan.power_monitor, normalized.excluded):
        lines.append(f"{float(f)!r},{float(y)!r},{float(p)!r},{int(ex)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_xy(path, x, y, x_name, y_name, meta=None):
    lines = _format_meta(meta or {})
    lines.append(f"{x_name},{y_name}")
    for xi, yi in zip(x, y):
        lines.append(f"{float(xi)!r},{float(yi)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_xy(path, x_name, y_name):
    meta, header, cols = _read_with_meta(path)
    _require_columns(header, [x_name, y_name], path)
    return cols[x_name], cols[y_name], meta


def write_report(path, report: dict):
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=False) + "\n",
                          encoding="utf-8")
