"""Side-by-side comparison of per-seed reports."""
from __future__ import annotations

import csv
import io
import statistics
from pathlib import Path

from .config import ConfigError
from .diagnostics import read_report

COLUMNS = ("final_loss", "transitions", "tv_distance", "runtime_s")


def collect_reports(paths) -> list[dict]:
    """Load report files; a directory contributes every ``report_seed*.json`` in it."""
    reports = []
    for p in map(Path, paths):
        if p.is_dir():
            found = sorted(p.glob("report_seed*.json"))
            if not found:
                raise ConfigError(str(p), "directory holds no reports")
            reports.extend(_load(f) for f in found)
        elif p.exists():
            reports.append(_load(p))
        else:
            raise ConfigError(str(p), "no such file")
    return reports


def _load(path: Path) -> dict:
    try:
        report = read_report(path)
    except ValueError as exc:
        raise ConfigError(str(path), f"not a report: {exc}") from None
    report["_path"] = str(path)
    return report


def _metric(report, name):
    if name == "runtime_s":
        return report.get("runtime_s")
    for rec in report.get("records", []):
        if rec["metric"] == name:
            return rec["value"]
    return None


def compare(reports: list[dict]) -> list[dict]:
    """One row per report plus a median row per experiment.

    Each metric gets a ``d_<metric>`` column: the difference to the matching
    seed of the first experiment, or to its median for median rows.
    """
    if len(reports) < 2:
        raise ConfigError("reports", "need at least two reports to compare")
    hashes = {r["objective_hash"] for r in reports}
    if len(hashes) > 1:
        raise ConfigError("reports", f"objectives differ: {sorted(hashes)}")

    groups: dict[str, list[dict]] = {}
    for r in reports:
        groups.setdefault(f"{r['optimizer']}:{r['config_hash']}", []).append(r)
    first_key = next(iter(groups))
    ref_by_seed = {r["seed"]: r for r in groups[first_key]}

    rows = []
    medians = {}
    for key, members in groups.items():
        for r in sorted(members, key=lambda r: r["seed"]):
            row = {"experiment": key, "seed": r["seed"]}
            ref = ref_by_seed.get(r["seed"])
            for col in COLUMNS:
                v = _metric(r, col)
                row[col] = v
                rv = None if ref is None else _metric(ref, col)
                row["d_" + col] = None if v is None or rv is None else v - rv
            rows.append(row)
        med = {"experiment": key, "seed": "median"}
        for col in COLUMNS:
            vals = [v for v in (_metric(r, col) for r in members) if v is not None]
            med[col] = statistics.median(vals) if vals else None
        medians[key] = med
    for key, med in medians.items():
        for col in COLUMNS:
            a, b = med[col], medians[first_key][col]
            med["d_" + col] = None if a is None or b is None else a - b
        rows.append(med)
    return rows


def fieldnames():
    names = ["experiment", "seed"]
    for col in COLUMNS:
        names += [col, "d_" + col]
    return names


def format_table(rows) -> str:
    names = fieldnames()

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    body = [[cell(row.get(n)) for n in names] for row in rows]
    widths = [max(len(n), *(len(b[i]) for b in body)) for i, n in enumerate(names)]
    lines = ["  ".join(n.ljust(w) for n, w in zip(names, widths))]
    lines += ["  ".join(c.ljust(w) for c, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames(), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.items() if k in fieldnames()})
    return buf.getvalue()
