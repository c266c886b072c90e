"""Machine-readable run reports rendered as JSON or long-format CSV."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from typing import Any

SCHEMA_VERSION = 1


def rational(x) -> dict:
    """Exact "p/q" string plus a 12-significant-digit decimal."""
    x = Fraction(x)
    return {"exact": f"{x.numerator}/{x.denominator}", "approx": float(f"{float(x):.12g}")}


def jsonable(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return rational(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return obj.item()  # numpy scalar
    return obj


@dataclass
class Check:
    name: str
    anchor: str  # the inequality being tested, written as a formula
    holds: bool
    failures: int = 0
    total: int = 1


@dataclass
class Report:
    command: str
    config: dict
    items: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    def check(self, name: str, anchor: str, outcomes) -> Check:
        """Record a check that holds iff every outcome is true."""
        outcomes = [bool(o) for o in outcomes]
        c = Check(name, anchor, all(outcomes), outcomes.count(False), len(outcomes))
        self.checks.append(c)
        return c

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)

    def to_dict(self, timestamp: bool = True) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": jsonable(self.config),
            "items": jsonable(self.items),
            "aggregate": jsonable(self.aggregate),
            "checks": [jsonable(vars(c)) for c in self.checks],
            "holds": self.holds,
        }
        if timestamp:
            d["timestamp"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return d

    def to_json(self, timestamp: bool = True) -> str:
        return json.dumps(self.to_dict(timestamp), indent=2, sort_keys=True) + "\n"

    def to_csv(self, timestamp: bool = True) -> str:
        return rows_to_csv(flatten_report(self.to_dict(timestamp)))

    def render(self, fmt: str = "json", timestamp: bool = True) -> str:
        if fmt == "json":
            return self.to_json(timestamp)
        if fmt == "csv":
            return self.to_csv(timestamp)
        raise ValueError(f"unknown output format {fmt!r}")


def _flatten(prefix: str, obj: Any, out: list):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, obj))


def flatten_report(d: dict) -> list[tuple[str, str, str, str]]:
    """(section, item, key, value) rows; item is the list position or ''."""
    rows = []
    for section in sorted(d):
        value = d[section]
        if section == "items":
            for i, item in enumerate(value):
                flat: list = []
                _flatten("", item, flat)
                rows += [(section, str(i), k, _cell(v)) for k, v in flat]
        else:
            flat = []
            _flatten("", value, flat)
            rows += [(section, "", k, _cell(v)) for k, v in flat]
    return rows


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "item", "key", "value"])
    w.writerows(rows)
    return buf.getvalue()
