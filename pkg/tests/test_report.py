from fractions import Fraction
import json

from kclab.report import Report, flatten_report, rational


def test_rational_rendering():
    assert rational(Fraction(1, 3)) == {"exact": "1/3", "approx": 0.333333333333}
    assert rational(0) == {"exact": "0/1", "approx": 0.0}
    assert rational(Fraction(-7, 2))["exact"] == "-7/2"


def test_report_holds_and_counts_failures():
    rep = Report("x", {"seed": 1})
    rep.check("a", "1 <= 2", [True, True])
    assert rep.holds
    c = rep.check("b", "2 <= 1", [True, False, False])
    assert not rep.holds and (c.failures, c.total) == (2, 3)


def test_timestamp_only_difference():
    rep = Report("x", {"seed": 1}, items=[{"v": Fraction(1, 2)}], aggregate={"k": 3})
    a, b = json.loads(rep.to_json()), json.loads(rep.to_json(timestamp=False))
    assert "timestamp" in a and "timestamp" not in b
    a.pop("timestamp")
    assert a == b


def test_flatten_rows():
    d = {"items": [{"a": {"exact": "1/2", "approx": 0.5}}], "holds": True, "aggregate": {"x": [1, 2]}}
    assert flatten_report(d) == [
        ("aggregate", "", "x[0]", "1"),
        ("aggregate", "", "x[1]", "2"),
        ("holds", "", "", "true"),
        ("items", "0", "a.approx", "0.5"),
        ("items", "0", "a.exact", "1/2"),
    ]
