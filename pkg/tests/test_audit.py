import json
import math
from fractions import Fraction

import pytest
from mpmath import mpf

from ppszlab.audit import (
    KNOWN_FLAGS,
    AuditEntry,
    _compare,
    evaluate,
    extremum,
    regular_chain,
    registry_ids,
    run_audit,
    stated_value,
)


@pytest.fixture(scope="module")
def report():
    return run_audit("all")


class TestStatedValue:
    def test_decimal_slack(self):
        v, sl = stated_value("0.074135")
        assert float(v) == 0.074135 and float(sl) == pytest.approx(1e-6)

    def test_fraction_exact(self):
        v, sl = stated_value("1/15275")
        assert float(v) == pytest.approx(1 / 15275) and sl < mpf(10) ** -40

    def test_integer(self):
        assert stated_value("9531")[1] == 0

    def test_compare(self):
        assert _compare(mpf("0.07413533"), "=", "0.074135")
        assert not _compare(mpf("0.0741366"), "=", "0.074135")
        assert _compare(mpf(1) / 15276, "<=", "1/15275")
        assert not _compare(mpf(1) / 15274, "<=", "1/15275")
        assert _compare(mpf("9530.34"), "=", "9531", slack=1.0)


def test_evaluate_flag_and_fail():
    ok = evaluate(AuditEntry("t", lambda: mpf(1) / 3,
                             lambda: 1 / 3, "1/3", "="))
    assert ok.status == "PASS" and ok.self_check
    bad = evaluate(AuditEntry("t", lambda: mpf(1) / 3, lambda: 0.5, "1/3", "="))
    assert bad.status == "FAIL" and not bad.self_check
    flagged = evaluate(AuditEntry("t", lambda: mpf(1) / 3, lambda: 1 / 3, "0.30", "=", flag="known"))
    assert flagged.status == "FLAG"


def test_extremum_routes():
    fn = lambda x, m=math: -(x - 0.3) ** 2 + 0.25  # noqa: E731
    assert extremum(fn, [(0.0, 1.0)], "max") == pytest.approx(0.25, abs=1e-12)
    assert float(extremum(fn, [(0.0, 1.0)], "max", route="mp")) == pytest.approx(0.25, abs=1e-12)


class TestChain:
    def test_regular_numbers(self):
        c = regular_chain()
        # independent recomputation of the chain in plain floats
        raw = 1 / (0.00168728 * 0.1 - 0.00638 * 0.01)
        assert float(c.raw) == pytest.approx(raw, rel=1e-12)
        assert float(c.corrected) == pytest.approx(raw * 12 / 11, rel=1e-12)
        assert float(c.corrected) <= 10398
        assert 1 / float(c.combined) < 15275

    def test_s3(self, report):
        assert report.by_id("s3").computed == pytest.approx(2 - 2 * math.log(2), abs=1e-15)

    def test_junk2_closed_form(self, report):
        e = report.by_id("junk2")
        assert e.computed == pytest.approx(8767591 / 192 - 65880 * math.log(2), rel=1e-6)
        assert e.status == "FLAG"

    def test_twocc_m2(self, report):
        assert report.by_id("kl_twocc_m2").computed == pytest.approx(float(Fraction(125, 1008)), abs=1e-12)


class TestReport:
    def test_size_and_self_checks(self, report):
        assert len(report.entries) >= 40
        assert all(e.self_check for e in report.entries)
        assert report.ok and not report.statuses("FAIL")

    def test_flags(self, report):
        flags = set(report.statuses("FLAG"))
        assert set(KNOWN_FLAGS) <= flags
        assert flags == {"kl_twocc_m2", "hlow_component_edges", "junk2", "junk2cc_corr", "twocc_corr_linear"}

    def test_ids_unique(self):
        ids = registry_ids()
        assert len(ids) == len(set(ids))

    def test_json_deterministic(self, report):
        again = run_audit(["s3", "junk2", "improved_base"])
        for e in again.entries:
            assert e == report.by_id(e.id)
        js = report.to_json(sort_keys=True)
        assert json.loads(js)["entries"][0]["id"] == report.entries[0].id
        assert run_audit(["s3"]).to_json(sort_keys=True) == run_audit(["s3"]).to_json(sort_keys=True)

    def test_unknown_id(self):
        with pytest.raises(KeyError):
            run_audit(["nope"])

    def test_table(self, report):
        tab = report.table()
        assert "improved_base" in tab and "FLAG" in tab
