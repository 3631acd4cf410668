import csv
import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from ce_lab.ensembles import clifford_table_hash
from ce_lab.estimators import EstimateResult, Method, estimate_record
from ce_lab.measurement import LRMRecord, SICRecord, simulate_lrm, simulate_sic
from ce_lab.records import (RecordBudgetError, RecordFormatError, RecordSymbolError, RecordVersionError,
                            parse_record, read_record, read_result, serialize_record, write_record,
                            write_result)
from ce_lab.states import ghz_state, random_state


def body(text):
    return text.split("\n\n", 1)[1].splitlines()


def header_text(kind="SIC", **over):
    fields = {"format": "ce-lab-record", "version": "1", "kind": kind, "n": "1", "subset": "1"}
    if kind == "SIC":
        fields["M"] = "4"
    else:
        fields.update(ensemble="clifford", clifford_table=clifford_table_hash(), L="1", K="2")
    fields.update(seed="none", creator="lab")
    fields.update(over)
    return "\n".join(f"{k}: {v}" for k, v in fields.items() if v is not None) + "\n\n"


@st.composite
def lrm_records(draw):
    n = draw(st.integers(1, 4))
    labels = tuple(sorted(draw(st.sets(st.integers(1, n), min_size=1))))
    s, L, K = len(labels), draw(st.integers(1, 6)), draw(st.integers(2, 4))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    outcomes = rng.integers(0, 2**s, size=(L, K))
    if draw(st.booleans()):
        ens, settings = "clifford", rng.integers(0, 24, size=(L, s))
    else:
        from ce_lab.ensembles import sample_haar_u2
        ens, settings = "haar", sample_haar_u2(rng, L * s).reshape(L, s, 2, 2)
    seed = draw(st.one_of(st.none(), st.integers(0, 2**63 - 1)))
    return LRMRecord(n, labels, ens, settings, outcomes, seed=seed, creator=draw(st.sampled_from(["ce-lab", "lab-A"])))


@st.composite
def sic_records(draw):
    n = draw(st.integers(1, 5))
    labels = tuple(sorted(draw(st.sets(st.integers(1, n), min_size=1))))
    M = draw(st.integers(2, 30))
    out = np.random.default_rng(draw(st.integers(0, 2**32 - 1))).integers(0, 4 ** len(labels), size=M)
    return SICRecord(n, labels, out, seed=draw(st.one_of(st.none(), st.integers(0, 10**6))))


class TestFormat:
    def test_lrm_line(self):
        r = LRMRecord(2, (1, 2), "clifford", np.array([[5, 3]]), np.array([[1, 1]]))
        assert body(serialize_record(r)) == ["1 c:5,3 01 01"]

    def test_lrm_single_qubit_line(self):
        r = LRMRecord(2, (2,), "clifford", np.array([[5]]), np.array([[0, 1]]))
        assert body(serialize_record(r)) == ["1 c:5 0 1"]

    def test_sic_line(self):
        r = SICRecord(2, (1, 2), np.array([2 * 4 + 0, 0]))
        assert body(serialize_record(r)) == ["31", "11"]

    def test_header_fields(self):
        text = serialize_record(simulate_lrm(ghz_state(2), (1, 2), 3, 2, seed=4))
        head = dict(line.split(": ", 1) for line in text.split("\n\n")[0].splitlines())
        assert head["version"] == "1" and head["kind"] == "LRM" and head["K"] == "2"
        assert head["clifford_table"] == clifford_table_hash() and head["seed"] == "4"

    def test_large_roundtrip_bytes(self, tmp_path):
        r = simulate_lrm(ghz_state(3), (1, 2, 3), 10**4, 2, seed=1)
        p = tmp_path / "r.txt"
        write_record(r, p)
        first = p.read_bytes()
        back = read_record(p)
        assert back == r
        write_record(back, p)
        assert p.read_bytes() == first
        assert len(body(first.decode())) == 10**4

    @settings(max_examples=1000, suppress_health_check=[HealthCheck.too_slow])
    @given(st.one_of(lrm_records(), sic_records()))
    def test_parse_serialize_identity(self, r):
        text = serialize_record(r)
        back = parse_record(text)
        assert back == r
        assert serialize_record(back) == text

    def test_haar_inline(self):
        text = serialize_record(simulate_lrm(ghz_state(2), (1, 2), 2, 2, ensemble="haar", seed=3))
        line = body(text)[0].split()
        assert line[1].startswith("h:") and len(line[1][2:].split(",")) == 16
        r = parse_record(text)
        assert r.settings.shape == (2, 2, 2, 2)
        for u in r.unitaries().reshape(-1, 2, 2):
            np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-12)

    def test_simulated_reestimate_bit_identical(self, tmp_path):
        r = simulate_lrm(ghz_state(3), (1, 2, 3), 2400, 2, seed=17)
        write_record(r, tmp_path / "a")
        back = read_record(tmp_path / "a")
        for m in ("lrm-mean", "lrm-mom"):
            assert estimate_record(back, m, delta=0.05).estimate == estimate_record(r, m, delta=0.05).estimate
        s = simulate_sic(ghz_state(3), (1, 2, 3), 4800, seed=17)
        write_record(s, tmp_path / "b")
        assert (estimate_record(read_record(tmp_path / "b"), "sic-mom-k2", delta=0.05).estimate
                == estimate_record(s, "sic-mom-k2", delta=0.05).estimate)


class TestErrors:
    def test_version(self):
        with pytest.raises(RecordVersionError):
            parse_record(header_text(version="2") + "1\n2\n3\n4\n")

    def test_k1(self):
        with pytest.raises(RecordBudgetError, match="K must be >= 2"):
            parse_record(header_text("LRM", K="1") + "1 c:0 0\n")

    def test_symbol_5(self):
        with pytest.raises(RecordSymbolError) as exc:
            parse_record(header_text() + "1\n2\n5\n4\n")
        # 8 header lines, a blank line, then the body starts on line 10
        assert exc.value.line == 12 and "line 12" in str(exc.value)

    def test_malformed_line_number(self):
        with pytest.raises(RecordFormatError) as exc:
            parse_record(header_text("LRM", L="2") + "1 c:0 0 1\n2 c:0 0\n")
        assert exc.value.line == 14 and not isinstance(exc.value, (RecordSymbolError, RecordBudgetError))

    def test_clifford_index_range(self):
        with pytest.raises(RecordSymbolError):
            parse_record(header_text("LRM") + "1 c:24 0 1\n")

    def test_hash_mismatch(self):
        with pytest.raises(RecordFormatError, match="hash"):
            parse_record(header_text("LRM", clifford_table="0" * 64) + "1 c:0 0 1\n")

    def test_truncated(self):
        text = serialize_record(simulate_sic(ghz_state(2), (1, 2), 10, seed=1))
        with pytest.raises(RecordFormatError):
            parse_record(text[: len(text) // 2])

    def test_bad_bitstring(self):
        with pytest.raises(RecordSymbolError):
            parse_record(header_text("LRM") + "1 c:0 0 2\n")

    def test_missing_blank_line(self):
        with pytest.raises(RecordFormatError):
            parse_record("format: ce-lab-record\nversion: 1\n")

    def test_distinct_types(self):
        kinds = {RecordVersionError, RecordBudgetError, RecordSymbolError}
        assert len(kinds) == 3 and all(issubclass(k, RecordFormatError) for k in kinds)

    def test_minimal_external_sic(self):
        r = parse_record(header_text() + "1\n2\n3\n1\n")
        assert r.M == 4 and r.creator == "lab" and r.seed is None


class TestResults:
    def make(self, method=Method.LRM_MOM):
        return EstimateResult(method, 0.37, (1, 2, 3), 0.01, 64800, 32400,
                              batch_means=[0.3, 0.4, 0.38] if method is not Method.LRM_MEAN else None,
                              delta=0.05, epsilon=0.1, plan={"strategy": method.value, "N_B": 3})

    def test_json_roundtrip(self, tmp_path):
        r = self.make()
        write_result(r, tmp_path / "r.json")
        assert read_result(tmp_path / "r.json") == r

    def test_mean_omits_batch_means(self, tmp_path):
        write_result(self.make(Method.LRM_MEAN), tmp_path / "r.json")
        data = json.loads((tmp_path / "r.json").read_text())
        assert "batch_means" not in data and data["plan"]["N_B"] == 3

    def test_csv(self, tmp_path):
        write_result(self.make(), tmp_path / "r.csv", "csv")
        rows = list(csv.DictReader((tmp_path / "r.csv").open()))
        assert [float(r["batch_mean"]) for r in rows] == [0.3, 0.4, 0.38]

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            write_result(self.make(), tmp_path / "missing" / "r.json")
