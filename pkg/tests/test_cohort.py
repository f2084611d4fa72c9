import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from severity_ridge import (
    TABLES,
    Cohort,
    GenerationConfig,
    PatientRecord,
    Sex,
    SplitMix64,
    ValidationError,
    WeightTables,
    acceptable_weight,
    apply_variance,
    generate,
    read_dataset,
    sample_record,
    severity,
    severity_index,
    write_dataset,
)
from severity_ridge.cohort import X_HEADER, read_features, read_targets
from severity_ridge.errors import ParseError
from severity_ridge.rng import stream_seed


class TestWeightTables:
    def test_embedded_tables_valid(self):
        for seq in (TABLES.male_high, TABLES.male_low, TABLES.female_high, TABLES.female_low):
            assert len(seq) == 25
            assert all(w > 0 for w in seq)
            assert all(b > a for a, b in zip(seq, seq[1:]))
        assert all(h > l for h, l in zip(TABLES.male_high, TABLES.male_low))
        assert all(h > l for h, l in zip(TABLES.female_high, TABLES.female_low))

    def test_table_endpoints(self):
        assert TABLES.male_high[0] == 3.9 and TABLES.male_high[24] == 13.7
        assert TABLES.male_low[24] == 10.8
        assert TABLES.female_high[24] == 13.1 and TABLES.female_low[0] == 2.9

    def test_rejects_wrong_length(self):
        with pytest.raises(ValidationError):
            WeightTables(TABLES.male_high[:-1], TABLES.male_low, TABLES.female_high, TABLES.female_low)

    def test_rejects_crossed_bounds(self):
        with pytest.raises(ValidationError):
            WeightTables(TABLES.male_low, TABLES.male_high, TABLES.female_high, TABLES.female_low)

    def test_rejects_non_increasing(self):
        bad = list(TABLES.male_high)
        bad[5] = bad[4]
        with pytest.raises(ValidationError):
            WeightTables(bad, TABLES.male_low, TABLES.female_high, TABLES.female_low)


class TestAcceptableWeight:
    @pytest.mark.parametrize("sex, age, expected", [
        (Sex.MALE, 0, 3.4),
        (Sex.MALE, 12, 9.7),
        (Sex.FEMALE, 24, 11.6),
    ])
    def test_table_midpoints(self, sex, age, expected):
        assert acceptable_weight(sex, age) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("age", [-1, 25])
    def test_out_of_range(self, age):
        with pytest.raises(ValidationError):
            acceptable_weight(Sex.MALE, age)

    def test_vectorized(self):
        out = acceptable_weight(np.array([0, 1]), np.array([0, 24]))
        np.testing.assert_allclose(out, [3.4, 11.6])


class TestSeverity:
    def test_zero_at_age_24_and_acceptable_weight(self):
        r = PatientRecord(24, Sex.MALE, 12.25, 5 * 10 ** 9)
        assert severity(r) == 0.0

    def test_newborn_at_acceptable_weight(self):
        assert severity(PatientRecord(0, Sex.MALE, 3.4, 12345)) == pytest.approx(12345, rel=1e-12)

    def test_hand_case(self):
        # w* = 9.7: 0.5 * 1000 + (4.7 / 9.7) * 1e6
        r = PatientRecord(12, Sex.MALE, 5.0, 1000)
        assert severity(r) == pytest.approx(485036.0825, rel=1e-4)
        assert severity(r) == pytest.approx(500 + 4.7 / 9.7 * 1e6, rel=1e-12)

    def test_age_ratio_is_real(self):
        r = PatientRecord(6, Sex.FEMALE, acceptable_weight(Sex.FEMALE, 6), 100)
        assert severity(r) == pytest.approx(75.0)

    @given(st.integers(0, 24), st.sampled_from([0, 1]), st.floats(0, 30), st.integers(1, 10 ** 10 - 1))
    def test_nonnegative_and_monotone_in_virions(self, age, sex, w, v):
        s0 = severity_index(age, sex, w, v)
        assert s0 >= 0
        assert severity_index(age, sex, w, v + 1) >= s0

    @given(st.integers(0, 24), st.sampled_from([0, 1]), st.floats(0, 30), st.integers(1, 10 ** 10))
    def test_zero_iff_age_24_and_target_weight(self, age, sex, w, v):
        s = severity_index(age, sex, w, v)
        at_target = age == 24 and w == acceptable_weight(sex, age)
        assert (s == 0) == at_target

    def test_record_validation(self):
        with pytest.raises(ValidationError):
            PatientRecord(25, Sex.MALE, 3.0, 10)
        with pytest.raises(ValidationError):
            PatientRecord(3, Sex.MALE, -1.0, 10)
        with pytest.raises(ValidationError):
            PatientRecord(3, Sex.MALE, 3.0, 0)
        with pytest.raises(ValueError):
            PatientRecord(3, 2, 3.0, 10)


class TestApplyVariance:
    def test_examples(self):
        assert apply_variance(1e6, 0.0) == 1e6
        assert apply_variance(1e6, 5e-5) == pytest.approx(1000050, rel=1e-15)
        assert apply_variance(0.0, -1e-4) == 0.0

    @pytest.mark.parametrize("u", [1.0001e-4, -2e-4, math.nan])
    def test_out_of_range(self, u):
        with pytest.raises(ValidationError):
            apply_variance(1.0, u)


class TestSampleRecord:
    def test_golden_seed_42_item_0(self):
        rec, u = sample_record(SplitMix64(stream_seed(42, 0)))
        assert rec == PatientRecord(18, Sex.MALE, 7.572195763520026, 1599103929)
        assert u == -9.239396629195076e-05

    def test_deterministic(self):
        a = sample_record(SplitMix64(123))
        b = sample_record(SplitMix64(123))
        assert a == b

    @given(st.integers(0, 2 ** 64 - 1))
    def test_ranges(self, seed):
        rec, u = sample_record(SplitMix64(seed))
        assert 0 <= rec.age_months <= 24
        assert 1 <= rec.virion_count <= 10 ** 10
        hi, lo = (np.array(t)[rec.age_months] for t in TABLES.bounds(rec.sex))
        assert 0 <= rec.weight_kg <= hi + lo
        assert abs(u) <= 1e-4


class TestGenerate:
    def test_config_rejects_zero(self):
        with pytest.raises(ValidationError):
            GenerationConfig(0, 42)

    def test_length_and_sequence_protocol(self):
        c = generate(GenerationConfig(50, 42))
        assert len(c) == 50
        assert len(list(c)) == 50
        assert c[3] == c[slice(3, 4)][0]

    def test_matches_scalar_sampler(self):
        c = generate(GenerationConfig(200, 42))
        for i in (0, 1, 57, 199):
            rec, u = sample_record(SplitMix64(stream_seed(42, i)))
            s = severity(rec)
            assert c[i].record == rec
            assert c[i].severity_precise == s
            assert c[i].severity_noisy == apply_variance(s, u)

    def test_independent_of_blocking_and_workers(self):
        cfg = GenerationConfig(5000, 7)
        base = generate(cfg)
        assert generate(cfg, workers=4, block_size=333) == base
        assert generate(cfg, block_size=1) == generate(GenerationConfig(5000, 7), block_size=4999)

    def test_prefix_stable(self):
        small = generate(GenerationConfig(100, 9))
        big = generate(GenerationConfig(1000, 9))
        assert big.take(np.arange(100)) == small

    def test_age_mean(self, cohort_42):
        assert 11.5 <= cohort_42.age.mean() <= 12.5

    def test_generated_invariants(self, cohort_42):
        c = cohort_42
        w_star = acceptable_weight(c.sex, c.age)
        coeff = np.abs((w_star - c.weight) / w_star)
        assert np.all((coeff >= 0) & (coeff <= 1))
        assert np.all(c.weight <= 2 * w_star)
        pos = c.severity_precise > 0
        ratio = c.severity_noisy[pos] / c.severity_precise[pos]
        assert np.all(np.abs(ratio - 1) <= 1e-4 * (1 + 1e-12))
        assert np.array_equal(c.severity_noisy == 0, c.severity_precise == 0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        c = generate(GenerationConfig(100, 42))
        paths = [tmp_path / n for n in ("x.csv", "yp.csv", "yn.csv")]
        write_dataset(c, *paths)
        assert read_dataset(*paths) == c

    def test_round_trip_from_samples(self, tmp_path):
        samples = list(generate(GenerationConfig(10, 1)))
        paths = [tmp_path / n for n in ("x.csv", "yp.csv", "yn.csv")]
        write_dataset(samples, *paths)
        assert list(read_dataset(*paths)) == samples

    def test_headers_and_format(self, tmp_path):
        c = generate(GenerationConfig(3, 42))
        paths = [tmp_path / n for n in ("x.csv", "yp.csv", "yn.csv")]
        write_dataset(c, *paths)
        x_lines = paths[0].read_bytes().split(b"\n")
        assert x_lines[0].decode() == "Weight,Age,Virion Count,Gender"
        assert x_lines[1] == b"7.572195763520026,18,1599103929,0"
        assert x_lines[-1] == b"" and b"\r" not in paths[0].read_bytes()
        assert paths[1].read_text().split("\n")[0] == "Severity"
        assert len(paths[2].read_text().strip().split("\n")) == 4

    def test_bad_header(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("weight,age\n1,2\n")
        with pytest.raises(ParseError) as exc:
            read_features(p)
        assert exc.value.line == 1 and "x.csv" in str(exc.value)

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text(f"{X_HEADER}\n1.0,2,3,0\n1.0,abc,3,0\n")
        with pytest.raises(ParseError) as exc:
            read_features(p)
        assert (exc.value.line, exc.value.column) == (3, "Age")

    def test_non_numeric_target(self, tmp_path):
        p = tmp_path / "y.csv"
        p.write_text("Severity\n1.5\nfoo\n")
        with pytest.raises(ParseError) as exc:
            read_targets(p)
        assert exc.value.line == 3

    def test_row_count_mismatch(self, tmp_path):
        c = generate(GenerationConfig(5, 42))
        paths = [tmp_path / n for n in ("x.csv", "yp.csv", "yn.csv")]
        write_dataset(c, *paths)
        paths[2].write_text("Severity\n1.0\n")
        with pytest.raises(ParseError, match="row count"):
            read_dataset(*paths)


def test_cohort_features_column_order():
    c = Cohort([3], [1], [4.5], [77], [1.0], [1.0])
    np.testing.assert_array_equal(c.features(), [[4.5, 3, 77, 1]])
