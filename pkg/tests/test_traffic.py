import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsforensics.traffic import (
    REQUIRED_COLUMNS,
    TrafficProfile,
    cohort_report,
    describe,
    ecdf,
    edu_gov_ratios,
    load_profiles,
    parse_quantity,
)


def profile_row(**overrides):
    row = {
        "domain": "example.com",
        "label": "fake",
        "global_rank": "197000",
        "country_rank": "5000",
        "category_rank": "120",
        "country": "US",
        "category": "News",
        "total_visits": "3.3M",
        "pages_per_visit": "2.33",
        "visit_duration_s": "163.4",
        "bounce_rate": "69.42",
        "src_direct": "40",
        "src_referrals": "10",
        "src_search": "25",
        "src_social": "20",
        "src_mail": "3",
        "src_display": "2",
        "backlinks": "4.7K",
        "referring_domains": "307",
        "edu_backlinks": "5",
        "gov_backlinks": "0",
        "edu_ref_domains": "2",
        "gov_ref_domains": "0",
    }
    row.update(overrides)
    return row


def write_csv(path, rows):
    lines = [",".join(REQUIRED_COLUMNS)]
    for row in rows:
        lines.append(",".join(str(row[c]) for c in REQUIRED_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


class TestParseQuantity:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("4.7K", 4700),
            ("23.2M", 23200000),
            ("1.12M", 1120000),
            ("2B", 2000000000),
            ("307", 307),
            ("1,234", 1234),
            ("0", 0),
        ],
    )
    def test_values(self, raw, expected):
        assert parse_quantity(raw) == expected

    def test_fractional_unit_rejected(self):
        with pytest.raises(ValueError, match="whole"):
            parse_quantity("4.77")

    def test_garbage_rejected(self):
        with pytest.raises(ValueError, match="quantity"):
            parse_quantity("lots")


class TestLoadProfiles:
    def test_well_formed_csv(self, tmp_path):
        path = tmp_path / "traffic.csv"
        write_csv(
            path,
            [
                profile_row(),
                profile_row(domain="b.com", label="real"),
                profile_row(domain="c.com"),
            ],
        )
        profiles, errors = load_profiles(path)
        assert len(profiles) == 3 and errors == []
        assert profiles[0].total_visits == 3300000
        assert profiles[0].backlinks == 4700

    def test_bounce_rate_out_of_range_rejected(self, tmp_path):
        path = tmp_path / "traffic.csv"
        write_csv(path, [profile_row(bounce_rate="120")])
        profiles, errors = load_profiles(path)
        assert profiles == []
        assert len(errors) == 1 and "bounce_rate" in errors[0].reason

    def test_share_sum_tolerance(self, tmp_path):
        path = tmp_path / "traffic.csv"
        write_csv(path, [profile_row(src_direct="40.4")])  # sums to 100.4
        profiles, errors = load_profiles(path)
        assert len(profiles) == 1 and errors == []

    def test_share_sum_violation_rejected(self, tmp_path):
        path = tmp_path / "traffic.csv"
        write_csv(path, [profile_row(src_direct="80")])  # sums to 140
        profiles, errors = load_profiles(path)
        assert profiles == [] and "shares sum" in errors[0].reason

    def test_missing_column_is_hard_error(self, tmp_path):
        path = tmp_path / "traffic.csv"
        cols = [c for c in REQUIRED_COLUMNS if c != "bounce_rate"]
        row = profile_row()
        path.write_text(
            ",".join(cols) + "\n" + ",".join(str(row[c]) for c in cols) + "\n"
        )
        with pytest.raises(ValueError, match="bounce_rate"):
            load_profiles(path)

    def test_absent_optional_fields_allowed(self, tmp_path):
        path = tmp_path / "traffic.csv"
        write_csv(path, [profile_row(global_rank="", total_visits="")])
        profiles, errors = load_profiles(path)
        assert errors == []
        assert profiles[0].global_rank is None
        assert profiles[0].total_visits is None

    def test_edu_exceeding_total_rejected(self, tmp_path):
        path = tmp_path / "traffic.csv"
        write_csv(path, [profile_row(edu_backlinks="99999")])
        profiles, errors = load_profiles(path)
        assert profiles == [] and "exceeds" in errors[0].reason

    def test_bad_label_rejected(self, tmp_path):
        path = tmp_path / "traffic.csv"
        write_csv(path, [profile_row(label="dubious")])
        profiles, errors = load_profiles(path)
        assert profiles == [] and "label" in errors[0].reason

    def test_json_lines(self, tmp_path):
        path = tmp_path / "traffic.jsonl"
        rec = {c: profile_row()[c] for c in REQUIRED_COLUMNS}
        rec["global_rank"] = 197000  # native ints allowed
        path.write_text(json.dumps(rec) + "\n")
        profiles, errors = load_profiles(path)
        assert len(profiles) == 1 and errors == []

    def test_json_lines_missing_key(self, tmp_path):
        path = tmp_path / "traffic.jsonl"
        rec = {c: profile_row()[c] for c in REQUIRED_COLUMNS}
        del rec["label"]
        path.write_text(json.dumps(rec) + "\n")
        with pytest.raises(ValueError, match="label"):
            load_profiles(path)


class TestDescribe:
    def test_one_to_ten(self):
        stats = describe(range(1, 11))
        assert stats.median == 5.5
        assert stats.p90 == pytest.approx(9.1)
        assert stats.mean == 5.5

    def test_constant_sequence(self):
        stats = describe([7, 7, 7])
        assert stats.mean == 7 and stats.std == 0

    def test_population_std(self):
        assert describe([1, 3]).std == pytest.approx(1.0)

    def test_sample_std_flag(self):
        assert describe([1, 3], sample_std=True).std == pytest.approx(math.sqrt(2))
        assert describe([7], sample_std=True).std == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            describe([])

    @given(
        st.lists(st.floats(min_value=-1e6, max_value=1e6), min_size=1, max_size=40),
        st.floats(min_value=0.1, max_value=100),
    )
    @settings(max_examples=150, deadline=None)
    def test_permutation_invariant_and_scale_equivariant(self, values, scale):
        base = describe(values)
        permuted = describe(list(reversed(values)))
        for field in ("mean", "std", "median", "p90"):
            assert getattr(permuted, field) == pytest.approx(
                getattr(base, field), rel=1e-12, abs=1e-9
            )
        scaled = describe([v * scale for v in values])
        assert scaled.mean == pytest.approx(base.mean * scale, rel=1e-9, abs=1e-6)
        assert scaled.std == pytest.approx(base.std * scale, rel=1e-9, abs=1e-6)
        assert scaled.median == pytest.approx(base.median * scale, rel=1e-9, abs=1e-6)
        assert scaled.p90 == pytest.approx(base.p90 * scale, rel=1e-9, abs=1e-6)

    def test_median_p90_within_range(self):
        stats = describe([3, 9, 1, 4])
        assert 1 <= stats.median <= 9
        assert 1 <= stats.p90 <= 9


class TestEcdf:
    def test_single_value(self):
        assert ecdf([2]) == [(2.0, 1.0)]

    def test_duplicates_collapse(self):
        assert ecdf([1, 2, 2]) == [(1.0, pytest.approx(1 / 3)), (2.0, 1.0)]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ecdf([])

    @given(st.lists(st.floats(min_value=-1e9, max_value=1e9), min_size=1, max_size=50))
    @settings(max_examples=150, deadline=None)
    def test_nondecreasing_and_ends_at_one(self, values):
        points = ecdf(values)
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        assert xs == sorted(xs)
        assert ys == sorted(ys)
        assert ys[-1] == 1.0


class TestEduGovRatios:
    def test_basic_ratio(self):
        p = TrafficProfile("a.com", "fake", backlinks=50, edu_backlinks=5)
        assert edu_gov_ratios(p).edu_backlink_ratio == pytest.approx(0.10)

    def test_zero_denominator(self):
        p = TrafficProfile("a.com", "fake", backlinks=0, edu_backlinks=0)
        assert edu_gov_ratios(p).edu_backlink_ratio == 0.0

    def test_zero_numerator(self):
        p = TrafficProfile("a.com", "fake", referring_domains=300, gov_ref_domains=0)
        assert edu_gov_ratios(p).gov_ref_domain_ratio == 0.0


def make_profile(site, label, bounce, visits):
    return TrafficProfile(
        site,
        label,
        bounce_rate=bounce,
        total_visits=visits,
        backlinks=100,
        edu_backlinks=10,
        gov_backlinks=0,
        referring_domains=10,
        edu_ref_domains=1,
        gov_ref_domains=0,
    )


class TestCohortReport:
    def test_known_moments(self):
        profiles = [
            make_profile("a.com", "fake", 60.0, 100),
            make_profile("b.com", "fake", 80.0, 300),
            make_profile("c.com", "real", 50.0, 1000),
            make_profile("d.com", "real", 50.0, 3000),
        ]
        report = cohort_report(profiles)
        fake_bounce = report.stats["bounce_rate"]["fake"]
        assert fake_bounce.mean == 70.0
        assert fake_bounce.std == pytest.approx(10.0)
        assert report.stats["total_visits"]["real"].median == 2000
        assert report.warnings == []

    def test_identical_cohorts_identical_rows(self):
        fake = [make_profile(f"f{i}.com", "fake", 50 + i, 100 * (i + 1)) for i in range(4)]
        real = [make_profile(f"r{i}.com", "real", 50 + i, 100 * (i + 1)) for i in range(4)]
        report = cohort_report(fake + real)
        for metric, per_label in report.stats.items():
            assert per_label["fake"] == per_label["real"], metric

    def test_single_label_warns(self):
        report = cohort_report([make_profile("a.com", "real", 10, 5)])
        assert report.warnings
        assert "bounce_rate" in report.stats
        assert list(report.stats["bounce_rate"]) == ["real"]

    def test_matches_describe_per_group(self):
        profiles = [
            make_profile("a.com", "fake", 61.5, 10),
            make_profile("b.com", "fake", 72.5, 20),
            make_profile("c.com", "real", 55.0, 30),
        ]
        report = cohort_report(profiles)
        assert report.stats["bounce_rate"]["fake"] == describe([61.5, 72.5])
        assert report.stats["bounce_rate"]["real"] == describe([55.0])

    def test_ratio_ecdfs_present(self):
        report = cohort_report([make_profile("a.com", "fake", 50, 10)])
        assert report.ratio_ecdfs["edu_backlink_ratio"]["fake"] == [(0.1, 1.0)]

    def test_to_dict_serializable(self):
        report = cohort_report([make_profile("a.com", "fake", 50, 10)])
        json.dumps(report.to_dict())
