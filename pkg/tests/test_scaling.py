import numpy as np
import pytest

from orbent import (
    ParameterError,
    bernoulli_shift,
    circle_rotation,
    classify_growth,
    discreteness_verdict,
    identity_system,
    limit_metric_check,
    make_standard,
    sample_points,
    scaling_profile,
)
from orbent.scaling import (
    BOUNDED,
    LINEAR,
    UNDETERMINED,
    GrowthClass,
    ProfileRow,
    ScalingProfile,
    SpectralVerdict,
    growth_diagnostics,
)


def rows_from(pairs, seed=1):
    return [ProfileRow(n=n, value_bits=v, lower_bound_bits=0.0,
                       sample_size=128, seed=seed) for n, v in pairs]


SCHEDULE = [16, 32, 64, 128, 256, 512, 1024]


class TestClassifyGrowth:
    def test_constant_rows_bounded(self):
        cls = classify_growth(rows_from([(n, 3.0) for n in SCHEDULE]))
        assert cls == BOUNDED

    def test_exact_linear(self):
        cls = classify_growth(rows_from([(n, 0.5 * n) for n in SCHEDULE]))
        assert cls == LINEAR

    def test_exact_logarithmic(self):
        cls = classify_growth(rows_from([(n, 3.0 * np.log2(n)) for n in SCHEDULE]))
        assert cls.kind == "Logarithmic"

    def test_power_law_is_polynomial(self):
        # exponent low enough that the plain linear fit misses its gate
        cls = classify_growth(rows_from([(n, 2.0 * n ** 0.4) for n in SCHEDULE]))
        assert cls.kind == "Polynomial"
        assert cls.exponent == pytest.approx(0.4, abs=0.01)

    def test_settling_staircase_is_bounded(self):
        # quantized estimates settling one step up must not read as growth
        values = [2.32, 2.32, 2.58, 2.58, 2.58, 2.58, 2.58]
        cls = classify_growth(rows_from(list(zip(SCHEDULE, values))))
        assert cls == BOUNDED

    def test_needs_four_rows(self):
        with pytest.raises(ParameterError):
            classify_growth(rows_from([(16, 1.0), (32, 1.0), (64, 1.0)]))

    def test_order_independent(self):
        rows = rows_from([(n, 3.0 * np.log2(n)) for n in SCHEDULE])
        shuffled = [rows[i] for i in (3, 0, 6, 1, 5, 2, 4)]
        assert classify_growth(shuffled) == classify_growth(rows)

    def test_diagnostics_fields(self):
        diag = growth_diagnostics(rows_from([(n, 0.5 * n) for n in SCHEDULE]))
        assert diag["linear"]["r2"] == pytest.approx(1.0, abs=1e-12)
        assert diag["linear"]["slope"] == pytest.approx(0.5, abs=1e-12)
        assert "kendall_tau" in diag and "bounded_diff_bits" in diag


class TestScalingProfile:
    def test_identity_profile_bounded_and_flat(self, euclid, identity):
        profile = scaling_profile(
            identity, euclid, 0.25, [4, 8, 16, 32], 128, [1, 2, 3],
        )
        values = {r.value_bits for r in profile.rows}
        assert len(values) == 1
        assert profile.growth_class == BOUNDED

    def test_needs_three_seeds(self, euclid, identity):
        with pytest.raises(ParameterError):
            scaling_profile(identity, euclid, 0.25, [4, 8, 16, 32], 64, [1, 2])

    def test_rows_are_per_seed_medians(self, euclid, rotation):
        from orbent import entropy_estimate

        schedule = [4, 8, 16, 32]
        seeds = [1, 2, 3]
        profile = scaling_profile(rotation, euclid, 0.25, schedule, 64, seeds)
        for row in profile.rows:
            per_seed = [
                entropy_estimate(rotation, euclid, row.n, 0.25, 64, s).value_bits
                for s in seeds
            ]
            assert row.value_bits == sorted(per_seed)[1]

    def test_bernoulli_growth_visible_before_saturation(self, cut):
        # with m=512 points the covering estimate resolves growth only while
        # the true entropy stays below log2(384) bits, i.e. n <= ~16
        system = bernoulli_shift([0.5, 0.5], horizon=32)
        profile = scaling_profile(
            system, cut, 0.25, [2, 4, 8, 16], 512, [101, 202, 303],
        )
        assert profile.growth_class.kind == "Linear"
        assert profile.fit_diagnostics["linear"]["slope"] > 0

    def test_profile_json_roundtrip(self, euclid, identity):
        profile = scaling_profile(identity, euclid, 0.5, [4, 8, 16, 32], 64, [1, 2, 3])
        again = ScalingProfile.from_json(profile.to_json())
        assert again.eps == profile.eps
        assert again.growth_class == profile.growth_class
        assert [r.n for r in again.rows] == [r.n for r in profile.rows]


class TestVerdict:
    def _profile(self, eps, cls):
        rows = rows_from([(n, 1.0) for n in SCHEDULE])
        return ScalingProfile(
            system=identity_system(), metric=make_standard("euclidean_1d"),
            method="Covering", eps=eps, rows=rows, growth_class=cls,
            fit_diagnostics={},
        )

    def test_all_bounded_is_discrete_evidence(self):
        verdict = discreteness_verdict(
            [self._profile(0.25, BOUNDED), self._profile(0.1, BOUNDED)]
        )
        assert verdict.verdict == "DiscreteSpectrumEvidence"

    def test_any_growth_blocks_discreteness(self):
        verdict = discreteness_verdict(
            [self._profile(0.25, BOUNDED), self._profile(0.1, LINEAR)]
        )
        assert verdict.verdict == "NotDiscreteEvidence"

    def test_undetermined_is_conservative(self):
        verdict = discreteness_verdict(
            [self._profile(0.25, UNDETERMINED), self._profile(0.1, BOUNDED)]
        )
        assert verdict.verdict == "Undetermined"

    def test_needs_two_eps(self):
        with pytest.raises(ParameterError):
            discreteness_verdict([self._profile(0.25, BOUNDED)])

    def test_json_roundtrip(self):
        verdict = discreteness_verdict(
            [self._profile(0.25, BOUNDED), self._profile(0.1, GrowthClass("Polynomial", 0.5))]
        )
        again = SpectralVerdict.from_json(verdict.to_json())
        assert again.verdict == verdict.verdict
        assert again.per_eps[0.1].exponent == 0.5


class TestLimitMetricCheck:
    def test_rotation_average_is_admissible(self, euclid, rotation):
        report = limit_metric_check(
            rotation, euclid, 1024, 128, [1, 2, 3], profile_class=BOUNDED,
        )
        assert report.verdict == "AdmissibleEvidence"
        assert report.consistent is True

    def test_bernoulli_average_concentrates(self, cut):
        # averaged cut distances pile up near 1/2: empty balls at eps=0.1
        system = bernoulli_shift([0.5, 0.5], horizon=300)
        report = limit_metric_check(
            system, cut, 256, 64, [1, 2, 3], profile_class=LINEAR,
        )
        assert report.verdict == "NotAdmissibleEvidence"
        assert report.ball_mass_fraction <= 0.05
        assert report.consistent is True

    def test_identity_matches_base_diagnostics(self, euclid, identity):
        from orbent import admissibility_report

        report = limit_metric_check(identity, euclid, 64, 128, [5])
        base = admissibility_report(
            identity, euclid, m=128, seed=5, eps=0.1, c=0.4, pc_n=32, pc_trials=20,
            trace_schedule=(2, 4, 8, 16, 32),
        )
        assert report.verdict == base.verdict
        assert report.ball_mass_fraction == base.ball_mass_fraction
