import numpy as np
import pytest

from orbent import (
    HorizonError,
    ParameterError,
    Point,
    SystemSpec,
    anzai_skew,
    apply,
    bernoulli_shift,
    circle_rotation,
    identity_system,
    sample_points,
    torus_translation,
)
from orbent.dynsys import advance_sample


class TestSampling:
    def test_identity_sample_shape(self, identity):
        sample = sample_points(identity, 3, 7)
        assert sample.coords.shape == (3, 1)
        assert np.all((sample.coords >= 0.0) & (sample.coords < 1.0))

    def test_seed_determinism(self, identity):
        a = sample_points(identity, 100, 7)
        b = sample_points(identity, 100, 7)
        assert np.array_equal(a.coords, b.coords)
        c = sample_points(identity, 100, 8)
        assert not np.array_equal(a.coords, c.coords)

    def test_bernoulli_sample_shape(self):
        system = bernoulli_shift([0.5, 0.5], horizon=50)
        sample = sample_points(system, 1, 1)
        assert sample.symbols.shape == (1, 50)
        assert set(np.unique(sample.symbols)) <= {0, 1}

    def test_bernoulli_determinism(self, fair_shift):
        a = sample_points(fair_shift, 64, 3)
        b = sample_points(fair_shift, 64, 3)
        assert np.array_equal(a.symbols, b.symbols)

    def test_uniform_mean(self, identity):
        # law of large numbers on the first coordinate
        sample = sample_points(identity, 100_000, 11)
        assert abs(sample.coords[:, 0].mean() - 0.5) <= 0.01

    def test_bad_sample_size(self, identity):
        with pytest.raises(ParameterError):
            sample_points(identity, 0, 1)

    def test_bad_weights(self):
        with pytest.raises(ParameterError):
            bernoulli_shift([0.5, 0.6])
        with pytest.raises(ParameterError):
            bernoulli_shift([1.0, 0.0])

    def test_integer_angle_rejected(self):
        with pytest.raises(ParameterError):
            circle_rotation(0.0)
        with pytest.raises(ParameterError):
            circle_rotation(2.0)


class TestApply:
    def test_rotation_two_steps(self):
        system = circle_rotation(0.2)
        p = Point(coords=np.array([0.25]))
        q = apply(system, p, 2)
        expected = ((0.25 + 0.2) % 1.0 + 0.2) % 1.0
        assert q.coords[0] == expected

    def test_anzai_one_step(self):
        system = anzai_skew(0.3)
        p = Point(coords=np.array([0.7, 0.9]))
        q = apply(system, p, 1)
        assert q.coords[0] == pytest.approx((0.7 + 0.3) % 1.0, abs=1e-15)
        assert q.coords[1] == pytest.approx((0.9 + 0.7) % 1.0, abs=1e-15)

    def test_shift_drops_symbols(self, fair_shift):
        p = sample_points(fair_shift, 1, 5).point(0)
        q = apply(fair_shift, p, 1)
        assert np.array_equal(q.symbols, p.symbols[1:])

    def test_identity_fixed(self, identity):
        p = Point(coords=np.array([0.42]))
        assert apply(identity, p, 9).coords[0] == 0.42

    def test_apply_zero_is_noop(self, rotation):
        p = Point(coords=np.array([0.3]))
        assert apply(rotation, p, 0) is p

    @pytest.mark.parametrize("system", [
        circle_rotation(), torus_translation(), anzai_skew(), identity_system(),
    ])
    def test_semigroup_law_exact(self, system):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = Point(coords=rng.random(system.dim))
            j, k = rng.integers(0, 40, size=2)
            via_composition = apply(system, apply(system, p, int(j)), int(k))
            direct = apply(system, p, int(j + k))
            assert np.array_equal(via_composition.coords, direct.coords)

    def test_shift_horizon_error(self):
        system = bernoulli_shift([0.5, 0.5], horizon=10)
        p = sample_points(system, 1, 2).point(0)
        with pytest.raises(HorizonError):
            apply(system, p, 10)
        sample = sample_points(system, 4, 2)
        with pytest.raises(HorizonError):
            advance_sample(sample, 10)


class TestMeasurePreservation:
    @pytest.mark.parametrize("system", [
        circle_rotation(), torus_translation(), anzai_skew(), identity_system(),
    ])
    def test_box_frequencies(self, system):
        m = 10_000
        sample = sample_points(system, m, 13)
        pushed = advance_sample(sample, 1)
        if system.dim == 1:
            boxes = [(0.0, 0.5), (0.25, 0.75), (0.1, 0.2), (0.5, 1.0), (0.0, 0.125)]

            def freq(coords, box):
                lo, hi = box
                return np.mean((coords[:, 0] >= lo) & (coords[:, 0] < hi))
        else:
            boxes = [
                ((0.0, 0.5), (0.0, 0.5)), ((0.25, 0.75), (0.0, 1.0)),
                ((0.0, 0.25), (0.5, 1.0)), ((0.5, 1.0), (0.5, 1.0)),
                ((0.125, 0.875), (0.25, 0.5)),
            ]

            def freq(coords, box):
                (x0, x1), (y0, y1) = box
                inside = (
                    (coords[:, 0] >= x0) & (coords[:, 0] < x1)
                    & (coords[:, 1] >= y0) & (coords[:, 1] < y1)
                )
                return np.mean(inside)

        bound = 3.0 * (1.0 / m) ** 0.5
        for box in boxes:
            assert abs(freq(sample.coords, box) - freq(pushed.coords, box)) <= bound


class TestSerialization:
    @pytest.mark.parametrize("system", [
        circle_rotation(), torus_translation(0.3, 0.7), anzai_skew(0.21),
        bernoulli_shift([0.9, 0.1], horizon=64), identity_system(),
    ])
    def test_json_roundtrip(self, system):
        again = SystemSpec.from_json(system.to_json())
        assert again == system

    def test_json_field_names(self):
        obj = circle_rotation(0.25).to_json()
        assert obj == {"kind": "CircleRotation", "alpha": 0.25}
        obj = bernoulli_shift([0.5, 0.5], horizon=16).to_json()
        assert obj["kind"] == "BernoulliShift"
        assert obj["weights"] == [0.5, 0.5]
