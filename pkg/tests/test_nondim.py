import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from biochar.integrator import IntegratorConfig, LogSampling, integrate_adaptive
from biochar.kinetics import biochar_rhs, validate_params
from biochar.nondim import (
    SECONDS_PER,
    apply_settings,
    build_params,
    check_ordering,
    derive_constants,
    dimensional_rhs,
    dimensionless_rhs,
    format_config,
    parse_config,
    parse_override,
    time_scales,
    to_dimensional,
    to_dimensionless,
)
from biochar.scenarios import SET1, SET2, SET3

free_values = st.floats(0.1, 5.0)


@st.composite
def free_params(draw):
    return replace(
        SET1,
        a1=draw(free_values), a2=draw(free_values), a3=draw(free_values),
        b1=draw(free_values), b2=draw(free_values), b3=draw(free_values), b4=draw(free_values),
        K1=draw(st.floats(1e-3, 1.0)), K2=draw(st.floats(1e-4, 1.0)), K3=draw(st.floats(1e-3, 1.0)),
        U1=draw(st.floats(0.5, 3.0)), U2=draw(free_values), U3=draw(free_values), U4=draw(free_values),
        mu=draw(st.floats(0.2, 3.0)), delta=draw(st.floats(1.0, 6.0)), n=draw(free_values),
        tau=draw(st.floats(0.1, 10.0)),
    )


class TestDeriveConstants:
    def test_set1(self):
        d = derive_constants(SET1)
        assert (d.eta, d.source, d.K4, d.alpha) == (10.0, 0.02, 0.1, 2.0)

    def test_set2(self):
        d = derive_constants(SET2)
        assert d.eta == 2.0
        assert d.source == pytest.approx(1.8e-6, rel=1e-12)
        assert d.K4 == pytest.approx(9.72e-9, rel=1e-12)

    def test_set3(self):
        d = derive_constants(SET3)
        assert d.eta == 5.0
        assert d.source == pytest.approx(3.6e-7, rel=1e-12)
        # 3.6**5 * 5e-8 * 0.1
        assert d.K4 == pytest.approx(3.0233088e-6, rel=1e-12)
        assert d.K4 == pytest.approx(3.0e-6, rel=0.02)

    def test_requires_positive_a1_b1(self):
        with pytest.raises(ValueError):
            derive_constants(replace(SET1, a1=0.0))

    @given(free_params())
    def test_derived_set_is_valid_and_balanced(self, free):
        p = build_params(free)
        assert validate_params(p) == []
        assert p.delta == pytest.approx(p.eta * p.mu, rel=1e-14)
        assert derive_constants(free).alpha > 1


class TestTimeScales:
    def test_set1(self):
        ts = time_scales(build_params(SET1))
        assert ts.tau1 == pytest.approx(0.01)
        assert ts.tau5 == pytest.approx(1.0)
        assert ts.tau7 == pytest.approx(0.001)
        assert all(v > 0 for v in ts.as_tuple())

    def test_year_unit(self):
        ts = time_scales(build_params(SET2))
        assert ts.tau7 == pytest.approx(2e-8 * SECONDS_PER["year"])

    @given(free_params())
    def test_linear_in_tau(self, free):
        a = time_scales(build_params(free)).as_tuple()
        b = time_scales(build_params(replace(free, tau=2 * free.tau))).as_tuple()
        assert b == pytest.approx(tuple(2 * v for v in a), rel=1e-14)

    @given(free_params())
    def test_tau2_tau5_relation(self, free):
        p = build_params(free)
        ts = time_scales(p)
        U1, U2 = p.refs[:2]
        assert ts.tau2 == pytest.approx(p.delta * ts.tau5 * U2 / U1 / p.mu, rel=1e-12)

    def test_unknown_unit(self):
        with pytest.raises(ValueError):
            build_params(replace(SET1, tau_unit="fortnight"))


class TestOrdering:
    def test_set1_holds(self):
        ok, report = check_ordering(build_params(SET1))
        assert ok
        assert "0.005" in report

    def test_k2_equal_k1_fails(self):
        assert not check_ordering(build_params(replace(SET1, K2=0.01)))[0]

    def test_boundary_is_strict(self):
        # min(K3 U1^delta, K4) = K4 = 0.1 for set 1; K1 = 2*0.1 hits the bound exactly
        assert not check_ordering(build_params(replace(SET1, K1=0.2, K2=1e-4)))[0]


class TestScaling:
    @given(st.lists(st.floats(0, 1e3), min_size=4, max_size=4))
    def test_round_trip(self, y):
        p = build_params(SET2)
        back = to_dimensional(p, to_dimensionless(p, y))
        np.testing.assert_allclose(back, y, rtol=1e-15, atol=1e-300)

    def test_division(self):
        p = build_params(replace(SET1, U4=1000.0))
        assert to_dimensionless(p, [1, 1, 1, 500])[3] == 0.5

    @pytest.mark.parametrize("free", [SET1, SET2, SET3], ids=["set1", "set2", "set3"])
    def test_rhs_consistency(self, free, rng):
        p = build_params(free)
        f = dimensionless_rhs(p)
        refs = np.asarray(p.refs)
        for _ in range(50):
            y = rng.uniform(0, 2, size=4)
            expected = p.tau / refs * biochar_rhs(p, refs * y)
            np.testing.assert_allclose(f(0.0, y), expected, rtol=1e-11, atol=1e-12 * np.max(np.abs(expected)))

    @pytest.mark.parametrize("free", [SET1, SET2, SET3], ids=["set1", "set2", "set3"])
    def test_integration_commutes_with_scaling(self, free):
        p = build_params(free)
        refs = np.asarray(p.refs)
        t_end = 100.0
        tol = 1e-9
        sampling = LogSampling(per_decade=20, first_fraction=1e-4)
        scaled = integrate_adaptive(dimensionless_rhs(p), [1, 1, 1, 0],
                                    IntegratorConfig(t_end, rel_tol=tol, abs_tol=1e-12, sampling=sampling))
        dim_sampling = LogSampling(per_decade=20, first_fraction=1e-4)
        dimensional = integrate_adaptive(
            lambda t, y: biochar_rhs(p, y), refs * np.array([1, 1, 1, 0.0]),
            IntegratorConfig(t_end * p.tau, rel_tol=tol, abs_tol=1e-12 * refs, sampling=dim_sampling),
        )
        np.testing.assert_allclose(dimensional.times / p.tau, scaled.times, rtol=1e-12)
        rescaled = dimensional.states / refs
        scale = np.max(np.abs(scaled.states), axis=0)
        assert np.all(np.abs(rescaled - scaled.states) <= 10 * tol * np.maximum(scale, 1.0) * 100)

    def test_dimensional_rhs_wrapper(self):
        p = build_params(SET1)
        assert dimensional_rhs(p)(0.0, [1, 1, 1, 0]).tolist() == biochar_rhs(p, [1, 1, 1, 0]).tolist()


class TestConfig:
    def test_parse_and_apply(self):
        cfg = parse_config("# custom\nK2 = 1e-4\ntau_unit = year\noverride.s = 0.005  # pin\n")
        assert cfg == {"K2": 1e-4, "tau_unit": "year", "override.s": 0.005}
        free, pinned = apply_settings(SET1, cfg)
        assert free.K2 == 1e-4 and free.tau_unit == "year"
        assert pinned == {"s": 0.005}
        assert build_params(free, pinned).source == 0.005

    @pytest.mark.parametrize("text", ["K9 = 1", "K1 1", "K1 = abc", "override.delta = 2", "tau_unit = parsec", "K1 = inf"])
    def test_rejects(self, text):
        with pytest.raises(ValueError, match="line 1"):
            parse_config(text)

    def test_derived_constants_are_not_plain_keys(self):
        with pytest.raises(ValueError):
            parse_config("s = 0.1")

    def test_format_round_trip(self):
        text = format_config(SET2, {"K4": 1e-8})
        free, pinned = apply_settings(SET1, parse_config(text))
        assert free == SET2
        assert pinned == {"K4": 1e-8}

    def test_override_flag(self):
        assert parse_override("delta=3") == ("delta", 3.0)
        with pytest.raises(ValueError):
            parse_override("delta")

    def test_pins(self):
        p = build_params(SET1, {"eta": 5.0, "K4": 0.2, "alpha": 3.0})
        assert (p.eta, p.k4.scale, p.source) == (5.0, 0.2, pytest.approx(0.03))
        with pytest.raises(ValueError):
            build_params(SET1, {"delta": 1.0})
        assert math.isclose(build_params(SET1, {"alpha": 3.0, "s": 0.5}).source, 0.5)
