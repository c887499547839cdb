import math

import numpy as np
import pytest

from biochar.integrator import (
    FixedGrid,
    IntegrationError,
    IntegratorConfig,
    LogSampling,
    PositivityError,
    integrate_adaptive,
    integrate_fixed_rk4,
)
from biochar.kinetics import biochar_rhs
from biochar.nondim import dimensionless_rhs


def decay(t, y):
    return -y


class TestRk4:
    def test_exponential_decay(self):
        traj = integrate_fixed_rk4(decay, [1.0], 1e-3, 1.0)
        assert traj.times[-1] == 1.0
        assert traj.states[-1, 0] == pytest.approx(math.exp(-1), rel=1e-12)

    def test_fourth_order(self):
        errors = [abs(integrate_fixed_rk4(decay, [1.0], dt, 1.0).states[-1, 0] - math.exp(-1))
                  for dt in (0.1, 0.05, 0.025)]
        for coarse, fine in zip(errors, errors[1:]):
            assert coarse / fine == pytest.approx(16, rel=0.1)

    def test_short_last_step(self):
        traj = integrate_fixed_rk4(decay, [1.0], 0.3, 1.0)
        assert traj.times.tolist() == pytest.approx([0, 0.3, 0.6, 0.9, 1.0])

    def test_record_every(self):
        traj = integrate_fixed_rk4(decay, [1.0], 0.1, 1.0, record_every=4)
        assert traj.times.tolist() == pytest.approx([0, 0.4, 0.8, 1.0])

    def test_blow_up(self):
        with pytest.raises(IntegrationError):
            integrate_fixed_rk4(lambda t, y: y * y, [1.0], 0.5, 100.0)


class TestAdaptive:
    def test_exponential_decay(self):
        tol = 1e-8
        traj = integrate_adaptive(decay, [1.0], IntegratorConfig(1.0, rel_tol=tol, abs_tol=1e-14))
        assert traj.times[-1] == 1.0
        assert abs(traj.states[-1, 0] - math.exp(-1)) <= 10 * tol * math.exp(-1)
        assert traj.complete and traj.error is None

    def test_zero_rhs(self):
        traj = integrate_adaptive(lambda t, y: np.zeros_like(y), [1.0, 2.0], IntegratorConfig(5.0))
        assert np.all(traj.states == [1.0, 2.0])

    def test_default_sampling(self):
        times = LogSampling().times(2000.0)
        assert times[0] == 0 and times[1] == pytest.approx(2e-4) and times[-1] == 2000.0
        assert len(times) == 1 + 7 * 200 + 1
        assert np.all(np.diff(times) > 0)

    def test_fixed_grid_is_hit_exactly(self):
        grid = FixedGrid((0.5, 1.0, 1.5))
        traj = integrate_adaptive(decay, [1.0], IntegratorConfig(2.0, sampling=grid))
        assert traj.times.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]

    def test_outputs_are_read_only(self):
        traj = integrate_adaptive(decay, [1.0], IntegratorConfig(1.0))
        with pytest.raises(ValueError):
            traj.states[0, 0] = 2.0

    def test_max_steps_keeps_partial(self):
        with pytest.raises(IntegrationError) as info:
            integrate_adaptive(decay, [1.0], IntegratorConfig(100.0, rel_tol=1e-12, max_steps=20))
        partial = info.value.partial
        assert partial is not None and not partial.complete
        assert partial.monitors.steps == 20
        assert 0 < partial.times[-1] < 100.0

    def test_positivity_breach(self):
        with pytest.raises(PositivityError) as info:
            integrate_adaptive(lambda t, y: -np.ones_like(y), [1.0], IntegratorConfig(5.0))
        assert info.value.component == 0
        assert info.value.time == pytest.approx(1.0, abs=1e-6)

    def test_finite_time_blow_up(self):
        with pytest.raises(IntegrationError):
            integrate_adaptive(lambda t, y: y * y, [1.0], IntegratorConfig(2.0, max_steps=100_000))

    @pytest.mark.parametrize("kwargs", [dict(t_end=0), dict(t_end=1, rel_tol=0), dict(t_end=1, abs_tol=[1, -1]),
                                        dict(t_end=1, max_steps=0), dict(t_end=1, initial_step=-1)])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            IntegratorConfig(**kwargs)

    def test_rejects_negative_initial_state(self):
        with pytest.raises(ValueError):
            integrate_adaptive(decay, [-1.0], IntegratorConfig(1.0))


def set1_oracle_deviation(set1_params, rel_tol):
    rhs = dimensionless_rhs(set1_params)
    y0 = [1.0, 1.0, 1.0, 0.0]
    grid = FixedGrid(tuple(0.01 * i for i in range(1, 1000)))
    oracle = integrate_fixed_rk4(rhs, y0, 1e-4, 10.0, record_every=100)
    adaptive = integrate_adaptive(rhs, y0, IntegratorConfig(10.0, rel_tol=rel_tol, abs_tol=1e-14, sampling=grid))
    np.testing.assert_allclose(adaptive.times, oracle.times, rtol=1e-12)
    scale = np.maximum(np.abs(oracle.states), 1e-12)
    return float(np.max(np.abs(adaptive.states - oracle.states) / scale))


class TestOracle:
    def test_set1_matches_rk4(self, set1_params):
        assert set1_oracle_deviation(set1_params, 1e-8) < 1e-6

    def test_tightening_does_not_hurt(self, set1_params):
        loose = set1_oracle_deviation(set1_params, 1e-6)
        tight = set1_oracle_deviation(set1_params, 1e-9)
        assert tight <= loose * 1.01


class TestSolutionProperties:
    @pytest.fixture(scope="class")
    @staticmethod
    def set1_run():
        from biochar.scenarios import builtin_scenario, run_scenario
        return run_scenario(builtin_scenario(1, t_end=200.0))

    def test_charcoal_decreases_co2_increases(self, set1_run):
        states = set1_run.with_charcoal.states
        assert np.all(np.diff(states[:, 2]) <= 0)
        assert np.all(np.diff(states[:, 3]) >= 0)

    def test_nonnegative(self, set1_run):
        assert set1_run.with_charcoal.monitors.min_component >= -1e-12
        assert np.all(set1_run.baseline.states >= 0)

    def test_linear_combination_bound(self, set1_run):
        p = set1_run.scenario.params
        traj = set1_run.with_charcoal
        # dimensionless form: u1 + eta*U2/U1*u2 <= initial + s*tau/U1 * t
        w = p.eta * p.refs[1] / p.refs[0]
        combo = traj.states[:, 0] + w * traj.states[:, 1]
        bound = combo[0] + p.source * p.tau / p.refs[0] * traj.times
        assert np.all(combo <= bound + 1e-8 * np.maximum(1.0, bound))

    def test_baseline_stays_at_equilibrium(self, set1_run):
        base = set1_run.baseline.states
        assert np.max(np.abs(base[:, :2] - 1.0)) < 1e-6
        assert np.all(base[:, 2] == 0)

    def test_dimensional_run(self, set1_params):
        traj = integrate_adaptive(lambda t, y: biochar_rhs(set1_params, y), [1, 1, 1, 0], IntegratorConfig(10.0))
        assert traj.complete and traj.states[-1, 2] < 1.0
