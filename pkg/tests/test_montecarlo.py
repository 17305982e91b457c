import numpy as np
import pytest

from src.model import DimensionError, LinearCost, PreconditionError
from src.montecarlo import (
    PolicyDescriptor,
    default_grid,
    discounted_cost,
    dpp_residual,
    estimate_value,
    estimates_frame,
    evaluate_policies,
    evaluate_policy,
    exit_probability,
    growth_constant,
    parse_policy,
    register_policy,
    resolve_policy,
    run_batches,
    sample_brownian,
    simulate,
    tail_bound,
    vertex_policies,
)
from src.skorokhod import TimeGrid

from .conftest import make_spec


class TestPolicies:
    def test_vertex_family_size(self):
        assert len(vertex_policies(make_spec(d=3, alpha=[0.1, 0.2, 0.3]))) == 27

    def test_parse(self):
        spec = make_spec(d=2)
        assert parse_policy("vertex:3", spec).vertex_index == 3
        assert parse_policy("callback:push_longest", spec).name == "callback:push_longest"
        with pytest.raises(PreconditionError):
            parse_policy("argmin", spec)

    def test_resolve_rejects_unknown_vertex_and_callback(self):
        spec = make_spec(d=2)
        with pytest.raises(PreconditionError):
            resolve_policy(PolicyDescriptor.constant_vertex(4), spec)
        with pytest.raises(PreconditionError):
            resolve_policy(PolicyDescriptor.feedback_callback("no-such-policy"), spec)

    def test_push_longest_targets_largest_other(self):
        spec = make_spec(d=3, alpha=[0.2, 0.3, 0.4])
        controller = resolve_policy(PolicyDescriptor.feedback_callback("push_longest"), spec)
        P = controller.matrices(np.array([[0.0, 2.0, 1.0]]))[0]
        assert P[1, 0] == pytest.approx(0.2)
        assert P[0, 1] == 0.0 and P[2, 1] == pytest.approx(0.3)
        assert P[1, 2] == pytest.approx(0.4)

    def test_registered_callback_is_used(self):
        @register_policy("test_push_first")
        def push_first(x, alpha):
            n, d = x.shape
            P = np.zeros((n, d, d))
            P[:, 0, 1:] = alpha[1:]
            return P

        spec = make_spec(d=2, alpha=[0.3, 0.6])
        controller = resolve_policy(parse_policy("callback:test_push_first", spec), spec)
        assert controller.matrices(np.zeros((2, 2)))[1, 0, 1] == pytest.approx(0.6)


class TestSimulation:
    def test_brownian_increments_are_reproducible(self):
        grid = TimeGrid.uniform(1.0, 0.01)
        a = sample_brownian(grid, 2, 42)
        assert a.shape == (100, 2)
        assert np.array_equal(a, sample_brownian(grid, 2, 42))
        assert not np.array_equal(a, sample_brownian(grid, 2, 43))

    def test_feedback_and_constant_paths_agree_without_push(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(1.0, 1e-2)
        constant, _ = simulate(spec, [0.1, 0.0], PolicyDescriptor.constant_vertex(0), grid, seed=4)
        feedback, control = simulate(spec, [0.1, 0.0], PolicyDescriptor.feedback_callback("identity"), grid, seed=4)
        assert np.allclose(constant.x, feedback.x, atol=1e-9)
        assert np.allclose(constant.y, feedback.y, atol=1e-9)
        assert np.all(control.p == 0.0)

    def test_rejects_state_outside_orthant(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(1.0, 0.1)
        with pytest.raises(PreconditionError):
            simulate(spec, [-0.1, 0.0], PolicyDescriptor.constant_vertex(0), grid, seed=0)
        with pytest.raises(DimensionError):
            simulate(spec, [0.1], PolicyDescriptor.constant_vertex(0), grid, seed=0)

    def test_deterministic_cost_is_a_riemann_sum(self):
        spec = make_spec(d=1, alpha=[0.0], sigma=[[0.0]], cost=LinearCost(w=[1.0]))
        grid = TimeGrid.uniform(12.0, 1e-3)
        pair, control = simulate(spec, [1.0], PolicyDescriptor.constant_vertex(0), grid, seed=0)
        dt = grid.dt
        expected = dt * (1.0 - np.exp(-spec.beta * grid.horizon)) / (1.0 - np.exp(-spec.beta * dt))
        assert discounted_cost(pair, control, spec) == pytest.approx(expected, rel=1e-9)

    def test_boundary_cost_charges_pushing(self):
        spec = make_spec(d=1, alpha=[0.0], boundary_cost=[1.0])
        grid = TimeGrid.uniform(2.0, 1e-3)
        pair, control = simulate(spec, [0.0], PolicyDescriptor.constant_vertex(0), grid, seed=8)
        free = make_spec(d=1, alpha=[0.0])
        extra = discounted_cost(pair, control, spec) - discounted_cost(pair, control, free)
        discount = np.exp(-spec.beta * grid.t[:-1])
        assert extra == pytest.approx(float(np.sum(discount * np.diff(pair.y[:, 0]))))
        assert extra > 0


class TestEstimators:
    def test_common_random_numbers(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(1.0, 1e-2)
        constant, identity = evaluate_policies(
            spec,
            [0.5, 0.5],
            [PolicyDescriptor.constant_vertex(0), PolicyDescriptor.feedback_callback("identity")],
            200,
            grid,
            seed=3,
        )
        assert constant.mean == pytest.approx(identity.mean, rel=1e-12)

    def test_same_seed_same_estimate(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(1.0, 1e-2)
        a = evaluate_policy(spec, [0.2, 0.1], PolicyDescriptor.constant_vertex(1), 300, grid, seed=7)
        b = evaluate_policy(spec, [0.2, 0.1], PolicyDescriptor.constant_vertex(1), 300, grid, seed=7)
        assert a.mean == b.mean and a.std_error == b.std_error
        assert a.policy == "vertex:1"

    def test_batch_size_does_not_change_path_count(self, monkeypatch):
        monkeypatch.setenv("ORTHANT_HJB_BATCH", "64")
        spec = make_spec(d=2)
        outcome = run_batches(spec, [0.0, 0.0], PolicyDescriptor.constant_vertex(0), TimeGrid.uniform(0.1, 1e-2), 150, seed=1)
        assert outcome.cost.shape == (150,)
        assert np.all(outcome.terminal >= 0.0)

    def test_needs_two_paths(self):
        spec = make_spec(d=1, alpha=[0.0])
        with pytest.raises(PreconditionError):
            evaluate_policy(spec, [0.0], PolicyDescriptor.constant_vertex(0), 1, TimeGrid.uniform(1.0, 0.1), seed=0)

    def test_estimates_frame_columns(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(0.5, 1e-2)
        estimates = evaluate_policies(spec, [0.1, 0.1], vertex_policies(spec), 50, grid, seed=0)
        frame = estimates_frame(estimates)
        assert list(frame.columns) == ["policy", "mean", "std_error", "n", "T", "tail_bound"]
        assert len(frame) == 4

    def test_tail_bound_decays_with_horizon(self):
        spec = make_spec(d=2, boundary_cost=[0.5, 0.5])
        assert growth_constant(spec) > 0
        assert tail_bound(spec, 2.0, 20.0) < tail_bound(spec, 2.0, 10.0)
        assert tail_bound(spec, 2.0, 10.0) < tail_bound(spec, 4.0, 10.0)

    def test_default_grid_horizon(self):
        grid = default_grid(make_spec(d=1, alpha=[0.0], beta=4.0), dt=0.01)
        assert grid.horizon == pytest.approx(3.0)

    def test_exit_probability_bounds(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(1.0, 1e-2)
        policy = PolicyDescriptor.constant_vertex(0)
        small = exit_probability(spec, [1.0, 1.0], 0.01, 1.0, policy, 200, grid, seed=0)
        large = exit_probability(spec, [1.0, 1.0], 50.0, 1.0, policy, 200, grid, seed=0)
        assert small == pytest.approx(1.0)
        assert large == 0.0

    @pytest.mark.slow
    @pytest.mark.parametrize("vertex", range(4))
    def test_exit_probability_vanishes_for_short_times(self, vertex):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(0.1, 1e-3)
        policy = PolicyDescriptor.constant_vertex(vertex)
        probabilities = [exit_probability(spec, [0.0, 0.0], 1.0, t, policy, 2000, grid, seed=6) for t in (0.1, 0.01, 0.001)]
        assert probabilities[0] >= probabilities[1] >= probabilities[2]
        assert probabilities[2] < 0.01

    @pytest.mark.slow
    def test_value_of_driftless_quadratic_problem(self, quadratic_1d):
        grid = default_grid(quadratic_1d, dt=1e-3)
        policy, estimate = estimate_value(quadratic_1d, [0.0], vertex_policies(quadratic_1d), n_paths=4000, grid=grid, seed=0)
        assert policy.vertex_index == 0
        assert estimate.mean == pytest.approx(0.25, abs=0.02 + 4 * estimate.std_error)
        assert estimate.tail_bound < 1e-2

    @pytest.mark.slow
    def test_dpp_residual_with_exact_value(self, quadratic_1d):
        def exact(x):
            x = np.atleast_2d(x)
            return x[:, 0] ** 2 / 2.0 + 0.25

        grid = TimeGrid.uniform(0.5, 1e-3)
        result = dpp_residual(quadratic_1d, [0.5], 0.3, 0.5, vertex_policies(quadratic_1d), 4000, grid, seed=1, value=exact)
        assert result.value == pytest.approx(0.375)
        assert result.residual <= 0.01 + 4 * result.std_error
