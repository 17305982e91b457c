import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.model import (
    AffineSaturatedDrift,
    ConstraintViolationError,
    DimensionError,
    NonConvergenceError,
    PreconditionError,
    ReflectionMatrix,
    vertex_matrices,
)
from src.montecarlo import driving_path, sample_brownian
from src.skorokhod import (
    ContractionConstants,
    ControlPath,
    DrivingPath,
    PathPair,
    TimeGrid,
    check_reflection_bound,
    default_comp_tol,
    default_constants,
    path_metric,
    reflect_step,
    skorokhod_1d,
    solve_controlled,
)

from .conftest import make_spec


def _solve(spec, x0, grid, seed, vertex=0, **kwargs):
    driver = driving_path(spec, np.asarray(x0, dtype=float), grid, sample_brownian(grid, spec.d, seed))
    control = ControlPath.constant(grid, vertex_matrices(spec)[vertex])
    return driver, control, solve_controlled(driver, control, spec, **kwargs)


class TestTimeGrid:
    def test_uniform(self):
        grid = TimeGrid.uniform(1.0, 0.25)
        assert grid.n_steps == 4
        assert grid.dt == pytest.approx(0.25)
        assert grid.horizon == pytest.approx(1.0)

    def test_rejects_non_uniform(self):
        with pytest.raises(PreconditionError):
            TimeGrid(np.array([0.0, 0.1, 0.3]))

    def test_steps_until(self):
        grid = TimeGrid.uniform(1.0, 0.1)
        assert grid.steps_until(0.3) == 3
        with pytest.raises(PreconditionError):
            grid.steps_until(2.0)

    def test_driving_path_must_start_at_zero(self):
        grid = TimeGrid.uniform(1.0, 0.5)
        with pytest.raises(PreconditionError):
            DrivingPath(grid, np.ones((3, 1)), np.zeros(1))


class TestSkorokhod1d:
    def test_reflects_a_falling_line(self):
        psi = np.array([1.0, 0.0, -1.0, -2.0, -1.0])
        phi, eta = skorokhod_1d(psi)
        assert np.allclose(phi, [1.0, 0.0, 0.0, 0.0, 1.0])
        assert np.allclose(eta, [0.0, 0.0, 1.0, 2.0, 2.0])

    def test_falling_and_rising_lines(self):
        t = np.linspace(0.0, 1.0, 5)
        phi, eta = skorokhod_1d(-t)
        assert np.allclose(eta, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert np.allclose(phi, 0.0)
        phi, eta = skorokhod_1d(t)
        assert np.allclose(eta, 0.0)
        assert np.allclose(phi, t)

    def test_running_maximum_by_hand(self):
        phi, eta = skorokhod_1d(np.array([0.0, -1.0, 1.0, -3.0]))
        assert np.allclose(eta, [0.0, 1.0, 1.0, 3.0])
        assert np.allclose(phi, [0.0, 0.0, 2.0, 0.0])

    @given(st.lists(st.floats(-10, 10), min_size=2, max_size=60))
    def test_minimality_and_complementarity(self, steps):
        psi = np.concatenate([[0.0], np.cumsum(steps)])
        phi, eta = skorokhod_1d(psi)
        assert np.all(phi >= -1e-12)
        assert np.all(np.diff(eta) >= 0)
        # eta only increases when phi is at zero
        increase = np.diff(eta) > 1e-12
        assert np.allclose(phi[1:][increase], 0.0, atol=1e-9)

    def test_negative_start_rejected(self):
        with pytest.raises(PreconditionError):
            skorokhod_1d(np.array([-0.1, 0.0]))


class TestSolveControlled:
    def test_zero_noise_zero_drift_stays_put(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(1.0, 0.01)
        driver = DrivingPath(grid, np.zeros((grid.t.size, 2)), np.array([0.5, 1.0]))
        pair = solve_controlled(driver, ControlPath.constant(grid, ReflectionMatrix.identity(2)), spec)
        assert np.allclose(pair.x, [0.5, 1.0])
        assert np.allclose(pair.y, 0.0)

    def test_identity_control_matches_1d_map(self):
        spec = make_spec(d=2, alpha=[0.0, 0.0])
        grid = TimeGrid.uniform(2.0, 0.01)
        driver, _, pair = _solve(spec, [0.2, 0.0], grid, seed=11)
        for i in range(2):
            phi, eta = skorokhod_1d(driver.x0[i] + driver.w[:, i])
            assert np.allclose(pair.x[:, i], phi, atol=1e-9)
            assert np.allclose(pair.y[:, i], eta, atol=1e-9)

    @pytest.mark.parametrize("vertex", [0, 1, 2, 3])
    def test_solution_properties(self, vertex):
        spec = make_spec(d=2, alpha=[0.6, 0.4])
        grid = TimeGrid.uniform(1.0, 1e-3)
        driver, control, pair = _solve(spec, [0.1, 0.3], grid, seed=5, vertex=vertex)
        assert np.all(pair.x >= 0.0)
        assert np.all(pair.y[0] == 0.0)
        assert np.all(np.diff(pair.y, axis=0) >= -1e-12)
        assert np.all(pair.complementarity() <= default_comp_tol(grid, driver))
        # state equation on the grid
        pushed = np.einsum("kij,kj->ki", control.p, np.diff(pair.y, axis=0))
        rebuilt = driver.x0 + driver.w[1:] + pair.y[1:] - np.cumsum(pushed, axis=0)
        assert np.allclose(pair.x[1:], rebuilt, atol=1e-8)

    def test_picard_converges_on_every_window(self):
        drift = AffineSaturatedDrift(b0=[0.5, -0.5], B=[[-1.0, 0.0], [0.0, -1.0]])
        spec = make_spec(d=2, alpha=[0.5, 0.5], drift=drift, K=2.0)
        grid = TimeGrid.uniform(1.0, 1e-3)
        _, _, pair = _solve(spec, [0.0, 0.0], grid, seed=2, vertex=3)
        assert default_constants(spec).rho < 1.0
        window = max(1, int(np.floor(default_constants(spec).t0 / grid.dt + 1e-9)))
        assert len(pair.distances) == int(np.ceil(grid.n_steps / window))
        rho = default_constants(spec).rho
        for distances in pair.distances:
            d = np.asarray(distances)
            assert d[-1] < 1e-10
            assert np.all(np.diff(d) <= 1e-12)
            # ratios below the round-off floor carry no information
            live = d[1:-1] > 1e-8
            assert np.all(d[2:][live] <= (rho + 0.05) * d[1:-1][live])
        assert pair.final_distance < 1e-10

    def test_control_outside_budget_is_rejected(self):
        spec = make_spec(d=2, alpha=[0.3, 0.3])
        grid = TimeGrid.uniform(1.0, 0.01)
        P = np.zeros((2, 2))
        P[1, 0] = 1.5
        control = ControlPath(grid, np.broadcast_to(P, (grid.n_steps, 2, 2)))
        driver = DrivingPath(grid, np.zeros((grid.t.size, 2)), np.zeros(2))
        with pytest.raises(ConstraintViolationError, match=r"alpha\[0\]"):
            solve_controlled(driver, control, spec)

    def test_iteration_cap(self):
        spec = make_spec(d=2, alpha=[0.9, 0.9])
        grid = TimeGrid.uniform(1.0, 1e-2)
        with pytest.raises(NonConvergenceError) as info:
            _solve(spec, [0.0, 0.0], grid, seed=1, vertex=3, tol=1e-300, max_iter=2)
        assert len(info.value.distances) == 2

    def test_grid_mismatch(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(1.0, 0.1)
        other = TimeGrid.uniform(1.0, 0.05)
        driver = DrivingPath(grid, np.zeros((grid.t.size, 2)), np.zeros(2))
        with pytest.raises(DimensionError):
            solve_controlled(driver, ControlPath.constant(other, ReflectionMatrix.identity(2)), spec)

    def test_path_metric_is_zero_on_itself(self):
        spec = make_spec(d=2)
        grid = TimeGrid.uniform(0.5, 1e-2)
        _, _, pair = _solve(spec, [0.0, 0.0], grid, seed=9)
        assert path_metric(pair, pair, default_constants(spec)) == 0.0

    def test_path_metric_weights(self):
        grid = TimeGrid.uniform(1.0, 0.25)
        constants = ContractionConstants(gamma1=1.0, gamma2=4.0, t0=0.1, rho=0.75)
        base = PathPair(grid, np.zeros((5, 2)), np.zeros((5, 2)))
        shifted = PathPair(grid, np.column_stack([np.ones(5), np.zeros(5)]), np.zeros((5, 2)))
        assert path_metric(base, shifted, constants) == pytest.approx(1.0)
        y = np.zeros((5, 2))
        y[3:, 0] = 0.5
        jumped = PathPair(grid, np.zeros((5, 2)), y)
        assert path_metric(base, jumped, constants) == pytest.approx(2.0)


class TestReflectStep:
    def test_batch_matches_closed_form_without_push(self):
        x = np.array([[0.1, 0.2], [0.0, 1.0]])
        dx = np.array([[-0.3, 0.1], [0.2, -0.5]])
        x_next, dy = reflect_step(x, dx, np.zeros((2, 2)))
        assert np.allclose(x_next, [[0.0, 0.3], [0.2, 0.5]])
        assert np.allclose(dy, [[0.2, 0.0], [0.0, 0.0]])

    def test_push_moves_the_other_coordinate(self):
        P = np.array([[0.0, 0.0], [0.5, 0.0]])
        x_next, dy = reflect_step(np.array([[0.0, 1.0]]), np.array([[-0.2, 0.0]]), P)
        assert dy[0, 0] == pytest.approx(0.2)
        assert x_next[0, 1] == pytest.approx(0.9)


def _switching_control(spec, grid, rng):
    vertices = np.stack([m.p for m in vertex_matrices(spec)])
    return ControlPath(grid, vertices[rng.integers(len(vertices), size=grid.n_steps)])


class TestReflectionBound:
    ALPHA = [0.3, 0.5, 0.7]

    def _check(self, spec, grid, seed):
        rng = np.random.default_rng([seed, 1])
        driver = driving_path(spec, rng.uniform(0.0, 0.5, 3), grid, sample_brownian(grid, 3, seed))
        control = _switching_control(spec, grid, rng)
        pair = solve_controlled(driver, control, spec)
        return check_reflection_bound(pair, driver, spec)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_pushing_bound_holds(self, seed):
        spec = make_spec(d=3, alpha=self.ALPHA)
        report = self._check(spec, TimeGrid.uniform(1.0, 1e-3), seed)
        assert report.holds
        assert report.tightest_ratio <= 1.0 + 1e-9

    @pytest.mark.slow
    def test_pushing_bound_on_random_switching_controls(self):
        spec = make_spec(d=3, alpha=self.ALPHA)
        grid = TimeGrid.uniform(1.0, 2e-3)
        for seed in range(100):
            report = self._check(spec, grid, seed)
            assert report.holds, f"seed {seed}: violation {report.max_violation:.3e}"

    def test_deterministic_fall_is_tight(self):
        spec = make_spec(d=1, alpha=[0.0])
        grid = TimeGrid.uniform(1.0, 0.01)
        driver = DrivingPath(grid, -grid.t[:, None], np.zeros(1))
        pair = solve_controlled(driver, ControlPath.constant(grid, ReflectionMatrix.identity(1)), spec)
        assert np.allclose(pair.y[:, 0], grid.t, atol=1e-9)
        report = check_reflection_bound(pair, driver, spec)
        assert report.holds
        assert report.tightest_ratio == pytest.approx(1.0, abs=1e-8)
