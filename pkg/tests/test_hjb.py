import numpy as np
import pytest

from src.hjb import (
    OrthantGrid,
    boundary_condition_values,
    build_stencil,
    check_dominance,
    classify_nodes,
    default_grid,
    extract_policy,
    residuals,
    richardson_check,
    solve_hjb,
)
from src.model import (
    DimensionError,
    NonConvergenceError,
    PreconditionError,
    ProblemConfig,
    ProblemSpec,
    QuadraticCost,
    SchemeError,
)
from src.montecarlo import PolicyKind, evaluate_policies, resolve_policy, vertex_policies
from src.skorokhod import TimeGrid

from .conftest import make_spec


class TestGrid:
    def test_shape_and_strides(self):
        grid = OrthantGrid(2, 1.0, 0.25)
        assert grid.shape == (5, 5)
        assert grid.n_nodes == 25
        assert list(grid.strides) == [5, 1]
        assert np.allclose(grid.coordinates()[6], [0.25, 0.25])

    def test_rejects_non_integral_ratio(self):
        with pytest.raises(DimensionError):
            OrthantGrid(1, 1.0, 0.3)

    def test_rejects_node_explosion(self):
        with pytest.raises(DimensionError):
            OrthantGrid(4, 10.0, 0.01)

    def test_refined(self):
        assert OrthantGrid(1, 2.0, 0.1).refined().h == pytest.approx(0.05)

    def test_default_grid_scales_with_discount(self, quadratic_1d):
        grid = default_grid(quadratic_1d, cells=100)
        assert grid.L == pytest.approx(8.0 / np.sqrt(2.0))
        assert grid.cells == 100

    def test_classification_is_a_partition(self):
        grid = OrthantGrid(3, 1.0, 0.25)
        interior, face, outer = classify_nodes(grid)
        assert interior.size + face.size + outer.size == grid.n_nodes
        assert interior.size == 3**3
        # the corner (0, 0, N) is outer, not face
        corner = int(np.dot([0, 0, grid.cells], grid.strides))
        assert corner in outer and corner not in face


class TestStencil:
    def test_dominance_weights(self):
        A = np.array([[2.0, 0.5], [0.5, 1.0]])
        assert np.allclose(check_dominance(A), [0.75, 0.25])

    def test_non_dominant_covariance_raises(self):
        with pytest.raises(SchemeError, match=r"A\[1\]\[0\]"):
            check_dominance(np.array([[1.0, 0.9], [0.9, 0.82]]))

    def test_build_rejects_non_monotone_problem(self):
        spec = make_spec(d=2, sigma=[[1.0, 0.0], [0.9, 0.1]])
        with pytest.raises(SchemeError):
            build_stencil(spec, OrthantGrid(2, 1.0, 0.25))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            build_stencil(make_spec(d=2), OrthantGrid(1, 1.0, 0.25))

    def test_interior_rows_are_m_matrix_rows(self):
        spec = make_spec(d=2, sigma=[[1.0, 0.3], [0.3, 1.0]])
        stencil = build_stencil(spec, OrthantGrid(2, 1.0, 0.125))
        rows = stencil.base[stencil.interior].toarray()
        diag = rows[np.arange(stencil.interior.size), stencil.interior]
        off = rows.copy()
        off[np.arange(stencil.interior.size), stencil.interior] = 0.0
        assert np.all(off <= 0.0)
        # row sums equal beta
        assert np.allclose(diag + off.sum(axis=1), spec.beta)

    def test_policy_keeps_face_rows_balanced(self, symmetric_2d):
        stencil = build_stencil(symmetric_2d, OrthantGrid(2, 1.0, 0.125))
        targets = np.where(stencil.on_face, 1 - np.arange(2)[None, :], -1)
        matrix, _ = stencil.system(targets)
        face_rows = matrix[stencil.face].toarray()
        assert np.allclose(face_rows.sum(axis=1), 0.0)

    def test_face_gradient_is_one_sided(self, symmetric_2d):
        grid = OrthantGrid(2, 1.0, 0.125)
        stencil = build_stencil(symmetric_2d, grid)
        x = grid.coordinates()
        grad = stencil.tangential_gradient((x**2).sum(axis=1))
        at_face = x[stencil.face]
        # forward from zero, backward elsewhere
        expected = np.where(at_face == 0.0, grid.h, 2.0 * at_face - grid.h)
        assert np.allclose(grad, expected)


class TestSolver:
    def test_quadratic_one_dimensional_value(self, quadratic_1d):
        field = solve_hjb(quadratic_1d, OrthantGrid(1, 6.0, 0.01))
        assert field.value_at([0.0]) == pytest.approx(0.25, abs=0.01)
        assert field.value_at([1.0]) == pytest.approx(0.75, abs=0.01)
        assert field.boundary_residual < 1e-6
        assert field.interior_residual < 1e-6

    @pytest.mark.slow
    def test_quadratic_closed_form_on_a_long_grid(self, config_dir):
        spec = ProblemSpec.from_config(ProblemConfig.from_yaml(config_dir / "quadratic_1d_unit.yaml"))
        field = solve_hjb(spec, OrthantGrid(1, 8.0, 0.01))
        x = field.grid.axis[field.grid.axis <= 4.0 + 1e-9]
        assert np.max(np.abs(field.values[: x.size] - (x**2 + 1.0))) <= 0.02

    def test_linear_one_dimensional_value(self, linear_1d):
        field = solve_hjb(linear_1d, OrthantGrid(1, 8.0, 0.005))
        assert field.value_at([0.0]) == pytest.approx(1.0 / np.sqrt(2.0), abs=0.01)

    def test_sweep_matches_policy_iteration(self, linear_1d):
        grid = OrthantGrid(1, 4.0, 0.1)
        howard = solve_hjb(linear_1d, grid, tol=1e-11)
        sweep = solve_hjb(linear_1d, grid, tol=1e-11, method="sweep")
        assert sweep.method == "sweep"
        assert np.allclose(howard.values, sweep.values, atol=1e-6)

    def test_sweep_cap(self, linear_1d):
        with pytest.raises(NonConvergenceError) as info:
            solve_hjb(linear_1d, OrthantGrid(1, 4.0, 0.1), method="sweep", max_sweeps=3)
        assert len(info.value.distances) == 3

    def test_unknown_method(self, linear_1d):
        with pytest.raises(PreconditionError):
            solve_hjb(linear_1d, OrthantGrid(1, 4.0, 0.1), method="jacobi")

    def test_symmetric_problem_has_symmetric_value(self, symmetric_2d):
        field = solve_hjb(symmetric_2d, OrthantGrid(2, 4.0, 0.125))
        assert np.allclose(field.values, field.values.T, atol=1e-8)

    def test_pushing_never_raises_the_value(self, symmetric_2d):
        grid = OrthantGrid(2, 4.0, 0.125)
        with_push = solve_hjb(symmetric_2d, grid)
        without = solve_hjb(symmetric_2d.with_changes(alpha=np.zeros(2)), grid)
        assert np.all(with_push.values <= without.values + 1e-8)

    def test_value_increases_away_from_origin(self, symmetric_2d):
        field = solve_hjb(symmetric_2d, OrthantGrid(2, 4.0, 0.125))
        # away from the faces, where V_i can be as low as -c_i
        diagonal = np.diag(field.values)[8:24]
        assert np.all(np.diff(diagonal) > 0)

    def test_residual_recomputation_matches(self, symmetric_2d):
        field = solve_hjb(symmetric_2d, OrthantGrid(2, 2.0, 0.125))
        interior, boundary = residuals(field, symmetric_2d)
        assert interior == pytest.approx(field.interior_residual, abs=1e-12)
        assert boundary == pytest.approx(field.boundary_residual, abs=1e-12)

    def test_boundary_values_only_on_faces(self, symmetric_2d):
        field = solve_hjb(symmetric_2d, OrthantGrid(2, 2.0, 0.125))
        H = boundary_condition_values(field, symmetric_2d)
        assert H.shape == (2, 17, 17)
        assert np.isnan(H[0, 3, 3]) and not np.isnan(H[0, 0, 3])
        assert np.isnan(H[0, 0, -1])

    def test_metadata_and_frame(self, quadratic_1d):
        field = solve_hjb(quadratic_1d, OrthantGrid(1, 4.0, 0.05))
        meta = field.metadata()
        assert meta["method"] == "howard"
        assert meta["grid"]["n_axis"] == 81
        assert list(field.to_frame().columns) == ["x_1", "value"]


class TestPolicyExtraction:
    def test_feedback_policy_respects_budgets(self, symmetric_2d):
        field = solve_hjb(symmetric_2d, OrthantGrid(2, 2.0, 0.125))
        descriptor = extract_policy(field, symmetric_2d)
        assert descriptor.kind is PolicyKind.FEEDBACK_ARGMIN
        controller = resolve_policy(descriptor, symmetric_2d)
        x = np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        P = controller.matrices(x)
        assert P.shape == (4, 2, 2)
        assert np.all(P.sum(axis=1) <= symmetric_2d.alpha + 1e-12)
        assert np.all(np.einsum("kii->ki", P) == 0.0)

    def test_targets_live_on_their_own_face(self, symmetric_2d):
        field = solve_hjb(symmetric_2d, OrthantGrid(2, 2.0, 0.125))
        targets = field.policy.targets
        assert np.all(targets[0, 1:, :] == -1)
        assert np.all(targets[1, :, 1:] == -1)


class TestConvergence:
    def test_first_order_in_one_dimension(self, linear_1d):
        report = richardson_check(linear_1d, 4.0, 0.04)
        assert report.hs == pytest.approx([0.04, 0.02, 0.01])
        assert report.differences[1] < report.differences[0]
        assert report.in_band
        assert report.to_dict()["in_band"] is True

    def test_rejects_bad_mesh(self, linear_1d):
        with pytest.raises(PreconditionError):
            richardson_check(linear_1d, 4.0, 0.0)


class TestComparisonPrinciple:
    def test_adding_a_constant_cost_shifts_the_value(self):
        grid = OrthantGrid(2, 4.0, 0.125)
        lower = make_spec(d=2, beta=2.0, cost=QuadraticCost(Q=[[1.0, 0.0], [0.0, 0.0]]))
        upper = lower.with_changes(running_cost=QuadraticCost(Q=[[1.0, 0.0], [0.0, 0.0]], k=1.0))
        v1 = solve_hjb(lower, grid).values
        v2 = solve_hjb(upper, grid).values
        assert np.all(v1 <= v2 + 1e-8)
        assert np.allclose(v2 - v1, 1.0 / 2.0, atol=1e-8)


class TestMonteCarloAgreement:
    STATES = [[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]

    @pytest.mark.slow
    def test_feedback_policy_matches_the_grid_value(self, symmetric_2d):
        spec = symmetric_2d.with_changes(boundary_cost=np.zeros(2))
        field = solve_hjb(spec, OrthantGrid(2, 8.0, 0.05))
        feedback = extract_policy(field, spec)
        mc_grid = TimeGrid.uniform(10.0, 2e-3)
        for x0 in self.STATES:
            v_pde = field.value_at(x0)
            estimates = evaluate_policies(spec, x0, [feedback] + vertex_policies(spec), 2000, mc_grid, seed=17)
            best = estimates[0]
            assert abs(best.mean - v_pde) <= 0.05 * (1.0 + v_pde) + 3.0 * best.std_error, (x0, best.mean, v_pde)
            # common random numbers across the five policies
            assert best.mean <= min(e.mean for e in estimates[1:]) + 3.0 * best.std_error
