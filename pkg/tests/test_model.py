import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from src.model import (
    AffineSaturatedDrift,
    ConstraintViolationError,
    DimensionError,
    PreconditionError,
    ProblemConfig,
    ProblemSpec,
    ReflectionMatrix,
    column_targets,
    hamiltonian,
    hamiltonian_argmin,
    hamiltonian_bruteforce,
    hamiltonian_values,
    validate_problem,
    vertex_matrices,
)
from src.queueing import NetworkSpec, network_to_problem
from src.util.config_io import load_yaml

from .conftest import CONFIG_DIR, make_spec

budgets = st.lists(st.floats(0.0, 0.95), min_size=2, max_size=4)


class TestReflectionMatrix:
    def test_identity_has_zero_push(self):
        m = ReflectionMatrix.identity(3)
        assert np.array_equal(m.m, np.eye(3))
        assert m.satisfies(np.zeros(3))

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ConstraintViolationError):
            ReflectionMatrix(np.array([[0.1, 0.0], [0.0, 0.0]]))

    def test_rejects_negative_entries(self):
        with pytest.raises(ConstraintViolationError):
            ReflectionMatrix(np.array([[0.0, -0.1], [0.0, 0.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            ReflectionMatrix(np.zeros((2, 3)))

    def test_budget_check_names_column(self):
        m = ReflectionMatrix(np.array([[0.0, 0.0], [0.7, 0.0]]))
        with pytest.raises(ConstraintViolationError, match="column 0"):
            m.check_budget(np.array([0.5, 0.5]))
        assert m.check_budget(np.array([0.7, 0.0])) is m

    def test_equality_and_hash_follow_entries(self):
        a = ReflectionMatrix(np.array([[0.0, 0.2], [0.0, 0.0]]))
        b = ReflectionMatrix(np.array([[0.0, 0.2], [0.0, 0.0]]))
        assert a == b and hash(a) == hash(b)

    def test_column_targets_batch_shape(self):
        P = column_targets(np.array([0.3, 0.4, 0.5]), np.array([[1, -1, 0], [2, 0, -1]]))
        assert P.shape == (2, 3, 3)
        assert P[0, 1, 0] == pytest.approx(0.3)
        assert P[0, 0, 2] == pytest.approx(0.5)
        assert P[1, :, 2].sum() == 0.0


class TestVertexMatrices:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_count_and_identity_first(self, d):
        spec = make_spec(d=d, alpha=np.full(d, 0.4))
        vertices = vertex_matrices(spec)
        assert len(vertices) == d**d
        assert vertices[0] == ReflectionMatrix.identity(d)
        assert len(set(vertices)) == d**d

    def test_every_vertex_is_feasible(self):
        spec = make_spec(d=3, alpha=[0.2, 0.5, 0.9])
        for vertex in vertex_matrices(spec):
            vertex.check_budget(spec.alpha)
            # each column is zero or alpha_i on exactly one row
            for i, total in enumerate(vertex.column_sums()):
                assert total in (0.0, pytest.approx(spec.alpha[i]))


class TestHamiltonian:
    def test_closed_form_example(self):
        spec = make_spec(d=3, alpha=[0.5, 0.5, 0.5])
        # q = (1, 2, 3): H_0 = 1 - 0.5 * 3
        assert hamiltonian(spec, 0, [1.0, 2.0, 3.0]) == pytest.approx(-0.5)
        assert hamiltonian(spec, 2, [1.0, 2.0, 3.0]) == pytest.approx(2.0)

    def test_no_push_when_others_nonpositive(self):
        spec = make_spec(d=2, alpha=[0.9, 0.9])
        assert hamiltonian(spec, 0, [0.3, -1.0]) == pytest.approx(0.3)
        assert hamiltonian_argmin(spec, 0, [0.3, -1.0]) == ReflectionMatrix.identity(2)

    def test_boundary_cost_shifts_gradient(self):
        spec = make_spec(d=2, alpha=[0.5, 0.5], boundary_cost=[0.0, 1.0])
        assert hamiltonian(spec, 0, [0.0, 0.0]) == pytest.approx(-0.5)

    def test_one_dimension_returns_q(self):
        spec = make_spec(d=1, alpha=[0.0], boundary_cost=[0.25])
        assert hamiltonian(spec, 0, [1.0]) == pytest.approx(1.25)

    def test_argmin_ties_go_to_smallest_index(self):
        spec = make_spec(d=3, alpha=[0.5, 0.5, 0.5])
        P = hamiltonian_argmin(spec, 0, [0.0, 2.0, 2.0]).p
        assert P[1, 0] == pytest.approx(0.5) and P[2, 0] == 0.0

    def test_rejects_bad_gradient(self):
        spec = make_spec(d=2)
        with pytest.raises(PreconditionError):
            hamiltonian(spec, 0, [1.0, np.nan])
        with pytest.raises(PreconditionError):
            hamiltonian(spec, 0, [1.0])
        with pytest.raises(PreconditionError):
            hamiltonian(spec, 2, [1.0, 1.0])

    @given(
        alpha=budgets,
        data=st.data(),
    )
    def test_bruteforce_agrees_with_closed_form(self, alpha, data):
        d = len(alpha)
        spec = make_spec(d=d, alpha=alpha)
        p = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=d, max_size=d)))
        i = data.draw(st.integers(0, d - 1))
        assert hamiltonian_bruteforce(spec, i, p, grid_per_entry=5) == pytest.approx(hamiltonian(spec, i, p), abs=1e-12)

    def test_bruteforce_with_explicit_linear_cost(self):
        spec = make_spec(d=3, alpha=[0.4, 0.6, 0.2], boundary_cost=[0.2, 0.1, 0.3])
        p = np.array([0.5, 1.5, -0.2])
        c = spec.boundary_cost
        value = hamiltonian_bruteforce(spec, 1, p, grid_per_entry=6, boundary_cost=lambda column: float(c @ column))
        assert value == pytest.approx(hamiltonian(spec, 1, p), abs=1e-12)

    def test_bruteforce_reaches_interior_grid_columns(self):
        spec = make_spec(d=2, alpha=[0.8, 0.8])

        def cost(column):
            # zero at both vertices, -4 at the half push
            return 10.0 * abs(abs(column[1]) - 0.4) - 4.0

        assert hamiltonian_bruteforce(spec, 0, [1.0, 0.0], grid_per_entry=3, boundary_cost=cost) == pytest.approx(-3.0)
        assert hamiltonian_bruteforce(spec, 0, [1.0, 0.0], grid_per_entry=2, boundary_cost=cost) == pytest.approx(1.0)

    @given(alpha=budgets, c=st.lists(st.floats(-2, 2), min_size=4, max_size=4), data=st.data())
    def test_argmin_attains_the_value(self, alpha, c, data):
        d = len(alpha)
        spec = make_spec(d=d, alpha=alpha, boundary_cost=c[:d])
        p = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=d, max_size=d)))
        i = data.draw(st.integers(0, d - 1))
        column = hamiltonian_argmin(spec, i, p).m[:, i]
        assert p @ column + spec.boundary_cost @ column == pytest.approx(hamiltonian(spec, i, p), abs=1e-12)

    @given(alpha=budgets, scale=st.floats(0.01, 100.0), data=st.data())
    def test_positively_homogeneous(self, alpha, scale, data):
        d = len(alpha)
        spec = make_spec(d=d, alpha=alpha)
        p = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=d, max_size=d)))
        H = hamiltonian_values(spec.alpha, p)
        assert np.allclose(hamiltonian_values(spec.alpha, scale * p), scale * H, rtol=1e-9, atol=1e-9)

    @given(alpha=budgets, t=st.floats(0.0, 1.0), data=st.data())
    def test_concave_in_the_gradient(self, alpha, t, data):
        d = len(alpha)
        vectors = st.lists(st.floats(-5, 5), min_size=d, max_size=d)
        p, r = np.array(data.draw(vectors)), np.array(data.draw(vectors))
        mixed = hamiltonian_values(np.asarray(alpha), t * p + (1 - t) * r)
        chord = t * hamiltonian_values(np.asarray(alpha), p) + (1 - t) * hamiltonian_values(np.asarray(alpha), r)
        assert np.all(mixed >= chord - 1e-9)

    @given(alpha=budgets, bump=st.floats(0.0, 3.0), data=st.data())
    def test_monotone_in_own_coordinate(self, alpha, bump, data):
        d = len(alpha)
        p = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=d, max_size=d)))
        i = data.draw(st.integers(0, d - 1))
        raised = p.copy()
        raised[i] += bump
        before = hamiltonian_values(np.asarray(alpha), p)
        after = hamiltonian_values(np.asarray(alpha), raised)
        assert after[i] >= before[i]
        # and never raises another face
        others = np.arange(d) != i
        assert np.all(after[others] <= before[others] + 1e-12)

    @given(alpha=budgets, data=st.data())
    def test_vectorized_matches_scalar(self, alpha, data):
        d = len(alpha)
        spec = make_spec(d=d, alpha=alpha)
        q = np.array(data.draw(st.lists(st.floats(-3, 3), min_size=d, max_size=d)))
        H = hamiltonian_values(spec.alpha, q[None, :])[0]
        for i in range(d):
            assert H[i] == pytest.approx(hamiltonian(spec, i, q))


class TestProblemConfig:
    def test_loads_example_config(self, config_dir):
        config = ProblemConfig.from_yaml(config_dir / "symmetric_2d.yaml")
        spec = ProblemSpec.from_config(config)
        assert spec.d == 2
        assert np.allclose(spec.boundary_cost, [0.1, 0.1])
        assert spec.to_config().to_dict()["alpha"] == [0.5, 0.5]

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValidationError):
            ProblemConfig.model_validate(
                {
                    "d": 1,
                    "alpha": [0.0],
                    "drift": {"kind": "constant", "b0": [0.0]},
                    "sigma": [[1.0]],
                    "beta": 1.0,
                    "running_cost": {"kind": "linear", "w": [1.0]},
                    "colour": "blue",
                }
            )

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            make_spec(d=2, alpha=[0.1, 0.1, 0.1])

    def test_drift_is_clamped_to_k(self):
        spec = make_spec(d=2, drift=AffineSaturatedDrift(b0=[3.0, -3.0], B=[[0, 0], [0, 0]]), K=1.0)
        assert np.allclose(spec.drift_at(np.zeros((1, 2))), [[1.0, -1.0]])


class TestValidation:
    def test_standard_problem_is_usable(self):
        report = validate_problem(make_spec(d=2), sample_count=500, seed=3)
        assert report.usable
        assert report.get("budgets").passed
        assert report.to_dict()["usable"] is True

    def test_budget_at_one_fails(self):
        report = validate_problem(make_spec(d=2, alpha=[1.0, 0.2]), sample_count=100)
        assert not report.usable
        assert [c.name for c in report.failures()] == ["budgets"]
        with pytest.raises(ConstraintViolationError):
            report.raise_for_failure()

    def test_singular_covariance_fails(self):
        report = validate_problem(make_spec(d=2, sigma=[[1.0, 1.0], [1.0, 1.0]]), sample_count=100)
        assert not report.get("nonsingular_covariance").passed

    def test_nonpositive_drift_bound_fails(self):
        report = validate_problem(make_spec(d=2, K=0.0), sample_count=100)
        assert not report.get("drift_bound").passed

    def test_affine_drift_within_k_passes(self):
        drift = AffineSaturatedDrift(b0=[0.0, 0.0], B=[[-3, 0], [0, -3]])
        report = validate_problem(make_spec(d=2, drift=drift, K=200.0), sample_count=500)
        assert report.get("drift_bound").passed
        assert report.get("drift_lipschitz").passed

    def test_cost_growth_violation(self):
        spec = make_spec(d=1, alpha=[0.0], cost=make_spec(d=1).running_cost.model_copy(update={"Q": [[5.0]]}))
        assert not validate_problem(spec, sample_count=200).get("cost_growth").passed

    def test_sample_count_must_be_positive(self):
        with pytest.raises(PreconditionError):
            validate_problem(make_spec(d=1, alpha=[0.0]), sample_count=0)


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.yaml")), ids=lambda path: path.stem)
def test_shipped_configs_are_usable(path):
    data = load_yaml(path)
    if "lambda" in data:
        spec = network_to_problem(NetworkSpec.from_yaml(path))
    else:
        spec = ProblemSpec.from_config(ProblemConfig.from_yaml(path))
    report = validate_problem(spec, sample_count=2_000)
    assert report.usable, str(report)
