"""
Sampling-based validation of a problem instance.

Checks reported (all on random samples in [0, 50]^d where points are needed):
budgets below one, nonsingular covariance, drift bound and Lipschitz constant,
running-cost sign and growth, the boundary-cost structure, and a positive
discount rate.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .errors import ConstraintViolationError, PreconditionError

logger = logging.getLogger(__name__)

SAMPLE_BOX = 50.0
SINGULAR_TOL = 1e-10
CHECK_SLACK = 1e-9


@dataclass
class ConditionCheck:
    name: str
    passed: bool
    detail: str
    witness: Optional[List[float]] = None


@dataclass
class ValidationReport:
    checks: List[ConditionCheck] = field(default_factory=list)
    sample_count: int = 0
    seed: int = 0

    @property
    def usable(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[ConditionCheck]:
        return [check for check in self.checks if not check.passed]

    def get(self, name: str) -> ConditionCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def raise_for_failure(self) -> None:
        failed = self.failures()
        if failed:
            message = "; ".join(f"{check.name}: {check.detail}" for check in failed)
            raise ConstraintViolationError(message)

    def to_dict(self) -> dict:
        return {
            "usable": self.usable,
            "sample_count": self.sample_count,
            "seed": self.seed,
            "checks": [asdict(check) for check in self.checks],
        }

    def __str__(self):
        lines = [f"usable={self.usable}"]
        for check in self.checks:
            mark = "ok" if check.passed else "FAIL"
            lines.append(f"  [{mark}] {check.name}: {check.detail}")
        return "\n".join(lines)


def _check_budgets(spec) -> ConditionCheck:
    for i, a in enumerate(spec.alpha):
        if a >= 1.0:
            return ConditionCheck("budgets", False, f"alpha[{i}] >= 1", [float(a)])
        if a < 0.0:
            return ConditionCheck("budgets", False, f"alpha[{i}] < 0", [float(a)])
    return ConditionCheck("budgets", True, f"max alpha = {spec.max_alpha:.6g} < 1")


def _check_covariance(spec) -> ConditionCheck:
    smallest = float(np.linalg.svd(spec.sigma, compute_uv=False).min())
    if smallest <= SINGULAR_TOL:
        return ConditionCheck("nonsingular_covariance", False, f"singular A (smallest singular value of sigma {smallest:.3e})")
    return ConditionCheck("nonsingular_covariance", True, f"smallest singular value of sigma {smallest:.6g}")


def _check_drift(spec, x: np.ndarray, y: np.ndarray) -> List[ConditionCheck]:
    K = spec.lipschitz_bound
    if K <= 0:
        return [ConditionCheck("drift_bound", False, f"K = {K} must be positive")]
    bx = spec.drift_at(x)
    sup = np.abs(bx).max(axis=1)
    worst = int(np.argmax(sup))
    bound = ConditionCheck(
        "drift_bound",
        bool(sup[worst] <= K + CHECK_SLACK),
        f"max |b(x)| = {sup[worst]:.6g} vs K = {K}",
        x[worst].tolist(),
    )

    # sup-norm Lipschitz ratio on random pairs
    by = spec.drift_at(y)
    num = np.abs(bx - by).max(axis=1)
    den = np.abs(x - y).max(axis=1)
    ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    worst = int(np.argmax(ratio))
    lipschitz = ConditionCheck(
        "drift_lipschitz",
        bool(ratio[worst] <= K * (1.0 + CHECK_SLACK) + CHECK_SLACK),
        f"max |b(x)-b(y)|/|x-y| = {ratio[worst]:.6g} vs K = {K}",
        x[worst].tolist(),
    )
    return [bound, lipschitz]


def _check_cost(spec, x: np.ndarray) -> List[ConditionCheck]:
    cost = spec.running_cost
    values = np.asarray(spec.cost_at(x), dtype=float)
    worst = int(np.argmin(values))
    sign = ConditionCheck(
        "cost_nonnegative",
        bool(values[worst] >= 0.0),
        f"min l(x) = {values[worst]:.6g}",
        x[worst].tolist(),
    )
    envelope = cost.growth_constant * (1.0 + np.linalg.norm(x, axis=1) ** cost.growth_degree)
    excess = values - envelope
    worst = int(np.argmax(excess))
    growth = ConditionCheck(
        "cost_growth",
        bool(excess[worst] <= CHECK_SLACK * (1.0 + envelope[worst])),
        f"max l(x) - c_l(1+|x|^m) = {excess[worst]:.6g} (m={cost.growth_degree}, c_l={cost.growth_constant})",
        x[worst].tolist(),
    )
    return [sign, growth]


def _check_boundary_structure(spec) -> ConditionCheck:
    # h_i(M) = c.M e_i depends on column i only, which is the structural sufficient case
    return ConditionCheck(
        "boundary_cost_structure",
        bool(np.all(np.isfinite(spec.boundary_cost))),
        "linear boundary cost c.M e_i depends on column i only",
    )


def _check_discount(spec) -> ConditionCheck:
    return ConditionCheck("discount", bool(spec.beta > 0.0), f"beta = {spec.beta}")


def validate_problem(spec, sample_count: int = 10_000, seed: int = 0) -> ValidationReport:
    """
    Validate a problem instance by direct inspection and random sampling

    Args:
        spec: Problem instance
        sample_count: Number of sample points (and point pairs)
        seed: Seed for the sampler

    Returns:
        ValidationReport; `usable` is False when any check fails
    """
    if sample_count < 1:
        raise PreconditionError(f"sample_count must be >= 1, got {sample_count}")

    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, SAMPLE_BOX, size=(sample_count, spec.d))
    y = rng.uniform(0.0, SAMPLE_BOX, size=(sample_count, spec.d))

    report = ValidationReport(sample_count=sample_count, seed=seed)
    report.checks.append(_check_budgets(spec))
    report.checks.append(_check_covariance(spec))
    report.checks.extend(_check_drift(spec, x, y))
    report.checks.extend(_check_cost(spec, x))
    report.checks.append(_check_boundary_structure(spec))
    report.checks.append(_check_discount(spec))

    if report.usable:
        logger.info(f"[MODEL] Validation passed for {spec}")
    else:
        for check in report.failures():
            logger.error(f"[MODEL] {check.name} failed: {check.detail}")
    return report
