"""
Reflected-diffusion counterpart of the queueing network with help, and the
comparison of scaled queue lengths against it.

The limit has reflection budgets alpha_j = max_i mu_help[i][j] / mu[j], a
push on Y_j that lowers class i at rate mu_help[i][j] / mu[j], drift
sqrt(n) (lambda - mu) (zero at criticality) and diagonal noise
sqrt(lambda_i + mu_i) from the arrival and service streams. The network
model does not pin the covariance down, so every report flags the diagonal
choice.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import stats

from ..model.descriptors import ConstantDrift, LinearCost
from ..model.errors import DimensionError
from ..model.problem import ProblemSpec
from ..montecarlo.engine import run_batches
from ..montecarlo.policy import PolicyDescriptor
from ..skorokhod.paths import TimeGrid
from .network import HelpRule, NetworkSpec, simulate_replications

logger = logging.getLogger(__name__)

DEFAULT_N_LIST = (100, 1_000, 10_000)
BOOTSTRAP_RESAMPLES = 200
COVARIANCE_NOTE = "diffusion covariance assumed diagonal: sigma_i = sqrt(lambda_i + mu_i)"


def network_to_problem(
    net: NetworkSpec,
    beta: float = 1.0,
    running_cost=None,
    boundary_cost=None,
) -> ProblemSpec:
    """Limit ProblemSpec of the network at its scaling_n"""
    d = net.d
    ratios = net.help_ratios()
    alpha = ratios.max(axis=0) if d > 1 else np.zeros(1)
    lam, mu = np.asarray(net.lam), np.asarray(net.mu)
    drift = np.sqrt(net.scaling_n) * (lam - mu)
    return ProblemSpec(
        d=d,
        alpha=alpha,
        drift=ConstantDrift(b0=drift.tolist()),
        sigma=np.diag(np.sqrt(lam + mu)),
        beta=beta,
        running_cost=running_cost or LinearCost(w=[1.0] * d, growth_constant=float(np.sqrt(d))),
        boundary_cost=boundary_cost,
        lipschitz_bound=max(1.0, float(np.abs(drift).max())),
        name=f"{net.name or 'network'}-limit",
    )


def diffusion_policy(net: NetworkSpec, rule: Union[str, HelpRule]) -> PolicyDescriptor:
    """Reflection control mirroring a help rule"""
    rule = HelpRule(rule)
    d = net.d
    ratios = net.help_ratios()
    if rule is HelpRule.NONE or d == 1:
        return PolicyDescriptor.constant_vertex(0)

    if rule is HelpRule.PRIORITY:
        P = np.zeros((d, d))
        order = net.priority_order()
        for j in range(d):
            i = next(k for k in order if k != j)
            P[i, j] = ratios[i, j]

        def priority_push(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
            return np.broadcast_to(P, (x.shape[0], d, d)).copy()

        return PolicyDescriptor.feedback_callback(priority_push, label="callback:priority")

    def longest_push(x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        out = np.zeros((n, d, d))
        rows = np.arange(n)
        for j in range(d):
            masked = x.copy()
            masked[:, j] = -np.inf
            i = np.argmax(masked, axis=1)
            out[rows, i, j] = np.where(masked[rows, i] > 0, ratios[i, j], 0.0)
        return out

    return PolicyDescriptor.feedback_callback(longest_push, label="callback:longest_queue")


@dataclass
class ComparisonReport:
    rule: str
    horizon: float
    rows: List[dict]
    totals: List[float]
    inversions: int
    covariance_note: str = COVARIANCE_NOTE
    n_list: List[int] = field(default_factory=list)

    @property
    def trend_ok(self) -> bool:
        return self.inversions <= 1

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "horizon": self.horizon,
            "n_list": self.n_list,
            "rows": self.rows,
            "w1_totals": self.totals,
            "inversions": self.inversions,
            "trend_ok": self.trend_ok,
            "covariance_note": self.covariance_note,
        }


def bootstrap_w1_std(a: np.ndarray, b: np.ndarray, rng: np.random.Generator, resamples: int = BOOTSTRAP_RESAMPLES) -> float:
    values = np.empty(resamples)
    for k in range(resamples):
        values[k] = stats.wasserstein_distance(rng.choice(a, a.size), rng.choice(b, b.size))
    return float(values.std(ddof=1))


def compare_to_diffusion(
    net: NetworkSpec,
    rule: Union[str, HelpRule],
    spec: Optional[ProblemSpec] = None,
    n_list: Sequence[int] = DEFAULT_N_LIST,
    n_paths: int = 200,
    seed: int = 0,
    T: float = 1.0,
    x0=None,
    dt: float = 1e-3,
) -> ComparisonReport:
    """
    Compare X_hat(T) of the network with X(T) of the reflected diffusion

    For every n the network starts at round(x0 sqrt(n)) and the diffusion at
    the same point divided by sqrt(n). Each coordinate gets mean, variance
    and the Wasserstein-1 distance between the two marginals with a
    bootstrap standard deviation. The W1 totals should not increase along
    n_list; one inversion is tolerated.
    """
    rule = HelpRule(rule)
    x0 = np.zeros(net.d) if x0 is None else np.asarray(x0, dtype=float)
    if spec is not None and spec.d != net.d:
        raise DimensionError(f"problem dimension {spec.d} does not match network dimension {net.d}")
    grid = TimeGrid.uniform(T, dt)
    rng = np.random.default_rng(seed)

    rows, totals = [], []
    for n in n_list:
        scaled = net.with_scaling(n)
        paths = simulate_replications(scaled, rule, T, n_paths, seed, x0=x0, n_samples=1)
        queue = np.stack([path.xhat[-1] for path in paths])

        start = np.rint(x0 * np.sqrt(n)) / np.sqrt(n)
        limit = spec if spec is not None else network_to_problem(scaled)
        diffusion = run_batches(limit, start, diffusion_policy(scaled, rule), grid, n_paths, seed).terminal

        total = 0.0
        for k in range(net.d):
            w1 = float(stats.wasserstein_distance(queue[:, k], diffusion[:, k]))
            total += w1
            rows.append(
                {
                    "n": int(n),
                    "coordinate": k + 1,
                    "mean_queue": float(queue[:, k].mean()),
                    "var_queue": float(queue[:, k].var(ddof=1)),
                    "mean_diffusion": float(diffusion[:, k].mean()),
                    "var_diffusion": float(diffusion[:, k].var(ddof=1)),
                    "w1": w1,
                    "w1_bootstrap_std": bootstrap_w1_std(queue[:, k], diffusion[:, k], rng),
                }
            )
        totals.append(total)
        logger.info(f"[QUEUE] n={n}: W1 total {total:.4g} ({rule.value}, {n_paths} paths)")

    inversions = int(np.sum(np.diff(totals) > 0))
    report = ComparisonReport(rule=rule.value, horizon=T, rows=rows, totals=totals, inversions=inversions, n_list=[int(n) for n in n_list])
    if not report.trend_ok:
        logger.warning(f"[QUEUE] W1 totals {np.round(totals, 4).tolist()} have {inversions} inversions")
    logger.info(f"[QUEUE] {COVARIANCE_NOTE}")
    return report
