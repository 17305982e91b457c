"""
Event-driven simulation of the d-class queueing network with help.

Class i has preemptive priority at server i. A server whose own queue is
empty may help another class according to a help rule; class i is then
served at server j with rate mu_help[i][j]. Every class is in heavy traffic
when lambda = mu.

The chain runs on the diffusion time scale: on [0, T] every rate is
multiplied by n, so the unscaled queue at time n t is simulated directly.
Scaled outputs are X / sqrt(n) for the queues, and the idle time I (scaled
time) for the fluid idleness, sqrt(n) I for the diffusion idleness.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..model.errors import EventBudgetError, NumericalError, PreconditionError
from ..montecarlo.engine import make_generator
from ..util.config_io import dump_yaml, load_yaml
from ..util.parallel import ordered_map

logger = logging.getLogger(__name__)

EVENT_BUDGET = 100_000_000
DEFAULT_SAMPLES = 200


class HelpRule(str, Enum):
    NONE = "none"
    LONGEST_QUEUE = "longest_queue"
    PRIORITY = "priority"


class NetworkSpec(BaseModel):
    """
    Network instance; loads from YAML:

        d: 2
        lambda: [1.0, 1.0]
        mu: [1.0, 1.0]
        mu_help: [[0.0, 0.5], [0.5, 0.0]]
        scaling_n: 1000
    """

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    name: Optional[str] = None
    d: int = Field(..., ge=1)
    lam: List[float] = Field(..., alias="lambda", description="Arrival rates")
    mu: List[float] = Field(..., description="Own-server service rates")
    mu_help: Optional[List[List[float]]] = Field(None, description="mu_help[i][j]: rate of class i at server j")
    scaling_n: int = Field(100, ge=1, description="Diffusion scaling parameter n")
    priority: Optional[List[int]] = Field(None, description="Class order for the priority help rule")

    @model_validator(mode="after")
    def _check_rates(self) -> "NetworkSpec":
        d = self.d
        if len(self.lam) != d or len(self.mu) != d:
            raise ValueError(f"lambda and mu must have length {d}")
        if any(m <= 0 for m in self.mu):
            raise ValueError("service rates mu must be positive")
        if any(rate < 0 for rate in self.lam):
            raise ValueError("arrival rates must be nonnegative")
        help_rates = self.help_matrix()
        if help_rates.shape != (d, d):
            raise ValueError(f"mu_help must be {d} x {d}")
        if np.any(help_rates < 0) or np.any(np.diag(help_rates) != 0):
            raise ValueError("mu_help must be nonnegative with a zero diagonal")
        ratios = help_rates / np.asarray(self.mu)[None, :]
        if np.any(ratios >= 1.0):
            i, j = np.argwhere(ratios >= 1.0)[0]
            raise ValueError(f"mu_help[{i}][{j}] / mu[{j}] = {ratios[i, j]:.4g} must be below 1")
        if self.priority is not None and sorted(self.priority) != list(range(d)):
            raise ValueError(f"priority must be a permutation of 0..{d - 1}")
        return self

    def help_matrix(self) -> np.ndarray:
        if self.mu_help is None:
            return np.zeros((self.d, self.d))
        return np.asarray(self.mu_help, dtype=float)

    def help_ratios(self) -> np.ndarray:
        """mu_help[i][j] / mu[j]"""
        return self.help_matrix() / np.asarray(self.mu)[None, :]

    def priority_order(self) -> List[int]:
        return list(range(self.d)) if self.priority is None else list(self.priority)

    def with_scaling(self, n: int) -> "NetworkSpec":
        return self.model_copy(update={"scaling_n": int(n)})

    @classmethod
    def from_yaml(cls, path: Union[str, Path]) -> "NetworkSpec":
        spec = cls.model_validate(load_yaml(path))
        logger.info(f"[QUEUE] Loaded network '{spec.name or Path(path).stem}' (d={spec.d}, n={spec.scaling_n})")
        return spec

    def to_yaml(self, path: Union[str, Path]) -> None:
        dump_yaml(self.to_dict(), path)

    def to_dict(self) -> dict:
        return self.model_dump(mode="json", by_alias=True, exclude_none=True)


@dataclass
class ScaledPath:
    """Scaled queue lengths and idleness sampled on a uniform grid"""

    t: np.ndarray
    xhat: np.ndarray
    ihat: np.ndarray
    ibar: np.ndarray
    n: int
    events: int
    rule: str

    @property
    def d(self) -> int:
        return self.xhat.shape[1]

    def complementarity(self) -> np.ndarray:
        """Left-point sum of xhat dihat per class"""
        return np.sum(self.xhat[:-1] * np.diff(self.ihat, axis=0), axis=0)

    def to_frame(self) -> pd.DataFrame:
        columns = {"t": self.t}
        for name, values in (("xhat", self.xhat), ("ihat", self.ihat), ("ibar", self.ibar)):
            columns.update({f"{name}_{k + 1}": values[:, k] for k in range(self.d)})
        return pd.DataFrame(columns)


def _help_effort(x: np.ndarray, rule: HelpRule, order: Sequence[int]) -> np.ndarray:
    """
    Effort matrix B[i, j] for the current queue vector

    An idle server j (x_j = 0) puts full effort on one nonempty class i != j.
    """
    d = x.size
    effort = np.zeros((d, d))
    if rule is HelpRule.NONE or d == 1:
        return effort
    for j in range(d):
        if x[j] > 0:
            continue
        if rule is HelpRule.LONGEST_QUEUE:
            masked = np.where(np.arange(d) == j, -1, x)
            i = int(np.argmax(masked))
            if masked[i] > 0:
                effort[i, j] = 1.0
        else:
            for i in order:
                if i != j and x[i] > 0:
                    effort[i, j] = 1.0
                    break
    return effort


def _initial_queue(net: NetworkSpec, x0) -> np.ndarray:
    if x0 is None:
        return np.zeros(net.d, dtype=np.int64)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (net.d,) or np.any(x0 < 0):
        raise PreconditionError(f"x0 must be a nonnegative vector of length {net.d}")
    return np.rint(x0 * np.sqrt(net.scaling_n)).astype(np.int64)


def simulate_network(
    net: NetworkSpec,
    rule: Union[str, HelpRule],
    T: float,
    seed: Union[int, np.random.SeedSequence],
    x0=None,
    n_samples: int = DEFAULT_SAMPLES,
    event_budget: int = EVENT_BUDGET,
) -> ScaledPath:
    """
    Simulate the network on [0, T] in diffusion time

    Args:
        net: Network instance; its scaling_n sets the time and space scaling
        rule: "none", "longest_queue" or "priority"
        T: Horizon
        seed: Seed of the event stream
        x0: Scaled initial queue; the chain starts at round(x0 sqrt(n))
        n_samples: Number of sampling intervals on [0, T]
        event_budget: Guard on the number of events

    Raises:
        EventBudgetError: more than event_budget events
    """
    if T <= 0:
        raise PreconditionError(f"T must be positive, got {T}")
    rule = HelpRule(rule)
    d, n = net.d, net.scaling_n
    rng = make_generator(seed)
    lam = np.asarray(net.lam) * n
    mu = np.asarray(net.mu) * n
    mu_help = net.help_matrix() * n
    order = net.priority_order()

    x = _initial_queue(net, x0)
    start = x.copy()
    arrivals = np.zeros(d, dtype=np.int64)
    departures = np.zeros(d, dtype=np.int64)
    idle = np.zeros(d)

    t_out = np.linspace(0.0, T, n_samples + 1)
    xs = np.empty((t_out.size, d))
    idles = np.empty((t_out.size, d))
    next_out = 0

    # rate layout: arrivals (d), own services (d), help services (d x d, row i = class)
    rates = np.empty(2 * d + d * d)
    rates[:d] = lam
    clock = 0.0
    events = 0

    while True:
        busy = x > 0
        rates[d : 2 * d] = mu * busy
        rates[2 * d :] = (mu_help * _help_effort(x, rule, order)).reshape(-1)
        total = rates.sum()
        step = rng.exponential(1.0 / total) if total > 0 else np.inf
        t_next = min(clock + step, T)

        empty = ~busy
        while next_out < t_out.size and t_out[next_out] <= t_next:
            xs[next_out] = x
            idles[next_out] = idle + (t_out[next_out] - clock) * empty
            next_out += 1
        idle += (t_next - clock) * empty
        clock = t_next
        if clock >= T:
            break

        k = int(np.searchsorted(np.cumsum(rates), rng.uniform() * total, side="right"))
        k = min(k, rates.size - 1)
        if k < d:
            cls = k
            x[cls] += 1
            arrivals[cls] += 1
        else:
            cls = k - d if k < 2 * d else (k - 2 * d) // d
            if x[cls] <= 0:
                raise NumericalError(f"service event on empty class {cls}")
            x[cls] -= 1
            departures[cls] += 1
        if x[cls] != start[cls] + arrivals[cls] - departures[cls]:
            raise NumericalError(f"balance broken for class {cls} at event {events}")

        events += 1
        if events > event_budget:
            raise EventBudgetError(f"network simulation exceeded {event_budget} events (n={n}, T={T})")

    scale = np.sqrt(n)
    path = ScaledPath(
        t=t_out,
        xhat=xs / scale,
        ihat=idles * scale,
        ibar=idles,
        n=n,
        events=events,
        rule=rule.value,
    )
    logger.debug(f"[QUEUE] n={n}, rule={rule.value}: {events} events, final xhat={path.xhat[-1].round(4).tolist()}")
    return path


def simulate_replications(
    net: NetworkSpec,
    rule: Union[str, HelpRule],
    T: float,
    n_paths: int,
    seed: int,
    x0=None,
    n_samples: int = DEFAULT_SAMPLES,
) -> List[ScaledPath]:
    """Independent replications on child seeds of SeedSequence(seed), in seed order"""
    if n_paths < 1:
        raise PreconditionError(f"n_paths must be >= 1, got {n_paths}")
    streams = np.random.SeedSequence(seed).spawn(n_paths)
    return ordered_map(lambda s: simulate_network(net, rule, T, s, x0=x0, n_samples=n_samples), streams)


@dataclass
class NetworkCost:
    mean: float
    std_error: float
    n_paths: int
    horizon: float


def network_discounted_cost(
    net: NetworkSpec,
    rule: Union[str, HelpRule],
    T: float,
    beta: float,
    running_cost,
    boundary_cost=None,
    n_paths: int = 100,
    seed: int = 0,
    x0=None,
    n_samples: int = DEFAULT_SAMPLES,
) -> NetworkCost:
    """
    E of the integral over [0, T] of exp(-beta s) (l(xhat) ds + c . d ihat),
    left-point quadrature on the sampling grid

    Args:
        running_cost: Callable on arrays of shape (..., d), e.g. a cost descriptor
        boundary_cost: Vector c; zero when omitted
    """
    if beta <= 0:
        raise PreconditionError(f"beta must be positive, got {beta}")
    c = np.zeros(net.d) if boundary_cost is None else np.asarray(boundary_cost, dtype=float)
    paths = simulate_replications(net, rule, T, n_paths, seed, x0=x0, n_samples=n_samples)
    samples = np.empty(n_paths)
    for k, path in enumerate(paths):
        discount = np.exp(-beta * path.t[:-1])
        running = np.asarray(running_cost(path.xhat[:-1]), dtype=float) * np.diff(path.t)
        boundary = np.diff(path.ihat, axis=0) @ c
        samples[k] = float(np.sum(discount * (running + boundary)))
    std_error = float(samples.std(ddof=1) / np.sqrt(n_paths)) if n_paths > 1 else 0.0
    result = NetworkCost(mean=float(samples.mean()), std_error=std_error, n_paths=n_paths, horizon=T)
    logger.info(f"[QUEUE] Discounted cost under {HelpRule(rule).value}: {result.mean:.6g} +/- {result.std_error:.3g}")
    return result
