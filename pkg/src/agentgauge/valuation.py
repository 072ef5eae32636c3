"""Monte Carlo valuation of an agent in one environment.

Three value notions are supported:

* discounted: geometrically weighted mean reward, normalized so the value of
  an all-ones reward stream is 1;
* harmonic: inverse-square cycle weights with the analytic normalizer;
* summable: plain expected total reward, which is bounded by 1 for
  budget-constrained environments.

Infinite sums are truncated explicitly and the ignored mass is reported in
the estimate, never silently dropped.  All randomness derives from the
params seed, so estimates are bit-reproducible.  Episodes of cycle-indexed
agents in batch-capable environments run vectorized in lockstep; everything
else takes the scalar path.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import AgentGaugeError, RolloutFailed, SummabilityError
from .seeding import derive_seed

MODES = ("discounted", "harmonic", "summable")


@dataclass(frozen=True)
class ValuationParams:
    """Estimation protocol: value mode, truncation, sample size, confidence."""

    mode: str = "summable"
    gamma: float = 0.95
    horizon: int = 250
    episodes: int = 100
    trunc_epsilon: float = 1e-9
    confidence: float = 0.95
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise AgentGaugeError(f"unknown valuation mode {self.mode!r}")
        if self.mode == "discounted" and not 0.0 < self.gamma < 1.0:
            raise AgentGaugeError("gamma must lie in (0, 1)")
        if self.horizon < 1:
            raise AgentGaugeError("horizon must be >= 1")
        if self.episodes < 1:
            raise AgentGaugeError("episodes must be >= 1")
        if not 0.0 < self.trunc_epsilon < 1.0:
            raise AgentGaugeError("trunc_epsilon must lie in (0, 1)")
        if not 0.0 < self.confidence < 1.0:
            raise AgentGaugeError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class ValueEstimate:
    """Monte Carlo estimate with confidence half-width and truncation bound."""

    mean: float
    ci_half_width: float
    episodes_used: int
    truncation_bound: float
    failed_episodes: int = 0


def gamma_norm(gamma: float) -> float:
    """Normalizer of the geometric weight series: sum of gamma^i for i >= 1."""
    if not 0.0 < gamma < 1.0:
        raise AgentGaugeError("gamma must lie in (0, 1)")
    return gamma / (1.0 - gamma)


def _z_score(confidence: float) -> float:
    return NormalDist().inv_cdf((1.0 + confidence) / 2.0)


def _estimate(values: np.ndarray, confidence: float, truncation_bound: float,
              failed: int = 0) -> ValueEstimate:
    n = len(values)
    mean = float(np.mean(values)) if n else 0.0
    if n > 1:
        half = _z_score(confidence) * float(np.std(values, ddof=1)) / math.sqrt(n)
    else:
        half = 0.0
    return ValueEstimate(mean=mean, ci_half_width=half, episodes_used=n,
                         truncation_bound=truncation_bound, failed_episodes=failed)


def _use_batch(agent_factory, env_model) -> bool:
    return bool(getattr(agent_factory, "supports_batch", False)
                and getattr(env_model, "supports_batch", False))


def _batch_reward_values(agent_factory, env_model, n_episodes: int, cycles: int,
                         seed: int) -> np.ndarray:
    """Reward values, shape (n_episodes, cycles), for lockstep batch episodes."""
    rng = np.random.default_rng(seed)
    denominator = env_model.space.reward_denominator
    state = env_model.begin_batch(n_episodes, rng)
    out = np.empty((n_episodes, cycles), dtype=np.float64)
    _, numerators = env_model.batch_step(state, None)
    out[:, 0] = numerators / denominator
    for k in range(1, cycles):
        p_one = agent_factory.prob_action_one(k)
        if p_one <= 0.0:
            actions = np.zeros(n_episodes, dtype=np.int64)
        elif p_one >= 1.0:
            actions = np.ones(n_episodes, dtype=np.int64)
        else:
            actions = (rng.random(n_episodes) < p_one).astype(np.int64)
        _, numerators = env_model.batch_step(state, actions)
        out[:, k] = numerators / denominator
    return out


def _scalar_reward_values(agent_factory, env_model, n_episodes: int, cycles: int,
                          seed: int) -> np.ndarray:
    """Scalar-path counterpart of _batch_reward_values."""
    denominator = env_model.space.reward_denominator
    out = np.zeros((n_episodes, cycles), dtype=np.float64)
    for index in range(n_episodes):
        policy = agent_factory.make(
            random.Random(derive_seed(seed, "agent", agent_factory.name,
                                      env_model.identifier, index)))
        episode = env_model.spawn(
            random.Random(derive_seed(seed, "env", agent_factory.name,
                                      env_model.identifier, index)))
        percept = episode.step(None)
        policy.observe(percept)
        out[index, 0] = percept.reward_numerator / denominator
        for k in range(1, cycles):
            if episode.no_future_reward:
                break  # the remaining row stays exactly zero
            action = policy.act()
            percept = episode.step(action)
            policy.observe(percept)
            out[index, k] = percept.reward_numerator / denominator
    return out


def _weighted_values(agent_factory, env_model, params: ValuationParams,
                     weights: np.ndarray) -> np.ndarray:
    cycles = len(weights)
    if _use_batch(agent_factory, env_model):
        rewards = _batch_reward_values(
            agent_factory, env_model, params.episodes, cycles,
            derive_seed(params.seed, "batch", agent_factory.name, env_model.identifier))
    else:
        rewards = _scalar_reward_values(
            agent_factory, env_model, params.episodes, cycles, params.seed)
    return rewards @ weights


def discounted_value(agent_factory, env_model, params: ValuationParams) -> ValueEstimate:
    """Normalized geometric-discounted value estimate.

    The episode is truncated at the first T with tail fraction gamma^T below
    trunc_epsilon (capped by the horizon); the actual tail fraction is
    reported as the truncation bound.
    """
    if params.mode != "discounted":
        raise AgentGaugeError("params.mode must be 'discounted'")
    gamma = params.gamma
    cycles = min(params.horizon,
                 max(1, math.ceil(math.log(params.trunc_epsilon) / math.log(gamma))))
    # w_i = gamma^i / Gamma for i = 1..cycles
    weights = np.power(gamma, np.arange(1, cycles + 1)) * (1.0 - gamma) / gamma
    values = _weighted_values(agent_factory, env_model, params, weights)
    return _estimate(values, params.confidence, truncation_bound=gamma ** cycles)


def harmonic_value(agent_factory, env_model, params: ValuationParams) -> ValueEstimate:
    """Inverse-square discounted value with the analytic normalizer pi^2/6.

    The tail beyond T is below 1/T, so T is chosen with (1/T)/(pi^2/6) below
    trunc_epsilon, capped by the horizon.
    """
    if params.mode != "harmonic":
        raise AgentGaugeError("params.mode must be 'harmonic'")
    normalizer = math.pi ** 2 / 6.0
    cycles = min(params.horizon,
                 max(1, math.ceil(1.0 / (params.trunc_epsilon * normalizer))))
    t = np.arange(1, cycles + 1, dtype=np.float64)
    weights = 1.0 / (t * t) / normalizer
    values = _weighted_values(agent_factory, env_model, params, weights)
    bound = (1.0 / cycles) / normalizer
    return _estimate(values, params.confidence, truncation_bound=bound)


def summable_episode_values(agent_factory, env_model,
                            params: ValuationParams) -> tuple[np.ndarray, float, int]:
    """Per-episode total rewards for a summable environment.

    Returns (episode values, mean remaining reward bound at stop, failures).
    An episode stops once no further reward is possible, once the remaining
    reward bound drops below trunc_epsilon, or at the horizon.  Failed
    rollouts (external agents only) are excluded, not scored as zero.
    """
    if not getattr(env_model, "summable", False):
        raise SummabilityError(
            f"environment {env_model.identifier} is not reward-summable")
    denominator = env_model.space.reward_denominator
    horizon = params.horizon
    epsilon = params.trunc_epsilon
    values: list[float] = []
    remainders: list[float] = []
    failed = 0
    for index in range(params.episodes):
        policy = agent_factory.make(
            random.Random(derive_seed(params.seed, "agent", agent_factory.name,
                                      env_model.identifier, index)))
        episode = env_model.spawn(
            random.Random(derive_seed(params.seed, "env", agent_factory.name,
                                      env_model.identifier, index)))
        total = 0
        try:
            percept = episode.step(None)
            policy.observe(percept)
            total += percept.reward_numerator
            for _ in range(1, horizon):
                if episode.no_future_reward or episode.remaining_reward_bound < epsilon:
                    break
                action = policy.act()
                percept = episode.step(action)
                policy.observe(percept)
                total += percept.reward_numerator
        except RolloutFailed:
            failed += 1
            continue
        values.append(total / denominator)
        remainders.append(min(1.0, episode.remaining_reward_bound))
    if not values:
        raise RolloutFailed(
            f"all {params.episodes} rollouts failed for agent {agent_factory.name} "
            f"on {env_model.identifier}")
    mean_remaining = float(np.mean(remainders))
    return np.asarray(values), mean_remaining, failed


def summable_value(agent_factory, env_model, params: ValuationParams) -> ValueEstimate:
    """Expected total reward of a budget-constrained environment."""
    if params.mode != "summable":
        raise AgentGaugeError("params.mode must be 'summable'")
    values, mean_remaining, failed = summable_episode_values(agent_factory, env_model, params)
    bound = params.trunc_epsilon + mean_remaining
    return _estimate(values, params.confidence, truncation_bound=bound, failed=failed)


def value_estimate(agent_factory, env_model, params: ValuationParams) -> ValueEstimate:
    """Dispatch on params.mode."""
    if params.mode == "discounted":
        return discounted_value(agent_factory, env_model, params)
    if params.mode == "harmonic":
        return harmonic_value(agent_factory, env_model, params)
    return summable_value(agent_factory, env_model, params)


def per_cycle_reward_profile(agent_factory, env_model, cycles: int, episodes: int,
                             seed: int) -> np.ndarray:
    """Monte Carlo estimate of the mean reward value at each cycle 1..cycles."""
    if cycles < 1:
        raise AgentGaugeError("cycles must be >= 1")
    if _use_batch(agent_factory, env_model):
        rewards = _batch_reward_values(
            agent_factory, env_model, episodes, cycles,
            derive_seed(seed, "batch", agent_factory.name, env_model.identifier))
    else:
        rewards = _scalar_reward_values(agent_factory, env_model, episodes, cycles, seed)
    return rewards.mean(axis=0)
