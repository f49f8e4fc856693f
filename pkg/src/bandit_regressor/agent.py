"""Deterministic actor and Q-critic trained as a one-step contextual bandit.

The critic regresses Q(s, a) directly onto the immediate reward (no
discounting, no target networks). The actor climbs the critic's action
gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn_core
from .env import Featurizer, RewardKernel, featurize
from .nn_core import AdamState, ContractError, MlpParams, MlpSpec, NonFiniteError, OutputActivation
from .replay import ReplayBuffer


@dataclass
class CriticReport:
    loss: float
    residuals: np.ndarray  # |Q(s, a) - r| before the step


@dataclass
class UpdateReport:
    critic_loss: float
    actor_loss: float
    mean_batch_reward: float
    mean_abs_critic_residual: float


class ActorCritic:
    """Actor pi(s) -> (-1, 1) and critic Q(s, a), each with its own Adam state."""

    def __init__(
        self,
        state_dim: int,
        actor_hidden=(128, 64),
        critic_hidden=(128, 64),
        actor_lr: float = 1e-4,
        critic_lr: float = 1e-3,
        exploration_noise_std: float = 0.1,
        seed: int | np.random.SeedSequence = 0,
        init_scheme: str = "he",
    ):
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        actor_seed, critic_seed = ss.spawn(2)
        self.actor_spec = MlpSpec(state_dim, tuple(actor_hidden), 1, OutputActivation.TANH)
        self.critic_spec = MlpSpec(state_dim + 1, tuple(critic_hidden), 1, OutputActivation.LINEAR)
        self.actor = nn_core.init_params(self.actor_spec, np.random.default_rng(actor_seed), init_scheme)
        self.critic = nn_core.init_params(self.critic_spec, np.random.default_rng(critic_seed), init_scheme)
        self.actor_opt = AdamState.for_arrays(self.actor.arrays(), lr=actor_lr)
        self.critic_opt = AdamState.for_arrays(self.critic.arrays(), lr=critic_lr)
        if exploration_noise_std < 0:
            raise ContractError("exploration_noise_std must be non-negative")
        self.exploration_noise_std = float(exploration_noise_std)

    @property
    def state_dim(self) -> int:
        return self.actor_spec.input_dim

    def _states(self, states) -> tuple[np.ndarray, bool]:
        s = np.asarray(states, dtype=np.float64)
        single = s.ndim == 1
        if single:
            s = s[None, :]
        if s.ndim != 2 or s.shape[1] != self.state_dim:
            raise ContractError(f"state dimension {s.shape[-1]} does not match actor input {self.state_dim}")
        return s, single

    def act(self, states):
        """Deterministic prediction for one state (returns float) or a batch (returns 1-d array)."""
        s, single = self._states(states)
        out, _ = nn_core.forward(self.actor_spec, self.actor, s)
        return float(out[0, 0]) if single else out[:, 0]

    def act_explore(self, states, rng: np.random.Generator):
        """``act`` plus Gaussian noise, clipped to [-1, 1]."""
        s, single = self._states(states)
        a = np.atleast_1d(self.act(s))
        if self.exploration_noise_std > 0:
            a = a + rng.normal(0.0, self.exploration_noise_std, size=a.shape)
        a = np.clip(a, -1.0, 1.0)
        return float(a[0]) if single else a

    def q_values(self, states, actions) -> np.ndarray:
        s, _ = self._states(states)
        sa = np.column_stack([s, np.asarray(actions, dtype=np.float64).reshape(-1)])
        out, _ = nn_core.forward(self.critic_spec, self.critic, sa)
        return out[:, 0]

    def critic_loss_and_grads(self, states, actions, rewards, weights=None):
        """Weighted MSE ``mean(w * (Q - r)^2)`` and its parameter gradients."""
        s, _ = self._states(states)
        a = np.asarray(actions, dtype=np.float64).reshape(-1)
        r = np.asarray(rewards, dtype=np.float64).reshape(-1)
        n = len(r)
        if n == 0 or len(a) != n or s.shape[0] != n:
            raise ContractError("critic batch must be non-empty with matching lengths")
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(w) != n:
            raise ContractError("weights must match batch length")
        if not (np.isfinite(s).all() and np.isfinite(a).all() and np.isfinite(r).all() and np.isfinite(w).all()):
            raise NonFiniteError("non-finite critic batch")
        q, trace = nn_core.forward(self.critic_spec, self.critic, np.column_stack([s, a]))
        diff = q[:, 0] - r
        loss = float(np.mean(w * diff * diff))
        grads, _ = nn_core.backward(self.critic_spec, self.critic, trace, (2.0 / n * w * diff)[:, None])
        return loss, grads, np.abs(diff)

    def critic_update(self, states, actions, rewards, weights=None) -> CriticReport:
        loss, grads, residuals = self.critic_loss_and_grads(states, actions, rewards, weights)
        if not np.isfinite(loss):
            raise NonFiniteError("non-finite critic loss")
        nn_core.adam_step(self.critic.arrays(), grads.arrays(), self.critic_opt)
        return CriticReport(loss, residuals)

    def actor_loss_and_grads(self, states) -> tuple[float, MlpParams]:
        """``-mean Q(s, pi(s))`` and its gradient w.r.t. actor parameters only."""
        s, _ = self._states(states)
        if s.shape[0] == 0:
            raise ContractError("actor batch must be non-empty")
        n = s.shape[0]
        a, a_trace = nn_core.forward(self.actor_spec, self.actor, s)
        q, q_trace = nn_core.forward(self.critic_spec, self.critic, np.column_stack([s, a]))
        loss = -float(np.mean(q))
        _, d_input = nn_core.backward(self.critic_spec, self.critic, q_trace, np.full((n, 1), -1.0 / n))
        grads, _ = nn_core.backward(self.actor_spec, self.actor, a_trace, d_input[:, -1:])
        return loss, grads

    def actor_update(self, states) -> float:
        loss, grads = self.actor_loss_and_grads(states)
        if not np.isfinite(loss):
            raise NonFiniteError("non-finite actor loss")
        nn_core.adam_step(self.actor.arrays(), grads.arrays(), self.actor_opt)
        return loss

    def train_step(
        self,
        buffer: ReplayBuffer,
        kernel: RewardKernel,
        xs,
        ys,
        featurizer: Featurizer,
        per_enabled: bool,
        beta: float,
        rng: np.random.Generator,
        batch_size: int = 64,
        is_weighted_critic: bool = True,
        updates: int = 1,
    ) -> UpdateReport:
        """Interact on a minibatch of dataset points, store the results, then learn.

        Each point is featurized, answered with an exploratory action, rewarded
        and pushed. Then ``updates`` times: sample ``batch_size`` transitions,
        update the critic, refresh priorities (PER only), update the actor.
        """
        xs = np.asarray(xs, dtype=np.float64).reshape(-1)
        ys = np.asarray(ys, dtype=np.float64).reshape(-1)
        states = featurize(featurizer, xs)
        actions = self.act_explore(states, rng)
        rewards = kernel(actions, ys)
        buffer.push_many(states, xs, actions, rewards, ys)

        critic_losses, actor_losses, residual_means = [], [], []
        for _ in range(updates):
            if per_enabled:
                idx, batch, w = buffer.sample(batch_size, beta, rng)
                if not is_weighted_critic:
                    w = np.ones_like(w)
            else:
                idx, batch, w = buffer.sample_uniform(batch_size, rng)
            report = self.critic_update(batch.states, batch.actions, batch.rewards, w)
            if per_enabled:
                buffer.update_priorities(idx, report.residuals)
            actor_losses.append(self.actor_update(batch.states))
            critic_losses.append(report.loss)
            residual_means.append(float(report.residuals.mean()))
        return UpdateReport(
            critic_loss=float(np.mean(critic_losses)),
            actor_loss=float(np.mean(actor_losses)),
            mean_batch_reward=float(np.mean(rewards)),
            mean_abs_critic_residual=float(np.mean(residual_means)),
        )
