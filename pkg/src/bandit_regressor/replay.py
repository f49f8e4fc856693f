"""Ring-buffer experience storage with proportional prioritized sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn_core import ContractError


@dataclass(frozen=True)
class Transition:
    """One bandit interaction. There is deliberately no next-state field."""

    state: np.ndarray
    raw_x: float
    action: float
    reward: float
    target_y: float


@dataclass
class TransitionBatch:
    states: np.ndarray
    raw_x: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    target_y: np.ndarray

    def __len__(self) -> int:
        return len(self.rewards)

    def __getitem__(self, i: int) -> Transition:
        return Transition(
            self.states[i].copy(),
            float(self.raw_x[i]),
            float(self.actions[i]),
            float(self.rewards[i]),
            float(self.target_y[i]),
        )


@dataclass(frozen=True)
class PerConfig:
    alpha: float = 0.6
    beta_start: float = 0.4
    beta_end: float = 1.0
    epsilon_priority: float = 1e-3
    capacity: int = 10_000

    def __post_init__(self):
        if self.alpha < 0:
            raise ContractError("alpha must be >= 0")
        if not (0.0 <= self.beta_start <= self.beta_end <= 1.0):
            raise ContractError("need 0 <= beta_start <= beta_end <= 1")
        if not self.epsilon_priority > 0:
            raise ContractError("epsilon_priority must be positive")
        if self.capacity < 1:
            raise ContractError("capacity must be positive")


class SumTree:
    """Array-backed complete binary tree of non-negative priorities.

    Node 1 is the root, node ``i`` has children ``2i`` and ``2i + 1``, and leaf
    ``j`` lives at node ``n_leaves + j``. Internal nodes are always recomputed
    as the exact sum of their two children, never adjusted by deltas.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ContractError("capacity must be positive")
        self.capacity = int(capacity)
        self.n_leaves = 1 << max(0, (self.capacity - 1).bit_length())
        self.nodes = np.zeros(2 * self.n_leaves)

    @property
    def total(self) -> float:
        return float(self.nodes[1])

    def leaves(self) -> np.ndarray:
        return self.nodes[self.n_leaves : self.n_leaves + self.capacity]

    def get(self, indices) -> np.ndarray:
        return self.nodes[self.n_leaves + np.asarray(indices)]

    def update(self, indices, priorities) -> None:
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        pri = np.broadcast_to(np.asarray(priorities, dtype=np.float64), idx.shape)
        if idx.size == 0:
            return
        if idx.min() < 0 or idx.max() >= self.capacity:
            raise ContractError(f"leaf index out of range [0, {self.capacity})")
        if not (np.isfinite(pri).all() and (pri >= 0).all()):
            raise ContractError("priorities must be finite and non-negative")
        # last write wins for duplicated indices, matching sequential assignment
        self.nodes[self.n_leaves + idx] = pri
        nodes = np.unique((self.n_leaves + idx) >> 1)
        while nodes.size and nodes[0] >= 1:
            self.nodes[nodes] = self.nodes[2 * nodes] + self.nodes[2 * nodes + 1]
            if nodes[0] == 1:
                break
            nodes = np.unique(nodes >> 1)

    def find(self, values) -> np.ndarray:
        """Leaf indices whose cumulative-priority interval contains each value.

        Never descends into a zero-mass subtree, so float round-off at the
        right edge cannot select a leaf with priority 0.
        """
        v = np.array(values, dtype=np.float64, ndmin=1)
        node = np.ones(v.shape, dtype=np.int64)
        while node[0] < self.n_leaves:
            left = 2 * node
            lsum = self.nodes[left]
            go_right = (v >= lsum) & (self.nodes[left + 1] > 0)
            v = np.where(go_right, v - lsum, v)
            node = np.where(go_right, left + 1, left)
        return node - self.n_leaves


class ReplayBuffer:
    """Fixed-capacity FIFO store with a sum tree over transition priorities.

    Both uniform and prioritized sampling are available on the same buffer;
    priorities are maintained either way.
    """

    def __init__(self, state_dim: int, per: PerConfig | None = None):
        self.per = per or PerConfig()
        self.capacity = self.per.capacity
        self.state_dim = int(state_dim)
        self.tree = SumTree(self.capacity)
        self.states = np.zeros((self.capacity, self.state_dim))
        self.raw_x = np.zeros(self.capacity)
        self.actions = np.zeros(self.capacity)
        self.rewards = np.zeros(self.capacity)
        self.target_y = np.zeros(self.capacity)
        self.size = 0
        self.cursor = 0
        self.max_priority = 1.0

    def __len__(self) -> int:
        return self.size

    def push(self, t: Transition) -> int:
        """Store ``t`` at the cursor with the current max priority; returns its slot."""
        return int(self.push_many(np.asarray(t.state)[None, :], [t.raw_x], [t.action], [t.reward], [t.target_y])[0])

    def push_many(self, states, raw_x, actions, rewards, target_y) -> np.ndarray:
        states = np.asarray(states, dtype=np.float64)
        if states.ndim != 2 or states.shape[1] != self.state_dim:
            raise ContractError(f"states must have shape (n, {self.state_dim}), got {states.shape}")
        n = states.shape[0]
        raw_x, actions, rewards, target_y = (
            np.broadcast_to(np.asarray(a, dtype=np.float64), (n,)) for a in (raw_x, actions, rewards, target_y)
        )
        if n > self.capacity:
            # only the last `capacity` rows would survive sequential pushes
            skip = n - self.capacity
            self.cursor = (self.cursor + skip) % self.capacity
            self.size = self.capacity
            states, raw_x, actions, rewards, target_y = (
                a[skip:] for a in (states, raw_x, actions, rewards, target_y)
            )
            n = self.capacity
        slots = (self.cursor + np.arange(n)) % self.capacity
        self.states[slots] = states
        self.raw_x[slots] = raw_x
        self.actions[slots] = actions
        self.rewards[slots] = rewards
        self.target_y[slots] = target_y
        self.tree.update(slots, self.max_priority)
        self.cursor = int((self.cursor + n) % self.capacity)
        self.size = min(self.capacity, self.size + n)
        return slots

    def gather(self, indices) -> TransitionBatch:
        idx = np.asarray(indices)
        return TransitionBatch(
            self.states[idx], self.raw_x[idx], self.actions[idx], self.rewards[idx], self.target_y[idx]
        )

    def probabilities(self) -> np.ndarray:
        """Current sampling probability of each stored slot."""
        leaves = self.tree.leaves()[: self.size]
        return leaves / leaves.sum()

    def sample(self, batch: int, beta: float, rng: np.random.Generator):
        """Stratified proportional sample.

        Returns ``(indices, transitions, is_weights)`` where the weights are
        ``(N * P(i)) ** -beta`` divided by their batch maximum.
        """
        if self.size == 0:
            raise ContractError("cannot sample from an empty buffer")
        if batch < 1:
            raise ContractError("batch must be positive")
        total = self.tree.total
        segment = total / batch
        u = (np.arange(batch) + rng.random(batch)) * segment
        idx = self.tree.find(np.minimum(u, np.nextafter(total, 0.0)))
        probs = self.tree.get(idx) / total
        w = (self.size * probs) ** (-beta)
        w /= w.max()
        return idx, self.gather(idx), w

    def sample_uniform(self, batch: int, rng: np.random.Generator):
        if self.size == 0:
            raise ContractError("cannot sample from an empty buffer")
        if batch < 1:
            raise ContractError("batch must be positive")
        idx = rng.integers(0, self.size, size=batch)
        return idx, self.gather(idx), np.ones(batch)

    def set_priorities(self, indices, priorities) -> None:
        """Write raw leaf priorities (already exponentiated) and track their max."""
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        if idx.size and (idx.min() < 0 or idx.max() >= self.size):
            raise ContractError(f"index out of range for buffer of size {self.size}")
        pri = np.broadcast_to(np.asarray(priorities, dtype=np.float64), idx.shape)
        self.tree.update(idx, pri)
        if pri.size:
            self.max_priority = max(self.max_priority, float(pri.max()))

    def update_priorities(self, indices, new_errors) -> None:
        """Set priority ``(|error| + eps) ** alpha`` for each index."""
        err = np.abs(np.asarray(new_errors, dtype=np.float64))
        if not np.isfinite(err).all():
            raise ContractError("errors must be finite")
        self.set_priorities(indices, (err + self.per.epsilon_priority) ** self.per.alpha)
