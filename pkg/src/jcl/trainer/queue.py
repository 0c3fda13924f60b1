from __future__ import annotations

import numpy as np


class NegativeQueue:
    """Fixed-capacity FIFO of key vectors backed by a ring buffer."""

    def __init__(self, capacity: int, dim: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.dim = dim
        self.buffer = np.zeros((capacity, dim))
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, items) -> int:
        """Append rows in order, evicting the oldest; returns the number evicted."""
        items = np.asarray(items, dtype=np.float64).reshape(-1, self.dim)
        n = items.shape[0]
        if n == 0:
            return 0
        evicted = max(0, self.size + n - self.capacity)
        if n > self.capacity:
            items = items[-self.capacity:]
        idx = (self.ptr + np.arange(items.shape[0])) % self.capacity
        self.buffer[idx] = items
        self.ptr = int((self.ptr + items.shape[0]) % self.capacity)
        self.size = min(self.size + n, self.capacity)
        return evicted

    def contents(self) -> np.ndarray:
        """Stored rows, oldest first."""
        if self.size < self.capacity:
            return self.buffer[: self.size].copy()
        return np.concatenate([self.buffer[self.ptr:], self.buffer[: self.ptr]])

    def negatives(self) -> np.ndarray:
        """Stored rows in buffer order; cheaper than ``contents`` and order-free for the loss."""
        return self.buffer if self.size == self.capacity else self.buffer[: self.size]

    def copy(self) -> "NegativeQueue":
        q = NegativeQueue(self.capacity, self.dim)
        q.buffer = self.buffer.copy()
        q.ptr, q.size = self.ptr, self.size
        return q


def queue_push(queue: NegativeQueue, means) -> NegativeQueue:
    queue.push(means)
    return queue
