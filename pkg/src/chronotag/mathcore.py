"""Deterministic numerical kernels: seeded RNG, initialization, activations,
softmax, and the Adam optimizer.

Everything here is a pure function over numpy arrays (row-major, float64
unless a caller opts into float32). All randomness flows through explicit
:class:`Rng` handles; there is no global generator.

RNG algorithm (fixed, bit-exact)
--------------------------------
``Rng`` is a counter-based SplitMix64 stream. Draw ``k`` (0-indexed) of the
stream for seed ``s`` is::

    u64(k) = mix(s + (k + 1) * 0x9E3779B97F4A7C15  mod 2**64)

where ``mix`` is the SplitMix64 finalizer (Steele, Lea & Flood 2014)::

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9   (mod 2**64)
    z ^= z >> 27;  z *= 0x94D049BB133111EB   (mod 2**64)
    z ^= z >> 31

Uniform doubles are ``(u64 >> 11) * 2**-53`` (in ``[0, 1)``). Because draws
are a pure function of ``(seed, counter)``, any prefix of the stream is
reproducible bit-for-bit on every platform. Normal deviates use Box-Muller
on top of the uniform stream; they are deterministic on a given platform
and identical across platforms up to libm rounding of exp/log/cos.

Child generators come from :meth:`Rng.fork`, which derives an independent
seed as ``mix(seed + GOLDEN * mix(key))``; string keys are hashed with
FNV-1a 64 first. Forking never consumes draws from the parent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK64 = 0xFFFFFFFFFFFFFFFF

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _mix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # branch-free SplitMix64 finalizer on uint64 arrays; multiplies wrap mod 2**64
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash; stable across runs and platforms."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


class Rng:
    """Counter-based SplitMix64 generator (see module docstring).

    State is just ``(seed, counter)``; identical seeds produce identical
    draw sequences. Handles are cheap, picklable, and must not be shared
    across threads; derive per-task children with :meth:`fork`.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK64
        self.counter = int(counter)

    def __repr__(self):
        return f"Rng(seed={self.seed:#018x}, counter={self.counter})"

    def fork(self, key: int | str) -> "Rng":
        """Derive an independent child generator without consuming draws."""
        if isinstance(key, str):
            key = fnv1a64(key.encode("utf-8"))
        child = _mix64(self.seed + _GOLDEN * _mix64(int(key) & _MASK64))
        return Rng(child)

    def next_u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit draws as a uint64 array."""
        if n < 0:
            raise ValueError(f"draw count must be >= 0, got {n}")
        ks = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        states = np.uint64(self.seed) + ks * np.uint64(_GOLDEN)
        return _mix64_array(states)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None) -> np.ndarray | float:
        """Uniform draws on ``[low, high)``; scalar when ``size`` is None."""
        shape = _as_shape(size)
        n = int(np.prod(shape)) if shape else 1
        u = (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        out = low + (high - low) * u
        if shape == ():
            return float(out[0])
        return out.reshape(shape)

    def normal(self, mean: float = 0.0, sigma: float = 1.0, size=None) -> np.ndarray | float:
        """Gaussian draws via Box-Muller on the uniform stream."""
        shape = _as_shape(size)
        n = int(np.prod(shape)) if shape else 1
        pairs = (n + 1) // 2
        # u1 in (0, 1] so log never sees zero; u2 in [0, 1)
        raw = self.next_u64(2 * pairs)
        u1 = ((raw[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[pairs:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        out = mean + sigma * z
        if shape == ():
            return float(out[0])
        return out.reshape(shape)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform random permutation of ``range(n)`` (random-key argsort)."""
        return np.argsort(self.next_u64(n), kind="stable")

    def shuffled(self, items: list) -> list:
        """New list with the items in a seed-determined random order."""
        return [items[i] for i in self.permutation(len(items))]

    def sample_indices(self, n: int, k: int) -> np.ndarray:
        """``k`` indices drawn from ``range(n)`` without replacement."""
        if k > n:
            raise ValueError(f"cannot sample {k} of {n} without replacement")
        return self.permutation(n)[:k]

    def randint(self, n: int) -> int:
        """One integer uniform on ``[0, n)``."""
        if n <= 0:
            raise ValueError(f"randint bound must be positive, got {n}")
        return int(self.uniform() * n)


def _as_shape(size) -> tuple:
    if size is None:
        return ()
    if isinstance(size, (int, np.integer)):
        return (int(size),)
    return tuple(int(s) for s in size)


def xavier_init(rows: int, cols: int, rng: Rng) -> np.ndarray:
    """Glorot-uniform matrix: i.i.d. uniform on [-L, L], L = sqrt(6/(rows+cols))."""
    if rows < 1 or cols < 1:
        raise ValueError(f"xavier_init needs positive dims, got {rows}x{cols}")
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Logistic function, overflow-safe for any finite input."""
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def tanh(x: np.ndarray) -> np.ndarray:
    return np.tanh(np.asarray(x, dtype=np.float64))


def stable_softmax(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, computed with max-subtraction.

    Output entries are positive and sum to 1 within 1e-12 per row.
    Empty or non-finite input raises ValueError.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0 or z.shape[-1] == 0:
        raise ValueError("softmax of empty input")
    if not np.isfinite(z).all():
        raise ValueError("softmax input contains NaN or Inf")
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Log of :func:`stable_softmax`, without the intermediate ratio."""
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0 or z.shape[-1] == 0:
        raise ValueError("softmax of empty input")
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


@dataclass
class AdamState:
    """Optimizer state for one parameter array.

    Moment buffers are allocated lazily on the first step so the state can
    be declared before parameter shapes are known.
    """

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = field(default=0)
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)


def adam_step(params: np.ndarray, grads: np.ndarray, state: AdamState) -> np.ndarray:
    """One bias-corrected Adam update, applied to ``params`` in place.

    Uses the standard form: ``p -= lr * m_hat / (sqrt(v_hat) + eps)``.
    """
    if params.shape != grads.shape:
        raise ValueError(f"param/grad shape mismatch: {params.shape} vs {grads.shape}")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    elif state.m.shape != params.shape:
        raise ValueError(f"state/param shape mismatch: {state.m.shape} vs {params.shape}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1**state.t)
    v_hat = state.v / (1.0 - state.beta2**state.t)
    params -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def sgd_step(params: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
    """Plain gradient-descent update, in place (ablation alternative to Adam)."""
    if params.shape != grads.shape:
        raise ValueError(f"param/grad shape mismatch: {params.shape} vs {grads.shape}")
    params -= lr * grads
    return params
