"""Deterministic random field over space-time.

Every random quantity in this package is a pure function of
(master seed, trial index, stream, vertex, counter), derived through a
chain of splitmix64 finalizers.  No generator state exists anywhere, so any
point can be queried in any order, any number of times, from any number of
workers, and coupled processes literally share values by construction.

Streams keep the independent families of driving variables apart: "L" for
the per-step uniforms of the synchronous processes, "init" for initial
configurations, "poisc"/"poist" for clock counts and event times, "fau"
for resampling uniforms.

The scalar implementation here is plain Python integers; _kernels.py holds
the same chain in compiled form and a test pins bit equality.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_CV = 0xD1342543DE82EF95
_CT = 0x2545F4914F6CDD1D
_INV53 = 2.0 ** -53

STREAMS = {"L": 0x01, "init": 0x02, "poisc": 0x03, "poist": 0x04, "fau": 0x05}

PROCESS_KINDS = ("bp", "cp", "nmvp")


def mix64(z: int) -> int:
    z = (z + _GOLD) & _MASK
    z ^= z >> 30
    z = (z * _M1) & _MASK
    z ^= z >> 27
    z = (z * _M2) & _MASK
    return z ^ (z >> 31)


def mix64_np(z: np.ndarray) -> np.ndarray:
    z = z + np.uint64(_GOLD)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def _to_unit(h: int) -> float:
    return (h >> 11) * _INV53


class Mark(NamedTuple):
    """Outcome of a space-time point: rule applies, or noise overrides."""
    kind: str          # "update" | "noise"
    value: int | None  # forced state for noise points


class RandomField:
    """Seed- and trial-scoped view of the field.

    Coupled processes must share one RandomField instance (or equal seed and
    trial); independent Monte Carlo trials take for_trial(i).
    """

    def __init__(self, master_seed: int, trial: int = 0):
        self.master_seed = master_seed & _MASK
        self.trial = int(trial)
        k = mix64(self.master_seed)
        self._bases = {
            name: mix64(mix64(k ^ salt) ^ ((self.trial + 1) * _GOLD & _MASK))
            for name, salt in STREAMS.items()
        }

    def for_trial(self, trial: int) -> "RandomField":
        return RandomField(self.master_seed, trial)

    def base(self, stream: str = "L") -> np.uint64:
        """Stream key in the form the compiled kernels take."""
        return np.uint64(self._bases[stream])

    # scalar access

    def uniform_at(self, x: int, t: int, stream: str = "L") -> float:
        vk = mix64(self._bases[stream] ^ ((x + 1) * _CV & _MASK))
        return _to_unit(mix64(vk ^ (t * _CT & _MASK)))

    # vectorized access

    def vertex_keys(self, n: int, stream: str = "L") -> np.ndarray:
        v = np.arange(1, n + 1, dtype=np.uint64)
        return mix64_np(np.uint64(self._bases[stream]) ^ v * np.uint64(_CV))

    def uniform_row(self, n: int, t: int, stream: str = "L") -> np.ndarray:
        """Uniforms for all vertices at one time step."""
        h = mix64_np(self.vertex_keys(n, stream)
                     ^ np.uint64(t * _CT & _MASK))
        return (h >> np.uint64(11)).astype(np.float64) * _INV53

    def init_uniforms(self, n: int) -> np.ndarray:
        """Per-vertex uniforms for sampling initial configurations (t = 0)."""
        return self.uniform_row(n, 0, stream="init")

    # continuous-time clocks

    def poisson_clock(self, x: int, horizon: float
                      ) -> tuple[np.ndarray, np.ndarray]:
        """Event times of a rate-1 clock at x on [0, horizon], sorted, with
        the per-event resampling uniform attached to each event."""
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if horizon == 0:
            return np.empty(0), np.empty(0)
        count = _poisson_icdf(self.uniform_at(x, 0, stream="poisc"), horizon)
        if count == 0:
            return np.empty(0), np.empty(0)
        times = horizon * np.array(
            [self.uniform_at(x, k, stream="poist") for k in range(1, count + 1)])
        us = np.array(
            [self.uniform_at(x, k, stream="fau") for k in range(1, count + 1)])
        order = np.argsort(times, kind="stable")
        return times[order], us[order]


def _poisson_icdf(u: float, mu: float) -> int:
    p = np.exp(-mu)
    cdf = p
    k = 0
    while u >= cdf and k < 100000:
        k += 1
        p *= mu / k
        cdf += p
    return k


# free-function forms of the accessors

def uniform_at(field: RandomField, x: int, t: int) -> float:
    if t < 1:
        raise ValueError("dynamics steps start at t = 1")
    return field.uniform_at(x, t)


def poisson_clock(field: RandomField, x: int, horizon: float):
    return field.poisson_clock(x, horizon)


def classify_point(u: float, eps: float, process: str) -> Mark:
    """Update-or-noise decision for one uniform.

    The threshold process and the noisy-bootstrap process have one-sided
    noise (forced zero); the majority process splits its noise band evenly
    between the two forced values.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValueError("noise level must lie in [0, 1]")
    if process not in PROCESS_KINDS:
        raise ValueError(f"unknown process kind {process!r}")
    if u >= eps:
        return Mark("update", None)
    if process == "nmvp":
        return Mark("noise", 0 if u < 0.5 * eps else 1)
    return Mark("noise", 0)
