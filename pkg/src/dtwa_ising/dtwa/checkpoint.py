"""Binary checkpoints of accumulated ensemble moments.

Layout (all integers unsigned little-endian, all floats little-endian
IEEE 754 doubles)::

    offset  size  field
    0       8     magic  b"DTWACKPT"
    8       4     format version (1)
    12      4     reserved, zero
    16      32    sha256 of the run identity (spec, order, scheme, R, tol, ...)
    48      8     seed
    56      8     trajectories completed
    64      8     number of output times T
    72      8     number of features K
    80      T     float64 valid-trajectory count per time
    ...     T*K   float64 running mean, row-major (time, feature)
    ...     T*K   float64 running sum of squared deviations (M2)

Only whole chunks are ever recorded, so a resumed run continues from the
next chunk boundary and reproduces an uninterrupted run bit for bit.
"""

from __future__ import annotations

import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"DTWACKPT"
VERSION = 1
_HEADER = struct.Struct("<8sII32sQQQQ")


class CheckpointError(ValueError):
    """Checkpoint is corrupt or belongs to a different run."""


def run_digest(identity: str) -> bytes:
    return hashlib.sha256(identity.encode()).digest()


@dataclass
class Moments:
    """Per-time running count, mean and M2 of a feature vector."""

    count: np.ndarray
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def empty(cls, n_times: int, n_features: int) -> "Moments":
        return cls(np.zeros(n_times), np.zeros((n_times, n_features)), np.zeros((n_times, n_features)))

    @classmethod
    def from_samples(cls, values: np.ndarray, valid: np.ndarray) -> "Moments":
        """Moments of ``values`` ``(T, B, K)`` over rows where ``valid`` ``(T, B)`` holds."""
        w = valid[:, :, None]
        count = valid.sum(axis=1).astype(float)
        safe = np.where(w, values, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = np.where(count[:, None] > 0, safe.sum(axis=1) / count[:, None], 0.0)
        dev = np.where(w, values - mean[:, None, :], 0.0)
        return cls(count, mean, (dev * dev).sum(axis=1))

    def merge(self, other: "Moments") -> "Moments":
        """Chan et al. pairwise combination; ``self`` is the earlier block."""
        na, nb = self.count[:, None], other.count[:, None]
        n = na + nb
        with np.errstate(invalid="ignore", divide="ignore"):
            delta = other.mean - self.mean
            frac = np.where(n > 0, nb / n, 0.0)
            mean = self.mean + delta * frac
            m2 = self.m2 + other.m2 + delta * delta * np.where(n > 0, na * nb / n, 0.0)
        return Moments(self.count + other.count, mean, m2)

    def stderr(self) -> np.ndarray:
        n = self.count[:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            var = np.where(n > 1, self.m2 / (n - 1), np.nan)
            return np.sqrt(var / n)


def save_checkpoint(path: str | Path, digest: bytes, seed: int, completed: int, moments: Moments) -> None:
    path = Path(path)
    t, k = moments.mean.shape
    header = _HEADER.pack(MAGIC, VERSION, 0, digest, seed, completed, t, k)
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in (moments.count, moments.mean, moments.m2)
    )
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(header + payload)
    os.replace(tmp, path)


def load_checkpoint(path: str | Path, digest: bytes, seed: int) -> tuple[int, Moments]:
    """Return ``(trajectories completed, moments)``; raise if the file belongs to another run."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CheckpointError("checkpoint truncated")
    magic, version, _, stored, stored_seed, completed, t, k = _HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise CheckpointError("not a checkpoint file of a supported version")
    if stored != digest:
        raise CheckpointError("checkpoint was written by a different run configuration")
    if stored_seed != seed:
        raise CheckpointError(f"checkpoint seed {stored_seed} differs from requested seed {seed}")
    expected = _HEADER.size + 8 * (t + 2 * t * k)
    if len(data) != expected:
        raise CheckpointError(f"checkpoint has {len(data)} bytes, expected {expected}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    count = body[:t].copy()
    mean = body[t : t + t * k].reshape(t, k).copy()
    m2 = body[t + t * k :].reshape(t, k).copy()
    return completed, Moments(count, mean, m2)
