"""Seeded Rayleigh-fading sample sets used as a sample-average approximation
of every expectation over the link gain |h|^2 and the interference gain |g|^2.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FadingConfig",
    "ChannelSampleSet",
    "draw_samples",
    "expectation",
    "save_samples",
    "load_samples",
]


@dataclass(frozen=True)
class FadingConfig:
    mean_gain_h: float = 1.0
    mean_gain_g: float = 1.0
    n_samples: int = 10_000
    seed: int = 42

    def __post_init__(self):
        if not (self.mean_gain_h > 0 and self.mean_gain_g > 0):
            raise ValueError("mean fading gains must be positive")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


class ChannelSampleSet:
    """Joint realizations of (|h|^2, |g|^2), each with weight 1/n.

    The arrays are made read-only so a set can be shared between solves.
    """

    def __init__(self, gains_h, gains_g):
        gains_h = np.array(gains_h, dtype=float)
        gains_g = np.array(gains_g, dtype=float)
        if gains_h.ndim != 1 or gains_h.shape != gains_g.shape:
            raise ValueError("gains_h and gains_g must be 1-D arrays of equal length")
        if gains_h.size == 0:
            raise ValueError("a sample set needs at least one realization")
        if np.any(gains_h < 0) or np.any(gains_g < 0):
            raise ValueError("power gains must be nonnegative")
        gains_h.flags.writeable = False
        gains_g.flags.writeable = False
        self.gains_h = gains_h
        self.gains_g = gains_g

    def __len__(self):
        return self.gains_h.size

    def __repr__(self):
        return f"ChannelSampleSet(n={len(self)})"

    def __eq__(self, other):
        if not isinstance(other, ChannelSampleSet):
            return NotImplemented
        return (np.array_equal(self.gains_h, other.gains_h)
                and np.array_equal(self.gains_g, other.gains_g))

    @classmethod
    def single(cls, gain_h, gain_g=1.0):
        """A deterministic one-point set, e.g. a fixed-gain link."""
        return cls([gain_h], [gain_g])


def draw_samples(cfg: FadingConfig) -> ChannelSampleSet:
    """Draw i.i.d. exponential power gains (Rayleigh amplitudes).

    |h|^2 and |g|^2 come from two independent child streams of the seed, so
    changing ``mean_gain_g`` never perturbs the |h|^2 draws.
    """
    stream_h, stream_g = np.random.SeedSequence(int(cfg.seed)).spawn(2)
    n = int(cfg.n_samples)
    gains_h = np.random.default_rng(stream_h).exponential(cfg.mean_gain_h, n)
    gains_g = np.random.default_rng(stream_g).exponential(cfg.mean_gain_g, n)
    return ChannelSampleSet(gains_h, gains_g)


def expectation(samples: ChannelSampleSet, f) -> float:
    """Sample average of ``f(|h|^2, |g|^2)`` over the set.

    ``f`` is called once with the full gain arrays and must broadcast; a
    scalar return is treated as a constant. The reduction is a plain
    left-to-right sum so the result does not depend on array chunking.
    """
    values = np.broadcast_to(
        np.asarray(f(samples.gains_h, samples.gains_g), dtype=float),
        samples.gains_h.shape,
    )
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise FloatingPointError(
            f"non-finite integrand at sample index {int(bad[0])}: {values[bad[0]]!r}")
    return _ordered_mean(values)


def _ordered_mean(values):
    # fsum is exactly rounded, hence independent of summation order
    return math.fsum(values.tolist()) / values.size


def save_samples(samples: ChannelSampleSet, path) -> None:
    """Write the set as CSV with header ``h2,g2``; floats round-trip exactly."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["h2", "g2"])
        for h2, g2 in zip(samples.gains_h.tolist(), samples.gains_g.tolist()):
            writer.writerow([repr(h2), repr(g2)])


def load_samples(path) -> ChannelSampleSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["h2", "g2"]:
            raise ValueError(f"{path}: expected header 'h2,g2', got {header!r}")
        rows = [(float(a), float(b)) for a, b in reader]
    if not rows:
        raise ValueError(f"{path}: no samples")
    h2, g2 = zip(*rows)
    return ChannelSampleSet(h2, g2)
