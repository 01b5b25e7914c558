"""Seed derivation for reproducible trials.

Every random stream is a numpy ``Generator`` driven by PCG64.  Streams are
derived from the master seed through ``SeedSequence`` spawn keys, so trial
``k`` sees the same stream whether trials run serially, in parallel, or one
at a time.
"""
import numpy as np

RNG_ALGORITHM = "numpy PCG64 seeded by SeedSequence(entropy=master_seed, spawn_key=keys)"

# first spawn key: namespaces that keep independent uses of one master seed apart
STREAM_TRUE_STATE = 0
STREAM_SHOTS = 1
STREAM_FIT = 2
STREAM_VALIDATION = 3


def as_generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _sequence(master_seed, keys):
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))


def derive_rng(master_seed, *keys):
    return np.random.Generator(np.random.PCG64(_sequence(master_seed, keys)))


def derive_seed(master_seed, *keys):
    """A 64-bit integer seed for the stream ``keys`` (recorded in outputs)."""
    return int(_sequence(master_seed, keys).generate_state(1, dtype=np.uint64)[0])
