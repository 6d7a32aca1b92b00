"""Counter-based random streams.

Every path owns one Philox stream per block tag. The stream is addressed by
``key = (seed, tag)`` and ``counter = path_index << 128``, so the normals drawn
for path ``i`` never depend on how paths are split across chunks or workers.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

TAG_JOINT = 1  # (W, W^H) block
TAG_B = 2  # independent Brownian motion B
TAG_AUX = 3  # auxiliary draws (exact-maximum samplers etc.)

_MASK64 = (1 << 64) - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise InvalidArgument(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def path_generator(seed: int, path_index: int, tag: int) -> np.random.Generator:
    """Generator for a single (seed, path, tag) substream."""
    key = np.array([check_seed(seed), tag], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=int(path_index) << 128))


def path_normals(seed: int, tag: int, start: int, stop: int, size: int) -> np.ndarray:
    """Standard normals of shape ``(stop - start, size)``; row ``k`` is path ``start + k``.

    Row ``k`` equals ``path_generator(seed, start + k, tag).standard_normal(size)``.
    The bit generator is re-keyed in place instead of rebuilt per path.
    """
    key = np.array([check_seed(seed), tag], dtype=np.uint64)
    bitgen = np.random.Philox(key=key)
    gen = np.random.Generator(bitgen)
    state = bitgen.state
    counter = state["state"]["counter"]
    out = np.empty((stop - start, size))
    for row, path in enumerate(range(start, stop)):
        counter[:] = 0
        counter[2] = path & _MASK64
        counter[3] = path >> 64
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        bitgen.state = state
        out[row] = gen.standard_normal(size)
    return out


def derive_seed(seed: int, *labels: int) -> int:
    """Child seed for an independent sub-experiment (a scan row, a training batch)."""
    ss = np.random.SeedSequence([check_seed(seed), *[int(v) for v in labels]])
    return int(ss.generate_state(1, np.uint64)[0])
