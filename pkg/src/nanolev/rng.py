"""Counter-based Gaussian noise keyed by (seed, stream, index).

Each standard normal is a pure function of its key and index: the Philox
counter supplies four 64-bit words per block, consecutive words are paired
through Box-Muller, and any window ``[start, start + count)`` can be produced
without generating what comes before it. Chunked and one-shot generation are
therefore bit-identical, and independent streams (one per axis, one for the
detector) never overlap.
"""
import numpy as np

_MASK64 = (1 << 64) - 1
_WORDS_PER_BLOCK = 4

# stream identifiers
AXIS_STREAMS = (0, 1, 2)
SHOT_NOISE_STREAM = 16
RECOIL_STREAMS = (32, 33, 34)


def _generator(seed, stream):
    return np.random.Philox(key=[int(seed) & _MASK64, int(stream) & _MASK64])


def standard_normals(seed, stream, start, count):
    """``count`` standard normals starting at index ``start`` of the stream."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be >= 0")
    if count == 0:
        return np.empty(0)
    block0 = start // _WORDS_PER_BLOCK
    lead = start - block0 * _WORDS_PER_BLOCK
    n_words = lead + count
    n_words += (-n_words) % _WORDS_PER_BLOCK
    bitgen = _generator(seed, stream)
    bitgen.advance(block0)
    raw = bitgen.random_raw(n_words)
    # 53-bit uniforms on the open interval (0, 1)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(n_words)
    out[0::2] = r * np.cos(2.0 * np.pi * u2)
    out[1::2] = r * np.sin(2.0 * np.pi * u2)
    return out[lead:lead + count]
