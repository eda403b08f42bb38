"""Dense-vector and packed binary-code primitives.

Codes are stored as little-endian ``uint64`` words: logical bit ``i`` is bit
``i % 64`` of word ``i // 64``. Pad bits above ``nbits`` in the last word are
always zero, so word equality is logical equality and XOR+popcount needs no
masking.
"""

import numpy as np

from . import _kernels
from .errors import DegenerateInput, DimensionMismatch, InvalidConfig

WORD_BITS = 64


def as_vector(v):
    """Return ``v`` as a 1-D finite float64 array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise InvalidConfig("expected a non-empty 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidConfig("vector contains NaN or inf")
    return arr


def normalize(v):
    """Scale ``v`` to unit Euclidean norm."""
    arr = as_vector(v)
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise DegenerateInput("cannot normalize the zero vector")
    return arr / norm


def normalize_rows(x):
    """Row-wise :func:`normalize` for a 2-D array."""
    x = np.asarray(x, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise DegenerateInput("cannot normalize a zero row")
    return x / norms


def cosine(a, b):
    """Cosine similarity ``a.b / (|a||b|)``, clipped to [-1, 1]."""
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"lengths {a.shape[0]} and {b.shape[0]} differ")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInput("cosine of a zero vector is undefined")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def angle_between(a, b):
    """Angle in radians in [0, pi]."""
    return float(np.arccos(np.clip(cosine(a, b), -1.0, 1.0)))


def n_words(nbits):
    return (nbits + WORD_BITS - 1) // WORD_BITS


def pack_rows(bits):
    """Pack an ``(n, nbits)`` 0/1 array into ``(n, n_words)`` uint64 words."""
    bits = np.asarray(bits)
    if bits.ndim != 2:
        raise InvalidConfig("pack_rows expects a 2-D array")
    n, nbits = bits.shape
    if nbits < 1:
        raise InvalidConfig("a code needs at least one bit")
    nw = n_words(nbits)
    packed = np.packbits(bits.astype(bool), axis=1, bitorder="little")
    padded = np.zeros((n, nw * 8), dtype=np.uint8)
    padded[:, : packed.shape[1]] = packed
    return padded.view("<u8").astype(np.uint64)


def unpack_rows(words, nbits):
    """Inverse of :func:`pack_rows`; returns uint8 0/1 of shape ``(n, nbits)``."""
    words = np.ascontiguousarray(words, dtype="<u8")
    as_bytes = words.view(np.uint8).reshape(words.shape[0], -1)
    return np.unpackbits(as_bytes, axis=1, count=nbits, bitorder="little")


class BinaryCode:
    """Immutable fixed-width bit string."""

    __slots__ = ("_words", "_nbits")

    def __init__(self, words, nbits):
        nbits = int(nbits)
        if nbits < 1:
            raise InvalidConfig("a code needs at least one bit")
        words = np.array(words, dtype=np.uint64).reshape(-1)
        if words.shape[0] != n_words(nbits):
            raise InvalidConfig(f"{nbits} bits need {n_words(nbits)} words, got {words.shape[0]}")
        tail = nbits % WORD_BITS
        if tail and int(words[-1]) >> tail:
            raise InvalidConfig("pad bits beyond nbits must be zero")
        words.flags.writeable = False
        self._words = words
        self._nbits = nbits

    @property
    def words(self):
        return self._words

    @property
    def nbits(self):
        return self._nbits

    def __len__(self):
        return self._nbits

    def __eq__(self, other):
        if not isinstance(other, BinaryCode):
            return NotImplemented
        return self._nbits == other._nbits and np.array_equal(self._words, other._words)

    def __hash__(self):
        return hash((self._nbits, self._words.tobytes()))

    def __repr__(self):
        return f"BinaryCode(nbits={self._nbits}, hex={self.hex()!r})"

    def hex(self):
        """Little-endian byte dump of the words."""
        return self._words.astype("<u8").tobytes().hex()

    @classmethod
    def from_hex(cls, text, nbits):
        raw = bytes.fromhex(text)
        if len(raw) != 8 * n_words(nbits):
            raise InvalidConfig("hex length does not match nbits")
        return cls(np.frombuffer(raw, dtype="<u8"), nbits)


def pack(bits):
    """Build a :class:`BinaryCode` from a sequence of 0/1 values."""
    arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise InvalidConfig("pack needs a non-empty 1-D bit sequence")
    if not np.all((arr == 0) | (arr == 1)):
        raise InvalidConfig("bits must be 0 or 1")
    return BinaryCode(pack_rows(arr[None, :])[0], arr.shape[0])


def unpack(code):
    """Return the logical bits of ``code`` as a list of ints."""
    return unpack_rows(code.words[None, :], code.nbits)[0].tolist()


def hamming(a, b):
    """Number of bit positions where ``a`` and ``b`` differ."""
    if a.nbits != b.nbits:
        raise DimensionMismatch(f"code widths {a.nbits} and {b.nbits} differ")
    return int(np.bitwise_count(a.words ^ b.words).sum())


class CodeArray:
    """A stack of equal-width codes stored as an ``(n, n_words)`` word matrix."""

    __slots__ = ("words", "nbits")

    def __init__(self, words, nbits):
        words = np.ascontiguousarray(words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[1] != n_words(nbits):
            raise InvalidConfig("word matrix shape does not match nbits")
        self.words = words
        self.nbits = int(nbits)

    @classmethod
    def from_bits(cls, bits):
        bits = np.asarray(bits)
        return cls(pack_rows(bits), bits.shape[1])

    @classmethod
    def from_codes(cls, codes):
        codes = list(codes)
        if not codes:
            raise InvalidConfig("need at least one code")
        nbits = codes[0].nbits
        if any(c.nbits != nbits for c in codes):
            raise DimensionMismatch("codes have mixed widths")
        return cls(np.stack([c.words for c in codes]), nbits)

    def __len__(self):
        return self.words.shape[0]

    def __getitem__(self, i):
        return BinaryCode(self.words[i], self.nbits)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def bits(self):
        return unpack_rows(self.words, self.nbits)

    def signs(self):
        """The +/-1 real expansion (0 -> -1, 1 -> +1)."""
        return 2.0 * self.bits().astype(np.float64) - 1.0


def hamming_scan(gallery, probe):
    """Distances from one probe code to every row of a :class:`CodeArray`."""
    if gallery.nbits != probe.nbits:
        raise DimensionMismatch(f"code widths {gallery.nbits} and {probe.nbits} differ")
    return _kernels.hamming_scan(gallery.words, np.ascontiguousarray(probe.words))


def hamming_matrix(probes, gallery):
    """All-pairs distances, shape ``(len(probes), len(gallery))``."""
    if gallery.nbits != probes.nbits:
        raise DimensionMismatch(f"code widths {gallery.nbits} and {probes.nbits} differ")
    return _kernels.hamming_matrix(probes.words, gallery.words)
