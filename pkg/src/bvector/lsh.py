"""Random-hyperplane (sign of random projection) binary embedding.

Hyperplanes are drawn with numpy's ``PCG64`` bit generator seeded directly
with the model seed, using ``Generator.standard_normal`` (ziggurat) in
row-major ``(nbits, dim_in)`` order. The same ``(seed, dim_in, nbits)``
always yields the same matrix for a given numpy release, so a model can be
stored either as its seed or as the full matrix.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidConfig
from .vecspace import CodeArray

SEED_MAX = 2**64 - 1


def gaussian_matrix(seed, rows, cols):
    """The i.i.d. N(0, 1) matrix shared by LSH sampling and full-model init."""
    return np.random.Generator(np.random.PCG64(check_seed(seed))).standard_normal((rows, cols))


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise InvalidConfig(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def sign_bits(x, weights, bias=None):
    """0/1 matrix ``[x @ weights.T + bias >= 0]`` for a 2-D batch ``x``."""
    act = x @ weights.T
    if bias is not None:
        act = act + bias
    return act >= 0.0


def as_batch(x, dim_in):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim_in:
        raise DimensionMismatch(f"expected vectors of length {dim_in}, got shape {x.shape}")
    return x, single


@dataclass(frozen=True, eq=False)
class RandomHyperplaneModel:
    planes: np.ndarray = field(repr=False)
    dim_in: int
    nbits: int
    seed: int

    def __post_init__(self):
        planes = np.array(self.planes, dtype=np.float64)
        if planes.shape != (self.nbits, self.dim_in):
            raise InvalidConfig(f"planes shape {planes.shape} != ({self.nbits}, {self.dim_in})")
        if not np.all(np.isfinite(planes)):
            raise InvalidConfig("planes contain non-finite values")
        planes.flags.writeable = False
        object.__setattr__(self, "planes", planes)

    kind = "lsh"

    def encode(self, x):
        return encode(self, x)

    def encode_batch(self, x):
        return encode_batch(self, x)


def sample_model(dim_in, nbits, seed=0):
    """Draw ``nbits`` Gaussian hyperplanes in ``dim_in`` dimensions."""
    if dim_in < 1 or nbits < 1:
        raise InvalidConfig(f"dim_in and nbits must be >= 1, got {dim_in}, {nbits}")
    seed = check_seed(seed)
    return RandomHyperplaneModel(gaussian_matrix(seed, nbits, dim_in), dim_in, nbits, seed)


def encode_batch(model, x):
    """Encode every row of ``x``; returns a :class:`CodeArray`."""
    x, _ = as_batch(x, model.dim_in)
    return CodeArray.from_bits(sign_bits(x, model.planes))


def encode(model, x):
    """Bit j is 1 iff ``planes[j] . x >= 0``."""
    x, single = as_batch(x, model.dim_in)
    if not single:
        raise DimensionMismatch("encode takes one vector; use encode_batch")
    return encode_batch(model, x)[0]


def collision_probability(theta):
    """Probability that one random hyperplane puts two vectors at angle ``theta`` on the same side."""
    theta = float(theta)
    if not 0.0 <= theta <= math.pi:
        raise InvalidConfig(f"theta must lie in [0, pi], got {theta}")
    return 1.0 - theta / math.pi
