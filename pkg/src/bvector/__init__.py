"""Binary speaker embedding: LSH and learned Hamming hashing of speaker vectors."""

from ._kernels import BACKEND
from .errors import (
    BVectorError,
    CorruptModel,
    DegenerateInput,
    DimensionMismatch,
    InvalidConfig,
    MissingVector,
    NumericalFailure,
    ParseError,
)
from .hamlearn import (
    BitAllocation,
    BlockDiagonalModel,
    FullLinearModel,
    TrainConfig,
    Triplet,
    TripletSet,
    allocate_bits,
    train_block,
    train_full,
)
from .lsh import RandomHyperplaneModel, collision_probability, sample_model
from .vecspace import BinaryCode, CodeArray, angle_between, cosine, hamming, normalize, pack, unpack

__version__ = "0.1.0"
