"""Learned linear hashing with a triplet Hamming hinge loss.

Two model families share the loss:

* :class:`FullLinearModel` -- ``b x D`` weights, bit ``j`` is
  ``[w_j . x >= 0]``. Initialised from the same Gaussian stream as
  :func:`bvector.lsh.sample_model`, so an untrained model *is* the LSH model.
* :class:`BlockDiagonalModel` -- input dimension ``i`` owns ``T_i`` bits, each
  a learned threshold ``[w_ij * x_i + c_ij >= 0]``. ``T_i`` descends linearly
  with ``i`` (see :func:`allocate_bits`) and every block is trained on its own.

Training minimises a smooth surrogate of the binarized objective: codes are
replaced by ``tanh(beta * activation)`` in {-1, 1}-space and the Hamming
distance by ``(B - u.v) / 2``. Mini-batch SGD with a constant step size
follows the per-sample gradient ``mean(grad hinge) + (lambda / N) * theta``,
which is ``grad L / N`` in expectation.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, InvalidConfig, NumericalFailure
from .lsh import as_batch, check_seed, sign_bits
from .vecspace import CodeArray, hamming

log = logging.getLogger(__name__)


# -- bit allocation -------------------------------------------------------------


@dataclass(frozen=True)
class BitAllocation:
    counts: tuple
    nominal_bits: int
    actual_bits: int

    @property
    def dim_in(self):
        return len(self.counts)

    def offsets(self):
        """Start index of each block in the concatenated code (length D + 1)."""
        return np.concatenate([[0], np.cumsum(self.counts)]).astype(np.int64)


def allocate_bits(dim_in, nbits):
    """Linearly descending per-dimension bit counts.

    ``T_i = ceil(2 b (D + 1 - i) / (D (D + 1)))`` for ``i = 1..D``, computed
    in exact integer arithmetic. The real-valued counts sum to ``b``; the
    ceil can push the total up by less than ``D``.
    """
    if dim_in < 1 or nbits < 1:
        raise InvalidConfig(f"dim_in and nbits must be >= 1, got {dim_in}, {nbits}")
    den = dim_in * (dim_in + 1)
    counts = tuple(-(-2 * nbits * (dim_in + 1 - i) // den) for i in range(1, dim_in + 1))
    return BitAllocation(counts, nbits, sum(counts))


# -- data containers ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Triplet:
    anchor: np.ndarray
    positive: np.ndarray
    negative: np.ndarray
    anchor_label: str = None
    negative_label: str = None


class TripletSet:
    """Triplets stored column-wise as three ``(n, D)`` arrays."""

    def __init__(self, anchors, positives, negatives, anchor_labels=None, negative_labels=None):
        self.anchors = np.asarray(anchors, dtype=np.float64)
        self.positives = np.asarray(positives, dtype=np.float64)
        self.negatives = np.asarray(negatives, dtype=np.float64)
        shape = self.anchors.shape
        if self.anchors.ndim != 2 or self.positives.shape != shape or self.negatives.shape != shape:
            raise DimensionMismatch("anchor/positive/negative arrays must share shape (n, D)")
        self.anchor_labels = anchor_labels
        self.negative_labels = negative_labels

    @classmethod
    def from_triplets(cls, triplets, dim=None):
        if isinstance(triplets, TripletSet):
            return triplets
        triplets = list(triplets)
        if not triplets:
            d = 0 if dim is None else dim
            empty = np.empty((0, d))
            return cls(empty, empty, empty)
        try:
            return cls(
                np.stack([t.anchor for t in triplets]),
                np.stack([t.positive for t in triplets]),
                np.stack([t.negative for t in triplets]),
                [t.anchor_label for t in triplets],
                [t.negative_label for t in triplets],
            )
        except ValueError as exc:
            raise DimensionMismatch(str(exc)) from None

    @property
    def dim(self):
        return self.anchors.shape[1]

    def __len__(self):
        return self.anchors.shape[0]

    def __getitem__(self, i):
        al = self.anchor_labels[i] if self.anchor_labels is not None else None
        nl = self.negative_labels[i] if self.negative_labels is not None else None
        return Triplet(self.anchors[i], self.positives[i], self.negatives[i], al, nl)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def subset(self, idx):
        pick = (lambda seq: None if seq is None else [seq[i] for i in idx])
        return TripletSet(self.anchors[idx], self.positives[idx], self.negatives[idx],
                          pick(self.anchor_labels), pick(self.negative_labels))


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-4
    learning_rate: float = 1.0
    epochs: int = 10
    batch_size: int = 64
    margin: float = 1.0
    relaxation_beta: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidConfig("lambda must be nonnegative")
        if not self.learning_rate > 0:
            raise InvalidConfig("learning_rate must be positive")
        if self.epochs < 0:
            raise InvalidConfig("epochs must be nonnegative")
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be positive")
        if not self.margin > 0:
            raise InvalidConfig("margin must be positive")
        if not self.relaxation_beta > 0:
            raise InvalidConfig("relaxation_beta must be positive")
        check_seed(self.seed)


# -- models ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FullLinearModel:
    weights: np.ndarray = field(repr=False)
    dim_in: int
    nbits: int
    seed: int = 0

    kind = "full"

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.shape != (self.nbits, self.dim_in):
            raise InvalidConfig(f"weights shape {w.shape} != ({self.nbits}, {self.dim_in})")
        if not np.all(np.isfinite(w)):
            raise InvalidConfig("weights contain non-finite values")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    def param_norm_sq(self):
        return float(np.sum(self.weights**2))

    def encode_batch(self, x):
        x, _ = as_batch(x, self.dim_in)
        return CodeArray.from_bits(sign_bits(x, self.weights))

    def encode(self, x):
        return _encode_one(self, x)


@dataclass(frozen=True, eq=False)
class BlockDiagonalModel:
    """``blocks[i]`` is a ``(T_i, 2)`` array of (weight, bias) rows for input ``i``."""

    blocks: tuple = field(repr=False)
    allocation: BitAllocation
    seed: int = 0

    kind = "block"

    def __post_init__(self):
        blocks = []
        if len(self.blocks) != self.allocation.dim_in:
            raise InvalidConfig(f"{len(self.blocks)} blocks for {self.allocation.dim_in} dimensions")
        for i, (blk, t) in enumerate(zip(self.blocks, self.allocation.counts)):
            blk = np.array(blk, dtype=np.float64)
            if blk.shape != (t, 2):
                raise InvalidConfig(f"block {i} has shape {blk.shape}, expected ({t}, 2)")
            if not np.all(np.isfinite(blk)):
                raise InvalidConfig(f"block {i} has non-finite parameters")
            blk.flags.writeable = False
            blocks.append(blk)
        object.__setattr__(self, "blocks", tuple(blocks))
        flat = np.concatenate(blocks) if blocks else np.empty((0, 2))
        object.__setattr__(self, "_w", flat[:, 0].copy())
        object.__setattr__(self, "_c", flat[:, 1].copy())
        object.__setattr__(
            self, "_dims", np.repeat(np.arange(len(blocks)), self.allocation.counts)
        )

    @property
    def dim_in(self):
        return self.allocation.dim_in

    @property
    def nbits(self):
        return self.allocation.actual_bits

    def param_norm_sq(self):
        return float(np.sum(self._w**2) + np.sum(self._c**2))

    def activations(self, x):
        x, _ = as_batch(x, self.dim_in)
        return x[:, self._dims] * self._w + self._c

    def encode_batch(self, x):
        return CodeArray.from_bits(self.activations(x) >= 0.0)

    def encode(self, x):
        return _encode_one(self, x)


def _encode_one(model, x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch("encode takes one vector; use encode_batch")
    return model.encode_batch(x[None, :])[0]


def encode_block(model, x):
    """Bits of dimension ``i`` are ``[w_ij x_i + c_ij >= 0]``, concatenated in dimension order."""
    return model.encode(x)


# -- losses ----------------------------------------------------------------------


def triplet_loss(h, hp, hn, margin=1.0):
    """``max(0, d(h, h+) - d(h, h-) + margin)`` with Hamming ``d``."""
    return max(0.0, hamming(h, hp) - hamming(h, hn) + margin)


def soft_hamming(u, v):
    """``(B - u.v) / 2``; equals the Hamming distance for +/-1 vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatch(f"shapes {u.shape} and {v.shape} differ")
    return float((u.shape[0] - np.dot(u, v)) / 2.0)


def _check_dims(model, triplets):
    if len(triplets) and triplets.dim != model.dim_in:
        raise DimensionMismatch(f"model expects D={model.dim_in}, triplets have D={triplets.dim}")


def objective(model, triplets, lam, margin=1.0):
    """Binarized training objective: summed hinge losses on codes plus ``lam/2 |theta|^2``."""
    triplets = TripletSet.from_triplets(triplets, model.dim_in)
    _check_dims(model, triplets)
    total = 0.0
    if len(triplets):
        ca = model.encode_batch(triplets.anchors)
        cp = model.encode_batch(triplets.positives)
        cn = model.encode_batch(triplets.negatives)
        dp = np.bitwise_count(ca.words ^ cp.words).sum(axis=1, dtype=np.int64)
        dn = np.bitwise_count(ca.words ^ cn.words).sum(axis=1, dtype=np.int64)
        total = float(np.maximum(0.0, dp - dn + margin).sum())
    return total + 0.5 * lam * model.param_norm_sq()


def _relaxed_parts(model, triplets, beta):
    """Soft codes for the three roles plus what is needed to back-propagate."""
    if isinstance(model, FullLinearModel):
        acts = [x @ model.weights.T for x in (triplets.anchors, triplets.positives, triplets.negatives)]
    else:
        acts = [model.activations(x) for x in (triplets.anchors, triplets.positives, triplets.negatives)]
    return [np.tanh(beta * z) for z in acts]


def relaxed_objective(model, triplets, lam, margin=1.0, beta=2.0):
    """The smooth surrogate that training descends.

    For a full model the hinge covers the whole code. For a block model the
    hinge is applied per block (each block is its own problem) and summed.
    """
    triplets = TripletSet.from_triplets(triplets, model.dim_in)
    _check_dims(model, triplets)
    reg = 0.5 * lam * model.param_norm_sq()
    if not len(triplets):
        return reg
    ua, up, un = _relaxed_parts(model, triplets, beta)
    s = _hinge_args(model, ua * (un - up), margin)
    return float(np.maximum(s, 0.0).sum()) + reg


def _hinge_args(model, prod, margin):
    if isinstance(model, FullLinearModel):
        return 0.5 * prod.sum(axis=1, keepdims=True) + margin
    starts = model.allocation.offsets()[:-1]
    return 0.5 * np.add.reduceat(prod, starts, axis=1) + margin


def relaxed_gradient(model, triplets, lam, margin=1.0, beta=2.0):
    """Gradient of :func:`relaxed_objective` in the model's parameter layout.

    Full model: a ``(b, D)`` array. Block model: a list of ``(T_i, 2)`` arrays.
    """
    triplets = TripletSet.from_triplets(triplets, model.dim_in)
    _check_dims(model, triplets)
    if isinstance(model, FullLinearModel):
        grad = lam * model.weights
        if not len(triplets):
            return grad
        ua, up, un = _relaxed_parts(model, triplets, beta)
        active = _hinge_args(model, ua * (un - up), margin) > 0.0
        ga = active * 0.5 * (un - up) * beta * (1.0 - ua**2)
        gp = active * -0.5 * ua * beta * (1.0 - up**2)
        gn = active * 0.5 * ua * beta * (1.0 - un**2)
        return grad + ga.T @ triplets.anchors + gp.T @ triplets.positives + gn.T @ triplets.negatives

    gw = lam * model._w
    gc = lam * model._c
    if len(triplets):
        ua, up, un = _relaxed_parts(model, triplets, beta)
        active = _hinge_args(model, ua * (un - up), margin) > 0.0
        active = np.repeat(active, model.allocation.counts, axis=1)
        ga = active * 0.5 * (un - up) * beta * (1.0 - ua**2)
        gp = active * -0.5 * ua * beta * (1.0 - up**2)
        gn = active * 0.5 * ua * beta * (1.0 - un**2)
        dims = model._dims
        gw = gw + (ga * triplets.anchors[:, dims] + gp * triplets.positives[:, dims]
                   + gn * triplets.negatives[:, dims]).sum(axis=0)
        gc = gc + (ga + gp + gn).sum(axis=0)
    offs = model.allocation.offsets()
    return [np.stack([gw[a:b], gc[a:b]], axis=1) for a, b in zip(offs[:-1], offs[1:])]


# -- training --------------------------------------------------------------------


def _prepare(triplets, dim_in, nbits, cfg):
    triplets = TripletSet.from_triplets(triplets, dim_in)
    if not len(triplets):
        raise InvalidConfig("cannot train on an empty triplet set")
    if triplets.dim != dim_in:
        raise DimensionMismatch(f"triplets have D={triplets.dim}, expected {dim_in}")
    if nbits < 1:
        raise InvalidConfig("nbits must be >= 1")
    return triplets, cfg if cfg is not None else TrainConfig()


def _train_one_block(i, t, xa, xp, xn, cfg):
    rng = np.random.default_rng([cfg.seed, i])
    w = rng.standard_normal(t)
    c = np.zeros(t)
    n = xa.shape[0]
    order = np.empty((cfg.epochs, n), dtype=np.int64)
    for e in range(cfg.epochs):
        order[e] = rng.permutation(n)
    with np.errstate(over="ignore", invalid="ignore"):
        losses = _kernels.block_sgd(
            xa, xp, xn, w, c, order,
            float(cfg.learning_rate), float(cfg.lam) / n, float(cfg.relaxation_beta),
            float(cfg.margin), int(cfg.batch_size),
        )
    bad = np.flatnonzero(~np.isfinite(losses))
    if bad.size or not (np.all(np.isfinite(w)) and np.all(np.isfinite(c))):
        epoch = int(bad[0]) if bad.size else cfg.epochs - 1
        raise NumericalFailure(
            f"non-finite loss in block {i} at epoch {epoch}", epoch=epoch, block=i
        )
    return np.stack([w, c], axis=1), losses


def train_block(triplets, dim_in, nbits, cfg=None, workers=1):
    """Variable-sized block training: one independent threshold learner per input dimension.

    Block ``i`` draws its initial weights and its epoch shuffles from a
    generator seeded with ``(cfg.seed, i)``, so the result does not depend on
    ``workers``.
    """
    triplets, cfg = _prepare(triplets, dim_in, nbits, cfg)
    alloc = allocate_bits(dim_in, nbits)
    cols = [
        (np.ascontiguousarray(triplets.anchors[:, i]),
         np.ascontiguousarray(triplets.positives[:, i]),
         np.ascontiguousarray(triplets.negatives[:, i]))
        for i in range(dim_in)
    ]

    def job(i):
        return _train_one_block(i, alloc.counts[i], *cols[i], cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(dim_in)))
    else:
        results = [job(i) for i in range(dim_in)]
    if cfg.epochs:
        final = sum(r[1][-1] for r in results)
        log.debug("block training: %d blocks, last-epoch hinge sum %.4g", dim_in, final)
    return BlockDiagonalModel(tuple(r[0] for r in results), alloc, cfg.seed)


def train_full(triplets, dim_in, nbits, cfg=None, history=None):
    """Jointly train a ``b x D`` sign-linear hash on the relaxed objective.

    The weights start as the LSH matrix for ``cfg.seed``; shuffles continue
    from the same generator. If ``history`` is a list, the relaxed objective
    on the training set is appended after initialisation and after each epoch.
    """
    triplets, cfg = _prepare(triplets, dim_in, nbits, cfg)
    seed = check_seed(cfg.seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    w = rng.standard_normal((nbits, dim_in))
    xa, xp, xn = triplets.anchors, triplets.positives, triplets.negatives
    n = xa.shape[0]
    beta, margin = cfg.relaxation_beta, cfg.margin
    reg = cfg.lam / n

    def snapshot():
        return relaxed_objective(FullLinearModel(w, dim_in, nbits, seed), triplets, cfg.lam, margin, beta)

    if history is not None:
        history.append(snapshot())
    # divergence is reported as NumericalFailure below, not as numpy warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(cfg.epochs):
            perm = rng.permutation(n)
            for start in range(0, n, cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                a, p, q = xa[idx], xp[idx], xn[idx]
                ua = np.tanh(beta * (a @ w.T))
                up = np.tanh(beta * (p @ w.T))
                un = np.tanh(beta * (q @ w.T))
                active = (0.5 * (ua * (un - up)).sum(axis=1, keepdims=True) + margin) > 0.0
                ga = active * 0.5 * (un - up) * beta * (1.0 - ua**2)
                gp = active * -0.5 * ua * beta * (1.0 - up**2)
                gn = active * 0.5 * ua * beta * (1.0 - un**2)
                grad = ga.T @ a + gp.T @ p + gn.T @ q
                w -= cfg.learning_rate * (grad / idx.shape[0] + reg * w)
            if not np.all(np.isfinite(w)):
                raise NumericalFailure(f"non-finite weights at epoch {epoch}", epoch=epoch)
            if history is not None:
                history.append(snapshot())
    return FullLinearModel(w, dim_in, nbits, seed)
