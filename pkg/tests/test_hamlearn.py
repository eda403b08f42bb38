import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bvector import _kernels, hamlearn, lsh
from bvector.errors import DimensionMismatch, InvalidConfig, NumericalFailure
from bvector.hamlearn import (
    BlockDiagonalModel,
    FullLinearModel,
    TrainConfig,
    Triplet,
    TripletSet,
    allocate_bits,
    objective,
    relaxed_gradient,
    relaxed_objective,
    soft_hamming,
    triplet_loss,
)
from bvector.vecspace import pack, unpack

from conftest import fd_relative_error


def ceil_oracle(dim_in, nbits, i):
    return math.ceil(Fraction(2 * nbits * (dim_in + 1 - i), dim_in * (dim_in + 1)))


def random_triplets(rng, n, dim):
    return TripletSet(*(rng.standard_normal((n, dim)) for _ in range(3)))


def random_block_model(rng, dim, nbits):
    alloc = allocate_bits(dim, nbits)
    blocks = tuple(rng.standard_normal((t, 2)) for t in alloc.counts)
    return BlockDiagonalModel(blocks, alloc)


# -- allocation ----------------------------------------------------------------


@pytest.mark.parametrize(
    "dim_in, nbits, counts, actual",
    [(4, 10, (4, 3, 2, 1), 10), (3, 3, (2, 1, 1), 4), (1, 7, (7,), 7)],
)
def test_allocate_examples(dim_in, nbits, counts, actual):
    alloc = allocate_bits(dim_in, nbits)
    assert alloc.counts == counts
    assert alloc.actual_bits == actual
    assert alloc.nominal_bits == nbits


def test_allocate_150_900():
    counts = allocate_bits(150, 900).counts
    assert counts[0] == 12
    assert counts[-1] == 1


@given(st.integers(1, 500), st.integers(1, 5000))
def test_allocate_matches_rational_ceil(dim_in, nbits):
    alloc = allocate_bits(dim_in, nbits)
    assert alloc.counts == tuple(ceil_oracle(dim_in, nbits, i) for i in range(1, dim_in + 1))
    assert list(alloc.counts) == sorted(alloc.counts, reverse=True)
    assert nbits <= alloc.actual_bits < nbits + dim_in
    assert all(t >= 1 for t in alloc.counts)


def test_allocate_offsets():
    assert allocate_bits(4, 10).offsets().tolist() == [0, 4, 7, 9, 10]


@pytest.mark.parametrize("dim_in, nbits", [(0, 3), (3, 0)])
def test_allocate_rejects(dim_in, nbits):
    with pytest.raises(InvalidConfig):
        allocate_bits(dim_in, nbits)


# -- losses ----------------------------------------------------------------------


def test_triplet_loss_examples():
    h = pack([0] * 5)
    assert triplet_loss(h, h, pack([1] * 5)) == 0.0
    hp = pack([1, 0, 1, 0, 0])
    assert triplet_loss(h, hp, hp) == 1.0
    assert triplet_loss(pack([0, 0, 0]), pack([1, 1, 1]), pack([1, 0, 0])) == 3.0


def test_soft_hamming_examples():
    assert soft_hamming([1, 1, 1, 1], [1, 1, 1, 1]) == 0.0
    assert soft_hamming([1, -1, 1, -1], [-1, 1, -1, 1]) == 4.0


@pytest.mark.parametrize("nbits", range(1, 9))
def test_soft_hamming_exhaustive(nbits):
    for a in range(2**nbits):
        bits_a = [(a >> k) & 1 for k in range(nbits)]
        for b in range(0, 2**nbits, max(1, 2 ** (nbits - 4))):
            bits_b = [(b >> k) & 1 for k in range(nbits)]
            u = [2 * x - 1 for x in bits_a]
            v = [2 * x - 1 for x in bits_b]
            assert soft_hamming(u, v) == sum(x != y for x, y in zip(bits_a, bits_b))


def test_soft_hamming_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        soft_hamming([1, 1], [1, 1, 1])


# -- encoding --------------------------------------------------------------------


def test_block_boundary_bits():
    alloc = allocate_bits(1, 1)
    assert unpack(BlockDiagonalModel(([[1.0, 0.0]],), alloc).encode([0.0])) == [1]
    assert unpack(BlockDiagonalModel(([[-1.0, 0.5]],), alloc).encode([1.0])) == [0]


def test_block_encode_hand_oracle():
    alloc = allocate_bits(3, 6)
    assert alloc.counts == (3, 2, 1)
    blocks = (
        [[1.0, -0.2], [1.0, 0.0], [-2.0, 0.5]],
        [[0.5, 0.1], [-1.0, -0.3]],
        [[3.0, 1.0]],
    )
    model = BlockDiagonalModel(blocks, alloc)
    x = [0.1, -0.4, -0.5]
    expected = []
    for xi, blk in zip(x, blocks):
        expected += [int(w * xi + c >= 0) for w, c in blk]
    assert expected == [0, 1, 1, 0, 1, 0]
    assert unpack(model.encode(x)) == expected
    assert model.encode(x) == hamlearn.encode_block(model, x)


def test_block_model_validates_shapes():
    alloc = allocate_bits(2, 3)
    with pytest.raises(InvalidConfig):
        BlockDiagonalModel((np.zeros((2, 2)),), alloc)
    with pytest.raises(InvalidConfig):
        BlockDiagonalModel((np.zeros((1, 2)), np.zeros((1, 2))), alloc)
    with pytest.raises(InvalidConfig):
        BlockDiagonalModel((np.full((2, 2), np.nan), np.zeros((1, 2))), alloc)


def test_encode_dimension_mismatch():
    model = random_block_model(np.random.default_rng(0), 4, 8)
    with pytest.raises(DimensionMismatch):
        model.encode(np.zeros(3))


# -- objective ---------------------------------------------------------------------


def test_objective_empty_is_regularizer(rng):
    model = random_block_model(rng, 3, 6)
    empty = TripletSet(np.empty((0, 3)), np.empty((0, 3)), np.empty((0, 3)))
    assert objective(model, empty, lam=0.3) == pytest.approx(0.15 * model.param_norm_sq())
    full = FullLinearModel(rng.standard_normal((4, 3)), 3, 4)
    assert objective(full, [], lam=2.0) == pytest.approx(np.sum(full.weights**2))


def test_objective_equal_distances_gives_margin(rng):
    model = FullLinearModel(rng.standard_normal((8, 5)), 5, 8)
    x = rng.standard_normal((6, 5))
    y = rng.standard_normal((6, 5))
    trips = TripletSet(x, y, y)
    assert objective(model, trips, lam=0.0) == 6.0


def test_objective_hand_oracle():
    weights = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    model = FullLinearModel(weights, 2, 3)
    trips = [
        Triplet(np.array([1.0, 1.0]), np.array([1.0, 0.5]), np.array([-1.0, -1.0])),
        Triplet(np.array([1.0, -2.0]), np.array([-1.0, 2.0]), np.array([1.0, -1.0])),
        Triplet(np.array([-1.0, 1.0]), np.array([1.0, 1.0]), np.array([-1.0, 1.0])),
    ]
    # codes: (1,1,1) (1,1,1) (0,0,0) -> max(0, 0-3+1) = 0
    #        (1,0,0) (0,1,1) (1,0,1) -> max(0, 3-1+1) = 3
    #        (0,1,1) (1,1,1) (0,1,1) -> max(0, 1-0+1) = 2
    lam = 0.5
    assert objective(model, trips, lam) == pytest.approx(5.0 + 0.25 * 4.0)


def test_relaxed_objective_approaches_binary(rng):
    model = FullLinearModel(rng.standard_normal((16, 6)), 6, 16)
    trips = random_triplets(rng, 40, 6)
    hard = objective(model, trips, lam=0.1)
    soft = relaxed_objective(model, trips, lam=0.1, beta=1e4)
    assert soft == pytest.approx(hard, rel=1e-3)


def test_relaxed_block_objective_sums_per_block_hinges(rng):
    model = random_block_model(rng, 3, 6)
    trips = random_triplets(rng, 5, 3)
    total = 0.0
    beta = 1.5
    for tr in trips:
        a, p, n = tr.anchor, tr.positive, tr.negative
        for i, blk in enumerate(model.blocks):
            ua, up, un = (np.tanh(beta * (blk[:, 0] * v[i] + blk[:, 1])) for v in (a, p, n))
            total += max(0.0, soft_hamming(ua, up) - soft_hamming(ua, un) + 1.0)
    total += 0.5 * 0.2 * model.param_norm_sq()
    assert relaxed_objective(model, trips, lam=0.2, beta=beta) == pytest.approx(total, rel=1e-12)


# -- gradient --------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_gradient_full_fd(seed):
    rng = np.random.default_rng(seed)
    model = FullLinearModel(rng.standard_normal((5, 3)), 3, 5)
    assert fd_relative_error(model, random_triplets(rng, 8, 3)) <= 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_gradient_block_fd(seed):
    rng = np.random.default_rng(100 + seed)
    model = random_block_model(rng, 3, 6)
    assert fd_relative_error(model, random_triplets(rng, 8, 3)) <= 1e-4


def test_gradient_is_list_for_block(rng):
    model = random_block_model(rng, 4, 10)
    grads = relaxed_gradient(model, random_triplets(rng, 3, 4), 0.1)
    assert [g.shape for g in grads] == [(4, 2), (3, 2), (2, 2), (1, 2)]


@pytest.mark.parametrize("backend", ["numpy", "numba"])
def test_one_kernel_step_is_gradient_step(rng, backend):
    if backend == "numba" and not _kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    kernel = getattr(_kernels, f"block_sgd_{backend}")
    n, t, lam, lr, beta = 12, 4, 0.3, 0.05, 1.7
    xa, xp, xn = (rng.standard_normal(n) for _ in range(3))
    w, c = rng.standard_normal(t), rng.standard_normal(t)
    model = BlockDiagonalModel((np.stack([w, c], axis=1),), allocate_bits(1, t))
    trips = TripletSet(xa[:, None], xp[:, None], xn[:, None])
    grad = relaxed_gradient(model, trips, lam, beta=beta)[0]
    order = np.arange(n, dtype=np.int64)[None, :]
    kernel(xa, xp, xn, w, c, order, lr, lam / n, beta, 1.0, n)
    np.testing.assert_allclose(w, model.blocks[0][:, 0] - lr / n * grad[:, 0], rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(c, model.blocks[0][:, 1] - lr / n * grad[:, 1], rtol=1e-12, atol=1e-14)


# -- training --------------------------------------------------------------------


def _speaker_triplets(n, seed):
    """2-D data: dimension 0 separates two speakers, dimension 1 is noise."""
    rng = np.random.default_rng(seed)
    spk = rng.integers(2, size=n)
    centre = np.where(spk == 0, -1.0, 1.0)

    def draw(c):
        return np.stack([c + 0.3 * rng.standard_normal(n), rng.standard_normal(n)], axis=1)

    return TripletSet(draw(centre), draw(centre), draw(-centre))


def test_block_epochs_zero_is_init():
    trips = _speaker_triplets(50, 0)
    cfg = TrainConfig(epochs=0, seed=5)
    model = hamlearn.train_block(trips, 2, 6, cfg)
    for i, blk in enumerate(model.blocks):
        w0 = np.random.default_rng([5, i]).standard_normal(blk.shape[0])
        np.testing.assert_array_equal(blk[:, 0], w0)
        np.testing.assert_array_equal(blk[:, 1], 0.0)


def test_block_training_deterministic_and_worker_invariant():
    trips = _speaker_triplets(300, 1)
    cfg = TrainConfig(epochs=3, seed=2)
    a = hamlearn.train_block(trips, 2, 8, cfg)
    b = hamlearn.train_block(trips, 2, 8, cfg)
    c = hamlearn.train_block(trips, 2, 8, cfg, workers=2)
    for x, y, z in zip(a.blocks, b.blocks, c.blocks):
        assert x.tobytes() == y.tobytes() == z.tobytes()


def test_block_training_lowers_heldout_objective():
    train, held = _speaker_triplets(2000, 3), _speaker_triplets(2000, 4)
    cfg = TrainConfig(epochs=5, seed=0)
    init = hamlearn.train_block(train, 2, 6, TrainConfig(epochs=0, seed=0))
    model = hamlearn.train_block(train, 2, 6, cfg)
    before = relaxed_objective(init, held, cfg.lam, cfg.margin, cfg.relaxation_beta)
    after = relaxed_objective(model, held, cfg.lam, cfg.margin, cfg.relaxation_beta)
    assert after <= before


def test_full_epochs_zero_equals_lsh(rng):
    trips = random_triplets(rng, 10, 20)
    model = hamlearn.train_full(trips, 20, 64, TrainConfig(epochs=0, seed=9))
    ref = lsh.sample_model(20, 64, seed=9)
    np.testing.assert_array_equal(model.weights, ref.planes)
    x = rng.standard_normal((200, 20))
    np.testing.assert_array_equal(model.encode_batch(x).words, ref.encode_batch(x).words)


def test_full_training_history_decreases():
    trips = _speaker_triplets(2000, 5)
    history = []
    hamlearn.train_full(trips, 2, 4, TrainConfig(epochs=6, learning_rate=0.1, seed=1), history)
    assert len(history) == 7
    assert history[-1] <= history[0]
    assert min(history[1:]) < history[0]


def test_full_training_deterministic():
    trips = _speaker_triplets(500, 6)
    cfg = TrainConfig(epochs=2, seed=4)
    a = hamlearn.train_full(trips, 2, 8, cfg)
    b = hamlearn.train_full(trips, 2, 8, cfg)
    assert a.weights.tobytes() == b.weights.tobytes()


def test_block_training_numerical_failure():
    trips = _speaker_triplets(100, 7)
    trips = TripletSet(trips.anchors * 1e200, trips.positives * 1e200, trips.negatives * -1e200)
    with pytest.raises(NumericalFailure) as err:
        hamlearn.train_block(trips, 2, 4, TrainConfig(epochs=2, learning_rate=1e200))
    assert err.value.block is not None


def test_full_training_numerical_failure():
    trips = _speaker_triplets(100, 7)
    trips = TripletSet(trips.anchors * 1e300, trips.positives * 1e300, trips.negatives * 1e300)
    with pytest.raises(NumericalFailure):
        hamlearn.train_full(trips, 2, 4, TrainConfig(epochs=2, learning_rate=1e300, lam=1.0))


def test_training_rejects_bad_input():
    trips = _speaker_triplets(10, 0)
    with pytest.raises(DimensionMismatch):
        hamlearn.train_block(trips, 3, 4)
    empty = TripletSet(np.empty((0, 2)), np.empty((0, 2)), np.empty((0, 2)))
    with pytest.raises(InvalidConfig):
        hamlearn.train_full(empty, 2, 4)


@pytest.mark.parametrize(
    "kwargs",
    [dict(lam=-1.0), dict(learning_rate=0.0), dict(epochs=-1), dict(batch_size=0),
     dict(margin=0.0), dict(relaxation_beta=0.0), dict(seed=-3)],
)
def test_train_config_validation(kwargs):
    with pytest.raises(InvalidConfig):
        TrainConfig(**kwargs)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(1, 20), st.integers(0, 2**32))
def test_block_code_width_is_actual_bits(dim_in, nbits, seed):
    rng = np.random.default_rng(seed)
    model = random_block_model(rng, dim_in, nbits)
    codes = model.encode_batch(rng.standard_normal((3, dim_in)))
    assert codes.nbits == allocate_bits(dim_in, nbits).actual_bits
