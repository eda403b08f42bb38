import numpy as np
import pytest

from bvector.hamlearn import BlockDiagonalModel, FullLinearModel, relaxed_gradient, relaxed_objective


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def naive_hamming(a_bits, b_bits):
    """Bit-by-bit count of disagreeing positions."""
    count = 0
    for x, y in zip(a_bits, b_bits):
        if x != y:
            count += 1
    return count


def sweep_eer(target, impostor):
    """EER by brute force: accept when score > t, for t at every midpoint between distinct scores.

    Walks thresholds upward, finds the first where FRR >= FAR and interpolates
    linearly with the previous threshold.
    """
    target = [float(s) for s in target]
    impostor = [float(s) for s in impostor]
    values = sorted(set(target) | set(impostor))
    cuts = [values[0] - 1.0]
    cuts += [(lo + hi) / 2.0 for lo, hi in zip(values, values[1:])]
    cuts.append(values[-1] + 1.0)
    prev = None
    for t in cuts:
        far = sum(s > t for s in impostor) / len(impostor)
        frr = sum(s <= t for s in target) / len(target)
        if frr >= far:
            if prev is None or frr == far:
                return (far + frr) / 2.0
            pfar, pfrr = prev
            a = (pfar - pfrr) / ((pfar - pfrr) - (far - frr))
            return ((pfar + a * (far - pfar)) + (pfrr + a * (frr - pfrr))) / 2.0
        prev = (far, frr)
    raise AssertionError("unreachable: FRR reaches 1 at the top threshold")


def sort_all_topk(speaker_ids, sims, k):
    """Rank every speaker by (-similarity, id) and keep the first k."""
    order = sorted(range(len(speaker_ids)), key=lambda i: (-sims[i], speaker_ids[i]))
    return [speaker_ids[i] for i in order[:k]]


# -- random file-format instances and mutations ------------------------------------


def _ids(rng, n, prefix):
    alphabet = list("abcdefghijklmnopqrstuvwxyz0123456789_-.:/") + ["é", "中"]
    out = []
    for k in range(n):
        tail = "".join(rng.choice(alphabet, size=rng.integers(0, 6)))
        out.append(f"{prefix}{k}{tail}")
    return out


def random_reals(rng, shape):
    """Doubles of wildly mixed magnitude, including subnormals and signed zero."""
    x = rng.standard_normal(shape) * 10.0 ** rng.integers(-320, 300, size=shape)
    flat = x.reshape(-1)
    if flat.size:
        picks = rng.integers(0, flat.size, size=min(3, flat.size))
        flat[picks] = rng.choice([0.0, -0.0, 5e-324, -1.7976931348623157e308, 1e-17], size=picks.size)
    return x


def random_vector_set(rng):
    from bvector.dataio import LabeledVectorSet

    n, d = int(rng.integers(0, 6)), int(rng.integers(1, 12))
    return LabeledVectorSet(_ids(rng, n, "u"), _ids(rng, n, "s"), random_reals(rng, (n, d)))


def random_code_set(rng):
    from bvector.dataio import LabeledCodeSet
    from bvector.vecspace import CodeArray

    n, b = int(rng.integers(0, 6)), int(rng.integers(1, 300))
    bits = rng.integers(0, 2, size=(n, b)).astype(bool)
    return LabeledCodeSet(_ids(rng, n, "u"), _ids(rng, n, "s"), CodeArray.from_bits(bits))


def random_trials(rng):
    from bvector.evaluation import VerificationTrial

    n = int(rng.integers(0, 8))
    a, b, c = _ids(rng, n, "m"), _ids(rng, n, "t"), _ids(rng, n, "c")
    return [
        VerificationTrial(a[k], b[k], bool(rng.integers(2)), c[k] if rng.integers(2) else None)
        for k in range(n)
    ]


def random_model(rng):
    from bvector import hamlearn, lsh

    kind = rng.integers(3)
    d, b = int(rng.integers(1, 8)), int(rng.integers(1, 20))
    seed = int(rng.integers(0, 2**63)) * int(rng.integers(1, 3))
    if kind == 0:
        return lsh.sample_model(d, b, seed)
    if kind == 1:
        return hamlearn.FullLinearModel(random_reals(rng, (b, d)), d, b, seed)
    alloc = hamlearn.allocate_bits(d, b)
    blocks = tuple(random_reals(rng, (t, 2)) for t in alloc.counts)
    return hamlearn.BlockDiagonalModel(blocks, alloc, seed)


_JUNK = [b" ", b"  ", b"\n", b"\r\n", b"\t", b"-", b"+", b"e", b".", b"nan", b"inf", b"1e999",
         b"0x1", b"\xff", b"\xc3", b"\x00", b"target", b"payload seed", b"99999999999999999999"]


def mutate(data, rng):
    """One to three random byte- or line-level edits of ``data``."""
    data = bytearray(data)
    for _ in range(int(rng.integers(1, 4))):
        op = rng.integers(7)
        pos = int(rng.integers(0, len(data) + 1))
        if op == 0 and data:
            data[min(pos, len(data) - 1)] = int(rng.integers(256))
        elif op == 1:
            data[pos:pos] = _JUNK[rng.integers(len(_JUNK))]
        elif op == 2:
            del data[pos : pos + int(rng.integers(1, 12))]
        elif op == 3:
            del data[pos:]
        elif op == 4:
            lines = bytes(data).split(b"\n")
            i, j = rng.integers(len(lines), size=2)
            lines[i], lines[j] = lines[j], lines[i]
            data = bytearray(b"\n".join(lines))
        elif op == 5:
            lines = bytes(data).split(b"\n")
            i = rng.integers(len(lines))
            lines.insert(int(i), lines[i])
            data = bytearray(b"\n".join(lines))
        else:
            digits = [k for k, ch in enumerate(data) if 48 <= ch <= 57]
            if digits:
                data[digits[rng.integers(len(digits))]] = int(rng.integers(48, 58))
    return bytes(data)


def resign(data):
    """Replace the trailing CRC32 line (if any) with a correct one for the edited body."""
    import zlib

    cut = data.rfind(b"CRC32 ")
    body = data[:cut] if cut >= 0 else data
    if body and not body.endswith(b"\n"):
        body += b"\n"
    return body + b"CRC32 %08x\n" % zlib.crc32(body)


# -- finite-difference gradient oracle ----------------------------------------------


def _flat_params(model):
    if isinstance(model, FullLinearModel):
        return model.weights.ravel().copy()
    return np.concatenate([b.ravel() for b in model.blocks])


def _rebuild(model, theta):
    if isinstance(model, FullLinearModel):
        return FullLinearModel(theta.reshape(model.weights.shape), model.dim_in, model.nbits)
    offs = model.allocation.offsets() * 2
    blocks = tuple(theta[a:b].reshape(-1, 2) for a, b in zip(offs[:-1], offs[1:]))
    return BlockDiagonalModel(blocks, model.allocation)


def fd_relative_error(model, trips, lam=0.1, beta=1.3, h=1e-6):
    """Max entrywise relative error of the analytic gradient against central differences."""
    grad = relaxed_gradient(model, trips, lam, beta=beta)
    if isinstance(grad, list):
        grad = np.concatenate([g.ravel() for g in grad])
    grad = np.ravel(grad)
    theta = _flat_params(model)
    fd = np.empty_like(theta)
    for k in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[k] += h
        tm[k] -= h
        fp = relaxed_objective(_rebuild(model, tp), trips, lam, beta=beta)
        fm = relaxed_objective(_rebuild(model, tm), trips, lam, beta=beta)
        fd[k] = (fp - fm) / (2 * h)
    scale = np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-3)
    return float(np.max(np.abs(grad - fd) / scale))


# -- acceptance summary --------------------------------------------------------------

ACCEPTANCE = {}


def record_criterion(number, title, ok, detail):
    """Store one acceptance verdict; printed in the terminal summary and on stdout."""
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
