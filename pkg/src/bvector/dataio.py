"""File formats, synthetic labeled corpora and triplet sampling.

Text formats (LF line endings, single-space separated tokens, ids may not
contain whitespace; reals are printed as ``%.16e``, i.e. 17 significant
digits, which round-trips every double exactly)::

    BVEC 1 <count> <dim>                     vectors
    <utt_id> <speaker_id> v1 ... vD

    BCODE 1 <count> <nbits>                  binary codes
    <utt_id> <speaker_id> <hex of little-endian uint64 words>

    TRIALS 1                                 verification trials
    <enroll_id> <test_id> <target|nontarget> [condition]

    BMODEL 1 <lsh|full|block>                hash models
    dims ...                                 (see write_model)
    <parameter rows>
    CRC32 <8 lowercase hex digits>           crc32 of every preceding byte
"""

import re
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import CorruptModel, DimensionMismatch, InvalidConfig, ParseError
from .evaluation import VerificationTrial
from .hamlearn import BlockDiagonalModel, FullLinearModel, TripletSet, allocate_bits
from .lsh import RandomHyperplaneModel, SEED_MAX, gaussian_matrix
from .vecspace import BinaryCode, CodeArray, n_words, normalize_rows

_FLOAT = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")
_INT = re.compile(r"(?:0|[1-9]\d*)\Z")
_ID = re.compile(r"[^\s]+\Z")
_HEX = re.compile(r"[0-9a-f]*\Z")
_CRC_LINE = re.compile(rb"CRC32 ([0-9a-f]{8})\n\Z")

# Refuse headers that would allocate absurd arrays.
MAX_PARAMS = 1 << 24


def fmt_real(x):
    return "%.16e" % x


# -- containers ------------------------------------------------------------------


def _check_ids(ids):
    for i in ids:
        if not isinstance(i, str) or not _ID.match(i):
            raise InvalidConfig(f"invalid identifier {i!r}: must be non-empty without whitespace")


@dataclass(frozen=True, eq=False)
class LabeledVectorSet:
    ids: tuple
    labels: tuple
    vectors: np.ndarray

    def __post_init__(self):
        ids, labels = tuple(self.ids), tuple(self.labels)
        vectors = np.array(self.vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[1] < 1:
            raise InvalidConfig("vectors must be an (n, D) array with D >= 1")
        if not (len(ids) == len(labels) == vectors.shape[0]):
            raise InvalidConfig("ids, labels and vectors must have equal length")
        if len(set(ids)) != len(ids):
            raise InvalidConfig("utterance ids must be unique")
        if not np.all(np.isfinite(vectors)):
            raise InvalidConfig("vectors contain non-finite values")
        _check_ids(ids)
        _check_ids(labels)
        vectors.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "vectors", vectors)

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, LabeledVectorSet):
            return NotImplemented
        return (self.ids == other.ids and self.labels == other.labels
                and self.vectors.shape == other.vectors.shape
                and np.array_equal(self.vectors, other.vectors))

    __hash__ = None

    def speakers(self):
        """Distinct labels in order of first appearance."""
        return list(dict.fromkeys(self.labels))

    def rows_by_speaker(self):
        out = {}
        for row, lab in enumerate(self.labels):
            out.setdefault(lab, []).append(row)
        return out

    def subset(self, rows):
        rows = list(rows)
        return LabeledVectorSet([self.ids[r] for r in rows], [self.labels[r] for r in rows],
                                self.vectors[rows].reshape(len(rows), self.dim))


@dataclass(frozen=True, eq=False)
class LabeledCodeSet:
    ids: tuple
    labels: tuple
    codes: CodeArray

    def __post_init__(self):
        ids, labels = tuple(self.ids), tuple(self.labels)
        if not (len(ids) == len(labels) == len(self.codes)):
            raise InvalidConfig("ids, labels and codes must have equal length")
        if len(set(ids)) != len(ids):
            raise InvalidConfig("utterance ids must be unique")
        _check_ids(ids)
        _check_ids(labels)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", labels)

    @property
    def nbits(self):
        return self.codes.nbits

    def __len__(self):
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, LabeledCodeSet):
            return NotImplemented
        return (self.ids == other.ids and self.labels == other.labels
                and self.codes.nbits == other.codes.nbits
                and np.array_equal(self.codes.words, other.codes.words))

    __hash__ = None


def encode_set(model, vset):
    """Encode every vector of a :class:`LabeledVectorSet` with ``model``."""
    if vset.dim != model.dim_in:
        raise DimensionMismatch(f"model expects D={model.dim_in}, vectors have D={vset.dim}")
    if len(vset):
        codes = model.encode_batch(vset.vectors)
    else:
        codes = CodeArray(np.zeros((0, n_words(model.nbits)), dtype=np.uint64), model.nbits)
    return LabeledCodeSet(vset.ids, vset.labels, codes)


# -- synthetic corpus ----------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian speakers: utterance = centroid + within_spread * noise (+ channel shift).

    Noise is i.i.d. N(0, 1) per coordinate. Centroid coordinate ``k`` is
    N(0, s_k^2) with ``s_k`` from :func:`between_scales`, so with
    ``between_decay > 0`` the leading coordinates carry the most speaker
    information, as they would after an LDA projection. When
    ``channel_shift > 0`` the second half of each speaker's utterances
    (index >= utterances_per_speaker // 2) is offset by ``channel_shift``
    times one fixed N(0, I) direction and tagged ``ch1`` in its id.
    """

    n_speakers: int = 300
    utterances_per_speaker: int = 20
    dim: int = 150
    within_spread: float = 1.0
    channel_shift: float = 0.0
    seed: int = 0
    between_decay: float = 1.0

    def __post_init__(self):
        if self.n_speakers < 1 or self.utterances_per_speaker < 1:
            raise InvalidConfig("speaker and utterance counts must be positive")
        if self.dim < 2:
            raise InvalidConfig("dim must be >= 2")
        if not self.within_spread >= 0 or not np.isfinite(self.within_spread):
            raise InvalidConfig("within_spread must be a finite nonnegative number")
        if not self.channel_shift >= 0 or not np.isfinite(self.channel_shift):
            raise InvalidConfig("channel_shift must be a finite nonnegative number")
        if not 0.0 <= self.between_decay <= 1.0:
            raise InvalidConfig("between_decay must lie in [0, 1]")
        if not 0 <= self.seed <= SEED_MAX:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")


def between_scales(dim, decay):
    """Per-coordinate std of speaker centroids: ``1 - decay * k / (dim - 1)``."""
    return 1.0 - decay * np.arange(dim) / (dim - 1)


def generate_synthetic(spec):
    """Draw a length-normalized labeled corpus; a pure function of ``spec``."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    s, u, d = spec.n_speakers, spec.utterances_per_speaker, spec.dim
    centroids = rng.standard_normal((s, d)) * between_scales(d, spec.between_decay)
    noise = rng.standard_normal((s, u, d))
    channel = rng.standard_normal(d)
    x = centroids[:, None, :] + spec.within_spread * noise
    shifted = np.arange(u) >= u // 2
    if spec.channel_shift > 0:
        x[:, shifted, :] += spec.channel_shift * channel
    x = normalize_rows(x.reshape(s * u, d))
    sw = max(4, len(str(s - 1)))
    uw = max(3, len(str(u - 1)))
    ids, labels = [], []
    for i in range(s):
        spk = f"spk{i:0{sw}d}"
        for j in range(u):
            ch = "ch1" if spec.channel_shift > 0 and shifted[j] else "ch0"
            ids.append(f"{spk}-{ch}-utt{j:0{uw}d}")
            labels.append(spk)
    return LabeledVectorSet(ids, labels, x)


def synthetic_condition(utt_id):
    """Channel tag (``ch0``/``ch1``) embedded in a synthetic utterance id, else None."""
    parts = utt_id.split("-")
    if len(parts) == 3 and parts[1] in ("ch0", "ch1"):
        return parts[1]
    return None


def sample_triplets(vset, count, seed=0):
    """Draw ``count`` (anchor, positive, negative) triplets.

    The anchor speaker is uniform over speakers with at least two
    utterances, anchor and positive are two distinct utterances of that
    speaker, the negative speaker is uniform over all other speakers and the
    negative utterance uniform within it.
    """
    if count < 0:
        raise InvalidConfig("count must be nonnegative")
    groups = vset.rows_by_speaker()
    speakers = list(groups)
    if len(speakers) < 2:
        raise InvalidConfig("triplet sampling needs at least two speakers")
    eligible = [k for k, s in enumerate(speakers) if len(groups[s]) >= 2]
    if not eligible:
        raise InvalidConfig("triplet sampling needs a speaker with two or more utterances")
    if count == 0:
        empty = np.empty((0, vset.dim))
        return TripletSet(empty, empty, empty, [], [])

    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = np.array([len(groups[s]) for s in speakers])
    starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    rows = np.concatenate([groups[s] for s in speakers])

    anchor_spk = np.asarray(eligible)[rng.integers(len(eligible), size=count)]
    n_a = sizes[anchor_spk]
    ia = rng.integers(n_a)
    ip = rng.integers(n_a - 1)
    ip = ip + (ip >= ia)
    neg_spk = rng.integers(len(speakers) - 1, size=count)
    neg_spk = neg_spk + (neg_spk >= anchor_spk)
    ineg = rng.integers(sizes[neg_spk])

    ra = rows[starts[anchor_spk] + ia]
    rp = rows[starts[anchor_spk] + ip]
    rn = rows[starts[neg_spk] + ineg]
    return TripletSet(
        vset.vectors[ra], vset.vectors[rp], vset.vectors[rn],
        [speakers[k] for k in anchor_spk], [speakers[k] for k in neg_spk],
    )


def split_enrollment(vset, enroll_per_speaker=5, seed=0):
    """Split a corpus into speaker models and test utterances.

    For each speaker, ``enroll_per_speaker`` utterances are picked at random;
    the speaker model is the length-normalized mean of them and gets the
    speaker label as its id. The remaining utterances form the test set.
    """
    if enroll_per_speaker < 1:
        raise InvalidConfig("enroll_per_speaker must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    models, model_ids, test_rows = [], [], []
    for spk, rows in vset.rows_by_speaker().items():
        rows = np.asarray(rows)
        pick = rng.permutation(rows.shape[0])
        enroll = np.sort(rows[pick[:enroll_per_speaker]])
        models.append(vset.vectors[enroll].mean(axis=0))
        model_ids.append(spk)
        test_rows.extend(np.sort(rows[pick[enroll_per_speaker:]]).tolist())
    enroll_set = LabeledVectorSet(model_ids, model_ids, normalize_rows(np.stack(models)))
    return enroll_set, vset.subset(sorted(test_rows))


def make_trials(enroll, test, impostors_per_test=4, seed=0, condition_of=None):
    """One target trial per test utterance plus ``impostors_per_test`` random other models."""
    model_ids = list(enroll.ids)
    index = {m: k for k, m in enumerate(model_ids)}
    rng = np.random.Generator(np.random.PCG64(seed))
    k = min(impostors_per_test, len(model_ids) - 1)
    trials = []
    for tid, lab in zip(test.ids, test.labels):
        cond = condition_of(tid) if condition_of else None
        own = index.get(lab)
        if own is not None:
            trials.append(VerificationTrial(lab, tid, True, cond))
        others = [i for i in range(len(model_ids)) if i != own]
        if k > 0:
            for j in sorted(rng.choice(len(others), size=k, replace=False)):
                trials.append(VerificationTrial(model_ids[others[j]], tid, False, cond))
    return trials


# -- text helpers ------------------------------------------------------------------


def _decode(data):
    if isinstance(data, str):
        return data
    try:
        return bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8 ({exc.reason})") from None


def _lines(text):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _tokens(line, lineno):
    toks = line.split(" ")
    if any(t == "" for t in toks) or any(not _ID.match(t) for t in toks):
        raise ParseError("fields must be separated by single spaces", lineno)
    return toks


def _int(tok, lineno, what):
    if not _INT.match(tok):
        raise ParseError(f"{what} must be a nonnegative integer, got {tok!r}", lineno)
    return int(tok)


def _reals(toks, lineno):
    for t in toks:
        if not _FLOAT.match(t):
            raise ParseError(f"not a decimal number: {t!r}", lineno)
    vals = np.array([float(t) for t in toks], dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise ParseError("value out of range for a double", lineno)
    return vals


def _header(lines, magic, nfields):
    if not lines:
        raise ParseError("empty file", 1)
    toks = _tokens(lines[0], 1)
    if toks[0] != magic:
        raise ParseError(f"expected {magic} header", 1)
    if len(toks) != nfields:
        raise ParseError(f"{magic} header needs {nfields} fields", 1)
    if toks[1] != "1":
        raise ParseError(f"unsupported {magic} version {toks[1]!r}", 1)
    return toks


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


def _write(path, text):
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))


# -- vectors -----------------------------------------------------------------------


def format_vectors(vset):
    out = [f"BVEC 1 {len(vset)} {vset.dim}\n"]
    for uid, lab, row in zip(vset.ids, vset.labels, vset.vectors):
        out.append(f"{uid} {lab} " + " ".join(fmt_real(v) for v in row) + "\n")
    return "".join(out)


def parse_vectors(data):
    lines = _lines(_decode(data))
    toks = _header(lines, "BVEC", 4)
    count = _int(toks[2], 1, "count")
    dim = _int(toks[3], 1, "dim")
    if not 1 <= dim <= MAX_PARAMS:
        raise ParseError(f"dim must be in [1, {MAX_PARAMS}]", 1)
    if len(lines) - 1 != count:
        raise ParseError(f"header declares {count} rows, found {len(lines) - 1}", min(len(lines), count + 1) + 1)
    ids, labels, rows = [], [], []
    seen = set()
    for k, line in enumerate(lines[1:]):
        lineno = k + 2
        row = _tokens(line, lineno)
        if len(row) != dim + 2:
            raise ParseError(f"expected {dim + 2} fields, found {len(row)}", lineno)
        if row[0] in seen:
            raise ParseError(f"duplicate id {row[0]!r}", lineno)
        seen.add(row[0])
        ids.append(row[0])
        labels.append(row[1])
        rows.append(_reals(row[2:], lineno))
    vecs = np.array(rows) if rows else np.empty((0, dim))
    return LabeledVectorSet(ids, labels, vecs)


def write_vectors(path, vset):
    _write(path, format_vectors(vset))


def read_vectors(path):
    return parse_vectors(_read(path))


# -- codes -------------------------------------------------------------------------


def format_codes(cset):
    out = [f"BCODE 1 {len(cset)} {cset.nbits}\n"]
    for uid, lab, code in zip(cset.ids, cset.labels, cset.codes):
        out.append(f"{uid} {lab} {code.hex()}\n")
    return "".join(out)


def parse_codes(data):
    lines = _lines(_decode(data))
    toks = _header(lines, "BCODE", 4)
    count = _int(toks[2], 1, "count")
    nbits = _int(toks[3], 1, "nbits")
    if not 1 <= nbits <= MAX_PARAMS:
        raise ParseError(f"nbits must be in [1, {MAX_PARAMS}]", 1)
    if len(lines) - 1 != count:
        raise ParseError(f"header declares {count} rows, found {len(lines) - 1}", 1)
    nw = n_words(nbits)
    rows, ids, labels = [], [], []
    for k, line in enumerate(lines[1:]):
        lineno = k + 2
        row = _tokens(line, lineno)
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, found {len(row)}", lineno)
        if not _HEX.match(row[2]) or len(row[2]) != 16 * nw:
            raise ParseError(f"code must be {16 * nw} lowercase hex digits", lineno)
        try:
            code = BinaryCode.from_hex(row[2], nbits)
        except InvalidConfig as exc:
            raise ParseError(str(exc), lineno) from None
        rows.append(code.words)
        ids.append(row[0])
        labels.append(row[1])
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate ids")
    words = np.stack(rows) if rows else np.zeros((0, nw), dtype=np.uint64)
    return LabeledCodeSet(ids, labels, CodeArray(words, nbits))


def write_codes(path, cset):
    _write(path, format_codes(cset))


def read_codes(path):
    return parse_codes(_read(path))


def read_store(path):
    """Read either a vector file or a code file, dispatching on the header."""
    data = _read(path)
    if data.startswith(b"BCODE "):
        return parse_codes(data)
    return parse_vectors(data)


# -- trials ------------------------------------------------------------------------


def format_trials(trials):
    out = ["TRIALS 1\n"]
    for t in trials:
        _check_ids([t.enroll_id, t.test_id] + ([t.condition] if t.condition is not None else []))
        kind = "target" if t.is_target else "nontarget"
        tail = f" {t.condition}" if t.condition is not None else ""
        out.append(f"{t.enroll_id} {t.test_id} {kind}{tail}\n")
    return "".join(out)


def parse_trials(data):
    lines = _lines(_decode(data))
    _header(lines, "TRIALS", 2)
    trials = []
    for k, line in enumerate(lines[1:]):
        lineno = k + 2
        row = _tokens(line, lineno)
        if len(row) not in (3, 4):
            raise ParseError(f"expected 3 or 4 fields, found {len(row)}", lineno)
        if row[2] not in ("target", "nontarget"):
            raise ParseError(f"trial type must be target or nontarget, got {row[2]!r}", lineno)
        trials.append(VerificationTrial(row[0], row[1], row[2] == "target",
                                        row[3] if len(row) == 4 else None))
    return trials


def write_trials(path, trials):
    _write(path, format_trials(trials))


def read_trials(path):
    return parse_trials(_read(path))


# -- models ------------------------------------------------------------------------


def _matrix_lines(m):
    return [" ".join(fmt_real(v) for v in row) + "\n" for row in m]


def format_model(model, lsh_payload="matrix"):
    """Serialize a model. ``lsh_payload`` is ``"matrix"`` or ``"seed"`` for LSH models."""
    kind = getattr(model, "kind", None)
    out = [f"BMODEL 1 {kind}\n"]
    if isinstance(model, RandomHyperplaneModel):
        out.append(f"dims {model.dim_in} {model.nbits} {model.seed}\n")
        if lsh_payload == "seed":
            if not np.array_equal(model.planes, gaussian_matrix(model.seed, model.nbits, model.dim_in)):
                raise InvalidConfig("planes do not match the seed; store the matrix instead")
            out.append("payload seed\n")
        elif lsh_payload == "matrix":
            out.append("payload matrix\n")
            out.extend(_matrix_lines(model.planes))
        else:
            raise InvalidConfig(f"unknown lsh payload {lsh_payload!r}")
    elif isinstance(model, FullLinearModel):
        out.append(f"dims {model.dim_in} {model.nbits} {model.seed}\n")
        out.extend(_matrix_lines(model.weights))
    elif isinstance(model, BlockDiagonalModel):
        a = model.allocation
        out.append(f"dims {model.dim_in} {a.nominal_bits} {a.actual_bits} {model.seed}\n")
        out.append("alloc " + " ".join(str(t) for t in a.counts) + "\n")
        for blk in model.blocks:
            out.extend(_matrix_lines(blk))
    else:
        raise InvalidConfig(f"cannot serialize {type(model).__name__}")
    body = "".join(out).encode("utf-8")
    return body + b"CRC32 %08x\n" % zlib.crc32(body)


def _rows(lines, first, nrows, ncols):
    if len(lines) < first + nrows:
        raise ParseError(f"expected {nrows} parameter rows", len(lines) + 1)
    m = np.empty((nrows, ncols))
    for k in range(nrows):
        lineno = first + k + 1
        toks = _tokens(lines[first + k], lineno)
        if len(toks) != ncols:
            raise ParseError(f"expected {ncols} values, found {len(toks)}", lineno)
        m[k] = _reals(toks, lineno)
    return m


def _seed(tok, lineno):
    s = _int(tok, lineno, "seed")
    if s > SEED_MAX:
        raise ParseError("seed exceeds 64 bits", lineno)
    return s


def parse_model(data):
    data = bytes(data) if not isinstance(data, bytes) else data
    if not data.endswith(b"\n"):
        raise CorruptModel("model file is truncated (no final CRC32 line)")
    cut = data.rfind(b"\n", 0, len(data) - 1) + 1
    m = _CRC_LINE.match(data[cut:])
    if m is None:
        raise CorruptModel("model file is truncated (no final CRC32 line)")
    body = data[:cut]
    if zlib.crc32(body) != int(m.group(1), 16):
        raise CorruptModel("CRC32 mismatch")
    lines = _lines(_decode(body))
    toks = _header(lines, "BMODEL", 3)
    kind = toks[2]
    if kind not in ("lsh", "full", "block"):
        raise ParseError(f"unknown model kind {kind!r}", 1)
    if len(lines) < 2:
        raise ParseError("missing dims line", 2)
    dims = _tokens(lines[1], 2)
    if dims[0] != "dims":
        raise ParseError("expected dims line", 2)

    if kind in ("lsh", "full"):
        if len(dims) != 4:
            raise ParseError("dims line needs dim_in nbits seed", 2)
        dim_in, nbits = _int(dims[1], 2, "dim_in"), _int(dims[2], 2, "nbits")
        seed = _seed(dims[3], 2)
        if dim_in < 1 or nbits < 1 or dim_in * nbits > MAX_PARAMS:
            raise ParseError("dimensions out of range", 2)
        if kind == "full":
            w = _rows(lines, 2, nbits, dim_in)
            end = 2 + nbits
            model = FullLinearModel(w, dim_in, nbits, seed)
        else:
            if len(lines) < 3 or lines[2] not in ("payload seed", "payload matrix"):
                raise ParseError("expected 'payload seed' or 'payload matrix'", 3)
            if lines[2] == "payload seed":
                planes = gaussian_matrix(seed, nbits, dim_in)
                end = 3
            else:
                planes = _rows(lines, 3, nbits, dim_in)
                end = 3 + nbits
            model = RandomHyperplaneModel(planes, dim_in, nbits, seed)
    else:
        if len(dims) != 5:
            raise ParseError("dims line needs dim_in nominal_bits actual_bits seed", 2)
        dim_in = _int(dims[1], 2, "dim_in")
        nominal = _int(dims[2], 2, "nominal_bits")
        actual = _int(dims[3], 2, "actual_bits")
        seed = _seed(dims[4], 2)
        if dim_in < 1 or nominal < 1 or dim_in > MAX_PARAMS or actual > MAX_PARAMS:
            raise ParseError("dimensions out of range", 2)
        if len(lines) < 3:
            raise ParseError("missing alloc line", 3)
        alloc_toks = _tokens(lines[2], 3)
        if alloc_toks[0] != "alloc" or len(alloc_toks) != dim_in + 1:
            raise ParseError(f"alloc line needs {dim_in} counts", 3)
        counts = tuple(_int(t, 3, "bit count") for t in alloc_toks[1:])
        alloc = allocate_bits(dim_in, nominal)
        if counts != alloc.counts or actual != alloc.actual_bits:
            raise ParseError("bit allocation does not match the linear-descent rule", 3)
        flat = _rows(lines, 3, actual, 2)
        end = 3 + actual
        offs = alloc.offsets()
        blocks = tuple(flat[a:b] for a, b in zip(offs[:-1], offs[1:]))
        model = BlockDiagonalModel(blocks, alloc, seed)
    if len(lines) != end:
        raise ParseError("unexpected trailing content", end + 1)
    return model


def write_model(path, model, lsh_payload="matrix"):
    with open(path, "wb") as fh:
        fh.write(format_model(model, lsh_payload))


def read_model(path):
    return parse_model(_read(path))
