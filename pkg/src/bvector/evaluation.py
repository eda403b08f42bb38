"""Verification (EER), identification (top-k) and scan-speed evaluation."""

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DegenerateInput, DimensionMismatch, InvalidConfig, MissingVector
from .vecspace import CodeArray, n_words

SCORERS = ("cosine", "hamming")


@dataclass(frozen=True)
class VerificationTrial:
    enroll_id: str
    test_id: str
    is_target: bool
    condition: str = None


@dataclass
class EvalReport:
    """Accuracy numbers plus, kept apart, timing numbers."""

    task: str
    scorer: str
    width: int
    eer: dict = None
    topk_accuracy: dict = None
    counts: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)


# -- stores ----------------------------------------------------------------------


def _scorer_of(store):
    return "hamming" if hasattr(store, "codes") else "cosine"


def _check_scorer(scorer, *stores):
    if scorer not in SCORERS:
        raise InvalidConfig(f"scorer must be one of {SCORERS}, got {scorer!r}")
    for s in stores:
        if _scorer_of(s) != scorer:
            kind = "binary codes" if scorer == "hamming" else "dense vectors"
            raise InvalidConfig(f"{scorer} scoring needs {kind}")


def _width(store):
    return store.codes.nbits if hasattr(store, "codes") else store.vectors.shape[1]


def _unit_rows(vectors):
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise DegenerateInput("store contains a zero vector")
    return vectors / norms


def _rows_for(store, ids):
    index = {k: i for i, k in enumerate(store.ids)}
    try:
        return np.array([index[i] for i in ids], dtype=np.int64)
    except KeyError as exc:
        raise MissingVector(exc.args[0]) from None


# -- verification ------------------------------------------------------------------


def score_trials(trials, enroll, test=None, scorer="cosine"):
    """Similarity per trial; higher means more likely the same speaker.

    Cosine scoring returns the cosine similarity. Hamming scoring returns
    ``(nbits - distance) / nbits``. ``test`` defaults to ``enroll`` when both
    sides live in one store.
    """
    test = enroll if test is None else test
    _check_scorer(scorer, enroll, test)
    if _width(enroll) != _width(test):
        raise DimensionMismatch("enroll and test stores have different widths")
    trials = list(trials)
    ei = _rows_for(enroll, [t.enroll_id for t in trials])
    ti = _rows_for(test, [t.test_id for t in trials])
    if scorer == "cosine":
        e = _unit_rows(enroll.vectors)
        x = _unit_rows(test.vectors) if test is not enroll else e
        return np.clip(np.einsum("ij,ij->i", e[ei], x[ti]), -1.0, 1.0)
    nbits = enroll.codes.nbits
    dist = np.bitwise_count(enroll.codes.words[ei] ^ test.codes.words[ti]).sum(axis=1, dtype=np.int64)
    return (nbits - dist) / nbits


def _error_curve(target, impostor):
    """(FAR, FRR) at every distinct score used as threshold, then at +inf."""
    tgt = np.sort(target)
    imp = np.sort(impostor)
    thr = np.unique(np.concatenate([tgt, imp]))
    far = (imp.shape[0] - np.searchsorted(imp, thr, side="left")) / imp.shape[0]
    frr = np.searchsorted(tgt, thr, side="left") / tgt.shape[0]
    return np.append(far, 0.0), np.append(frr, 1.0)


def eer_from_curve(far, frr):
    """EER from an ordered (FAR falling, FRR rising) sequence of operating points.

    Takes the first point with FRR >= FAR. An exact hit returns FAR there;
    otherwise FAR and FRR are linearly interpolated against the previous point
    and the common value where they cross is returned.
    """
    diff = frr - far
    k = int(np.argmax(diff >= 0.0))
    if diff[k] == 0.0 or k == 0:
        return float((far[k] + frr[k]) / 2.0)
    alpha = -diff[k - 1] / (diff[k] - diff[k - 1])
    far_x = far[k - 1] + alpha * (far[k] - far[k - 1])
    frr_x = frr[k - 1] + alpha * (frr[k] - frr[k - 1])
    return float((far_x + frr_x) / 2.0)


def compute_eer(target_scores, impostor_scores):
    """Equal error rate with FAR(t) = P(impostor >= t), FRR(t) = P(target < t)."""
    tgt = np.asarray(target_scores, dtype=np.float64).ravel()
    imp = np.asarray(impostor_scores, dtype=np.float64).ravel()
    if tgt.size == 0 or imp.size == 0:
        raise InvalidConfig("EER needs at least one target and one impostor score")
    if not (np.all(np.isfinite(tgt)) and np.all(np.isfinite(imp))):
        raise InvalidConfig("scores must be finite")
    return eer_from_curve(*_error_curve(tgt, imp))


def eer_by_condition(trials, scores):
    """``{"overall": eer, <condition>: eer, ...}``; conditions lacking either class are skipped."""
    trials = list(trials)
    scores = np.asarray(scores)
    is_target = np.array([t.is_target for t in trials], dtype=bool)
    conds = np.array([t.condition or "" for t in trials], dtype=object)
    out = {"overall": compute_eer(scores[is_target], scores[~is_target])}
    for c in sorted(set(conds) - {""}):
        sel = conds == c
        if np.any(sel & is_target) and np.any(sel & ~is_target):
            out[c] = compute_eer(scores[sel & is_target], scores[sel & ~is_target])
    return out


def verify(trials, enroll, test=None, scorer="cosine"):
    """Score trials and report EER per condition plus overall."""
    trials = list(trials)
    t0 = time.perf_counter()
    scores = score_trials(trials, enroll, test, scorer)
    elapsed = time.perf_counter() - t0
    n_tgt = sum(t.is_target for t in trials)
    return EvalReport(
        "verify", scorer, _width(enroll), eer=eer_by_condition(trials, scores),
        counts={"target_trials": n_tgt, "nontarget_trials": len(trials) - n_tgt},
        timing={"score_seconds": elapsed},
    )


# -- identification ----------------------------------------------------------------


class Gallery:
    """Enrolled speaker models, one per speaker id, kept sorted by id.

    Keeping the rows in ascending id order makes a stable sort on
    similarity break ties by ascending speaker id.
    """

    def __init__(self, store):
        labels = list(store.labels)
        if len(set(labels)) != len(labels):
            raise InvalidConfig("gallery speaker ids must be unique")
        if not labels:
            raise InvalidConfig("gallery is empty")
        order = np.argsort(np.array(labels, dtype=object), kind="stable")
        self.speaker_ids = [labels[i] for i in order]
        self.scorer = _scorer_of(store)
        if self.scorer == "cosine":
            self.vectors = _unit_rows(np.asarray(store.vectors)[order])
            self.width = self.vectors.shape[1]
        else:
            self.codes = CodeArray(store.codes.words[order], store.codes.nbits)
            self.width = self.codes.nbits
        self._index = {s: i for i, s in enumerate(self.speaker_ids)}

    def __len__(self):
        return len(self.speaker_ids)

    def similarities(self, probes):
        """``(n_probes, n_speakers)`` similarity matrix for a probe store."""
        if _width(probes) != self.width:
            raise DimensionMismatch(f"probe width {_width(probes)} != gallery width {self.width}")
        if self.scorer == "cosine":
            return _unit_rows(np.asarray(probes.vectors)) @ self.vectors.T
        return self.width - _kernels.hamming_matrix(probes.codes.words, self.codes.words)


def _probe_store(probe, gallery):
    """Wrap a single vector or code so it looks like a one-row store."""
    from .vecspace import BinaryCode

    class _One:
        ids = ("probe",)
        labels = ("probe",)

    one = _One()
    if isinstance(probe, BinaryCode):
        one.codes = CodeArray(probe.words[None, :], probe.nbits)
    else:
        one.vectors = np.asarray(probe, dtype=np.float64)[None, :]
    return one


def _check_k(k, gallery):
    if not 1 <= k <= len(gallery):
        raise InvalidConfig(f"k must be in [1, {len(gallery)}], got {k}")


def identify_topk(gallery, probe, k, scorer=None):
    """Exhaustive scan; the ``k`` most similar speaker ids, ties by ascending id."""
    if not isinstance(gallery, Gallery):
        gallery = Gallery(gallery)
    if scorer is not None and scorer != gallery.scorer:
        raise InvalidConfig(f"gallery holds {gallery.scorer} representations, not {scorer}")
    _check_k(k, gallery)
    store = _probe_store(probe, gallery)
    if _scorer_of(store) != gallery.scorer:
        raise InvalidConfig("probe and gallery representations differ")
    sims = gallery.similarities(store)[0]
    order = np.argsort(-sims, kind="stable")
    return [gallery.speaker_ids[i] for i in order[:k]]


def true_speaker_ranks(gallery, probes, chunk=1024):
    """0-based rank of each probe's own speaker, or -1 when it is not enrolled."""
    ranks = np.full(len(probes.labels), -1, dtype=np.int64)
    truth = np.array([gallery._index.get(lab, -1) for lab in probes.labels])
    pos = np.arange(len(gallery))
    for start in range(0, len(truth), chunk):
        sub = _slice_store(probes, start, start + chunk)
        sims = gallery.similarities(sub)
        t = truth[start : start + chunk]
        known = t >= 0
        own = sims[np.arange(len(t)), np.maximum(t, 0)][:, None]
        ahead = (sims > own) | ((sims == own) & (pos[None, :] < t[:, None]))
        r = ahead.sum(axis=1)
        ranks[start : start + chunk] = np.where(known, r, -1)
    return ranks


def _slice_store(store, a, b):
    class _Slice:
        pass

    s = _Slice()
    s.labels = store.labels[a:b]
    s.ids = store.ids[a:b]
    if hasattr(store, "codes"):
        s.codes = CodeArray(store.codes.words[a:b], store.codes.nbits)
    else:
        s.vectors = np.asarray(store.vectors)[a:b]
    return s


def topk_accuracy(gallery, probes, ks=(1, 3, 5, 10), scorer=None):
    """Fraction of probes whose true speaker is among the top ``k``, for each ``k``."""
    if not isinstance(gallery, Gallery):
        gallery = Gallery(gallery)
    if scorer is not None:
        _check_scorer(scorer, probes)
        if scorer != gallery.scorer:
            raise InvalidConfig(f"gallery holds {gallery.scorer} representations, not {scorer}")
    if len(probes.labels) == 0:
        raise InvalidConfig("need at least one probe")
    ks = sorted(set(int(k) for k in ks))
    for k in ks:
        _check_k(k, gallery)
    t0 = time.perf_counter()
    ranks = true_speaker_ranks(gallery, probes)
    elapsed = time.perf_counter() - t0
    hits = {k: float(np.mean((ranks >= 0) & (ranks < k))) for k in ks}
    return EvalReport(
        "identify", gallery.scorer, gallery.width, topk_accuracy=hits,
        counts={"probes": len(ranks), "speakers": len(gallery)},
        timing={"scan_seconds": elapsed},
    )


# -- scan benchmark ----------------------------------------------------------------


@dataclass
class ScanTiming:
    scorer: str
    gallery_size: int
    width: int
    repetitions: int
    median_seconds: float
    comparisons_per_second: float
    backend: str
    threads: int
    seconds: list = field(default_factory=list)


def _bench_data(gallery_size, width, scorer, rng):
    if scorer == "hamming":
        nw = n_words(width)
        words = rng.integers(0, 2**64, size=(gallery_size + 1, nw), dtype=np.uint64)
        tail = width % 64
        if tail:
            words[:, -1] &= np.uint64((1 << tail) - 1)
        return words[1:], words[0].copy()
    x = rng.standard_normal((gallery_size + 1, width))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return np.ascontiguousarray(x[1:]), x[0].copy()


def bench_scan(gallery_size, width, scorer, repetitions=10, seed=0, threads=None):
    """Median wall-clock of a full one-probe scan over ``gallery_size`` random items.

    ``width`` is bits for ``hamming`` and dimensions for ``cosine``. Cosine
    gallery rows are unit length, so the scan is a dot product per row. One
    untimed warm-up scan runs first.
    """
    if gallery_size < 1 or width < 1 or repetitions < 1:
        raise InvalidConfig("gallery_size, width and repetitions must be >= 1")
    if scorer not in SCORERS:
        raise InvalidConfig(f"scorer must be one of {SCORERS}, got {scorer!r}")
    if threads is not None:
        _kernels.set_threads(threads)
    rng = np.random.Generator(np.random.PCG64(seed))
    gallery, probe = _bench_data(gallery_size, width, scorer, rng)
    scan = _kernels.hamming_scan if scorer == "hamming" else _kernels.dot_scan
    scan(gallery, probe)
    times = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        scan(gallery, probe)
        times.append(time.perf_counter() - t0)
    med = float(np.median(times))
    return ScanTiming(
        scorer, gallery_size, width, repetitions, med,
        gallery_size / med if med > 0 else float("inf"),
        _kernels.BACKEND, _current_threads(), times,
    )


def _current_threads():
    if _kernels.BACKEND == "numba":
        import numba

        return numba.get_num_threads()
    return 1


def speedup(gallery_size, nbits, dim, repetitions=10, seed=0, threads=None):
    """Cosine-scan time divided by Hamming-scan time on the same machine."""
    ham = bench_scan(gallery_size, nbits, "hamming", repetitions, seed, threads)
    cos = bench_scan(gallery_size, dim, "cosine", repetitions, seed, threads)
    return cos.median_seconds / ham.median_seconds, ham, cos
