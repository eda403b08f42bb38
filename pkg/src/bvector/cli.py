"""``bvector`` command line: gen -> split -> train -> encode -> eval-* / bench.

Exit codes: 0 success, 2 file or parse error, 3 configuration error,
4 numerical failure during training.
"""

import argparse
import sys

import numpy as np

from . import _kernels, dataio, evaluation, hamlearn, lsh
from .errors import (
    DegenerateInput,
    DimensionMismatch,
    InvalidConfig,
    MissingVector,
    NumericalFailure,
    ParseError,
)

EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="bvector", description="Binary speaker embedding toolkit.", formatter_class=fmt)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a synthetic labeled vector corpus", formatter_class=fmt)
    d = dataio.SyntheticSpec()
    g.add_argument("--speakers", type=int, default=d.n_speakers, help="number of speakers")
    g.add_argument("--utts", type=int, default=d.utterances_per_speaker, help="utterances per speaker")
    g.add_argument("--dim", type=int, default=d.dim, help="vector dimension")
    g.add_argument("--spread", type=float, default=d.within_spread, help="within-speaker noise scale")
    g.add_argument("--channel-shift", type=float, default=d.channel_shift,
                   help="offset applied to the second half of each speaker's utterances")
    g.add_argument("--decay", type=float, default=d.between_decay,
                   help="linear fall-off of between-speaker spread across dimensions, in [0, 1]")
    g.add_argument("--seed", type=int, default=0, help="random seed")
    g.add_argument("--out", required=True, help="output vector file")

    s = sub.add_parser("split", help="build speaker models, test set and trial list", formatter_class=fmt)
    s.add_argument("--in", dest="inp", required=True, help="input vector file")
    s.add_argument("--enroll-per-speaker", type=int, default=5, help="utterances averaged into each speaker model")
    s.add_argument("--impostors-per-test", type=int, default=4, help="nontarget trials per test utterance")
    s.add_argument("--seed", type=int, default=0, help="random seed")
    s.add_argument("--out-enroll", required=True, help="output vector file of speaker models")
    s.add_argument("--out-test", required=True, help="output vector file of test utterances")
    s.add_argument("--out-trials", required=True, help="output trial list")

    t = sub.add_parser("train", help="build or train a hash model", formatter_class=fmt)
    c = hamlearn.TrainConfig()
    t.add_argument("--method", choices=("lsh", "full", "block"), required=True)
    t.add_argument("--bits", type=int, required=True, help="code length b (nominal for block)")
    t.add_argument("--in", dest="inp", default=None, help="training vector file (lsh needs only its dim)")
    t.add_argument("--dim", type=int, default=None, help="input dimension for lsh without --in")
    t.add_argument("--out", required=True, help="output model file")
    t.add_argument("--seed", type=int, default=c.seed, help="seed for weights, triplets and shuffles")
    t.add_argument("--triplets", type=int, default=20000, help="number of sampled training triplets")
    t.add_argument("--epochs", type=int, default=c.epochs, help="passes over the triplets")
    t.add_argument("--lr", type=float, default=c.learning_rate, help="SGD step size")
    t.add_argument("--lam", type=float, default=c.lam, help="regularization weight")
    t.add_argument("--batch-size", type=int, default=c.batch_size, help="triplets per SGD step")
    t.add_argument("--margin", type=float, default=c.margin, help="hinge margin in bits")
    t.add_argument("--beta", type=float, default=c.relaxation_beta, help="tanh relaxation slope")
    t.add_argument("--lsh-payload", choices=("matrix", "seed"), default="matrix",
                   help="store lsh planes in full or only their seed")
    t.add_argument("--threads", type=int, default=1, help="parallel block trainers")

    e = sub.add_parser("encode", help="encode vectors to binary codes", formatter_class=fmt)
    e.add_argument("--model", required=True, help="model file")
    e.add_argument("--in", dest="inp", required=True, help="input vector file")
    e.add_argument("--out", required=True, help="output code file")

    v = sub.add_parser("eval-verify", help="verification EER per condition", formatter_class=fmt)
    v.add_argument("--trials", required=True, help="trial list")
    v.add_argument("--enroll", required=True, help="vector or code file of enrolled models")
    v.add_argument("--test", required=True, help="vector or code file of test utterances")
    v.add_argument("--scorer", choices=evaluation.SCORERS, default="cosine", help="scoring function")
    v.add_argument("--model", default=None, help="encode vector inputs with this model first")
    v.add_argument("--report", default=None, help="key=value report file")
    v.add_argument("--threads", type=int, default=1, help="worker threads")

    i = sub.add_parser("eval-identify", help="identification top-k accuracy", formatter_class=fmt)
    i.add_argument("--gallery", required=True, help="vector or code file, one entry per speaker")
    i.add_argument("--probes", required=True, help="vector or code file labeled with true speakers")
    i.add_argument("--k", type=_int_list, default=[1, 3, 5, 10], help="comma-separated k values")
    i.add_argument("--scorer", choices=evaluation.SCORERS, default="cosine", help="scoring function")
    i.add_argument("--model", default=None, help="encode vector inputs with this model first")
    i.add_argument("--report", default=None, help="key=value report file")
    i.add_argument("--threads", type=int, default=1, help="worker threads")

    b = sub.add_parser("bench", help="Hamming vs cosine naive scan speed", formatter_class=fmt)
    b.add_argument("--bits", type=int, default=150, help="code length of the Hamming scan")
    b.add_argument("--dim", type=int, default=150, help="dimension of the cosine scan")
    b.add_argument("--gallery-size", type=int, default=100000, help="gallery entries scanned")
    b.add_argument("--reps", type=int, default=10, help="timed repetitions; the median is reported")
    b.add_argument("--seed", type=int, default=0, help="random seed for the synthetic gallery")
    b.add_argument("--threads", type=int, default=1, help="worker threads")
    b.add_argument("--report", default=None, help="key=value report file")
    return p


# -- helpers -----------------------------------------------------------------------


def _print_config(args, out):
    out.write(f"# bvector {args.command}\n")
    for key, val in sorted(vars(args).items()):
        if key in ("command", "func"):
            continue
        if isinstance(val, list):
            val = ",".join(str(x) for x in val)
        out.write(f"#   {key} = {val}\n")


def _write_report(path, command, fields, timing):
    lines = [f"command={command}\n"]
    lines += [f"{k}={v}\n" for k, v in fields]
    lines.append("[timing]\n")
    lines += [f"{k}={v}\n" for k, v in timing]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)


def _as_scored_store(path, scorer, model):
    store = dataio.read_store(path)
    if scorer == "hamming" and isinstance(store, dataio.LabeledVectorSet):
        if model is None:
            raise InvalidConfig(f"{path}: hamming scoring of vectors needs --model")
        store = dataio.encode_set(model, store)
    return store


def _threads(n):
    if n < 1:
        raise InvalidConfig("--threads must be >= 1")
    _kernels.set_threads(n)


# -- commands ----------------------------------------------------------------------


def cmd_gen(args, out):
    spec = dataio.SyntheticSpec(args.speakers, args.utts, args.dim, args.spread,
                                args.channel_shift, args.seed, args.decay)
    vset = dataio.generate_synthetic(spec)
    dataio.write_vectors(args.out, vset)
    out.write(f"wrote {len(vset)} vectors ({len(vset.speakers())} speakers, dim {vset.dim}) to {args.out}\n")


def cmd_split(args, out):
    vset = dataio.read_vectors(args.inp)
    enroll, test = dataio.split_enrollment(vset, args.enroll_per_speaker, args.seed)
    trials = dataio.make_trials(enroll, test, args.impostors_per_test, args.seed,
                                condition_of=dataio.synthetic_condition)
    dataio.write_vectors(args.out_enroll, enroll)
    dataio.write_vectors(args.out_test, test)
    dataio.write_trials(args.out_trials, trials)
    n_tgt = sum(t.is_target for t in trials)
    out.write(f"{len(enroll)} speaker models, {len(test)} test utterances, "
              f"{n_tgt} target + {len(trials) - n_tgt} nontarget trials\n")


def cmd_train(args, out):
    cfg = hamlearn.TrainConfig(lam=args.lam, learning_rate=args.lr, epochs=args.epochs,
                               batch_size=args.batch_size, margin=args.margin,
                               relaxation_beta=args.beta, seed=args.seed)
    if args.threads < 1:
        raise InvalidConfig("--threads must be >= 1")
    if args.method == "lsh":
        if args.inp is not None:
            dim = dataio.read_vectors(args.inp).dim
        elif args.dim is not None:
            dim = args.dim
        else:
            raise InvalidConfig("lsh needs --in or --dim")
        model = lsh.sample_model(dim, args.bits, args.seed)
    else:
        if args.inp is None:
            raise InvalidConfig(f"{args.method} training needs --in")
        vset = dataio.read_vectors(args.inp)
        triplets = dataio.sample_triplets(vset, args.triplets, args.seed)
        if args.method == "full":
            model = hamlearn.train_full(triplets, vset.dim, args.bits, cfg)
        else:
            model = hamlearn.train_block(triplets, vset.dim, args.bits, cfg, workers=args.threads)
    dataio.write_model(args.out, model, args.lsh_payload if args.method == "lsh" else "matrix")
    extra = ""
    if isinstance(model, hamlearn.BlockDiagonalModel):
        extra = f" (nominal {model.allocation.nominal_bits}, actual {model.allocation.actual_bits})"
    out.write(f"wrote {model.kind} model: {model.dim_in} -> {model.nbits} bits{extra} to {args.out}\n")


def cmd_encode(args, out):
    model = dataio.read_model(args.model)
    vset = dataio.read_vectors(args.inp)
    codes = dataio.encode_set(model, vset)
    dataio.write_codes(args.out, codes)
    out.write(f"wrote {len(codes)} codes of {codes.nbits} bits to {args.out}\n")


def cmd_eval_verify(args, out):
    _threads(args.threads)
    model = dataio.read_model(args.model) if args.model else None
    trials = dataio.read_trials(args.trials)
    enroll = _as_scored_store(args.enroll, args.scorer, model)
    test = _as_scored_store(args.test, args.scorer, model)
    rep = evaluation.verify(trials, enroll, test, args.scorer)
    out.write(f"{'condition':<12}{'EER%':>8}\n")
    rows = [(k, v) for k, v in rep.eer.items() if k != "overall"] + [("overall", rep.eer["overall"])]
    for name, val in rows:
        out.write(f"{name:<12}{100 * val:>8.2f}\n")
    if args.report:
        fields = [("scorer", rep.scorer), ("width", rep.width)]
        fields += sorted(rep.counts.items())
        fields += [(f"eer.{k}", repr(v)) for k, v in rows]
        _write_report(args.report, "eval-verify", fields, sorted(rep.timing.items()))


def cmd_eval_identify(args, out):
    _threads(args.threads)
    model = dataio.read_model(args.model) if args.model else None
    gallery = _as_scored_store(args.gallery, args.scorer, model)
    probes = _as_scored_store(args.probes, args.scorer, model)
    rep = evaluation.topk_accuracy(gallery, probes, args.k, args.scorer)
    out.write(f"{'k':<8}{'Acc%':>8}\n")
    for k, acc in rep.topk_accuracy.items():
        out.write(f"top-{k:<4}{100 * acc:>8.2f}\n")
    if args.report:
        fields = [("scorer", rep.scorer), ("width", rep.width)]
        fields += sorted(rep.counts.items())
        fields += [(f"top{k}", repr(v)) for k, v in rep.topk_accuracy.items()]
        _write_report(args.report, "eval-identify", fields, sorted(rep.timing.items()))


def cmd_bench(args, out):
    _threads(args.threads)
    ratio, ham, cos = evaluation.speedup(args.gallery_size, args.bits, args.dim, args.reps, args.seed)
    out.write(f"{'representation':<22}{'median ms':>12}{'items/s':>14}{'speedup':>10}\n")
    out.write(f"{f'cosine {args.dim}-dim f64':<22}{1e3 * cos.median_seconds:>12.3f}"
              f"{cos.comparisons_per_second:>14.3g}{'x1':>10}\n")
    out.write(f"{f'hamming {args.bits}-bit':<22}{1e3 * ham.median_seconds:>12.3f}"
              f"{ham.comparisons_per_second:>14.3g}{f'x{ratio:.0f}':>10}\n")
    if args.report:
        fields = [("bits", args.bits), ("dim", args.dim), ("gallery_size", args.gallery_size),
                  ("reps", args.reps), ("backend", ham.backend), ("threads", ham.threads)]
        timing = [("cosine_median_seconds", repr(cos.median_seconds)),
                  ("hamming_median_seconds", repr(ham.median_seconds)),
                  ("speedup", repr(ratio))]
        _write_report(args.report, "bench", fields, timing)


COMMANDS = {
    "gen": cmd_gen,
    "split": cmd_split,
    "train": cmd_train,
    "encode": cmd_encode,
    "eval-verify": cmd_eval_verify,
    "eval-identify": cmd_eval_identify,
    "bench": cmd_bench,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    _print_config(args, out)
    try:
        COMMANDS[args.command](args, out)
    except NumericalFailure as exc:
        sys.stderr.write(f"error: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (ParseError, MissingVector, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except (InvalidConfig, DimensionMismatch, DegenerateInput) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
