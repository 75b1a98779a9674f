"""Cross-validation, metrics, ROC AUC, timeframe sweeps and corpus statistics."""

from __future__ import annotations

import random
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

from .classifiers import LanguageModelClassifier, LinearSVM, TfidfNaiveBayes
from .corpus import balance_sample, relabel
from .features import filter_function_words, load_function_words, stem_tokens
from .timeutil import format_duration

SAMPLINGS = ("stratified", "linear_per_class", "linear_global")
CLASSIFIERS = ("nb", "lm", "svm")
FEATURES = ("full-text", "function-words")
METRIC_COLUMNS = (
    ("recall+", "recall_pos"),
    ("recall−", "recall_neg"),
    ("precision+", "precision_pos"),
    ("precision−", "precision_neg"),
    ("F1+", "f1_pos"),
    ("F1−", "f1_neg"),
    ("accuracy", "accuracy"),
    ("AUC", "auc"),
)
UNDEFINED = "—"


# --- metrics -----------------------------------------------------------------


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def _f1(p: float | None, r: float | None) -> float | None:
    if p is None or r is None or p + r == 0:
        return None
    return 2 * p * r / (p + r)


def metrics(tp: int, fp: int, fn: int, tn: int) -> dict[str, float | None]:
    """Precision, recall and F1 for both classes plus accuracy.

    Any ratio with a zero denominator is ``None``.
    """
    if min(tp, fp, fn, tn) < 0:
        raise ValueError("confusion counts must be non-negative")
    p_pos, r_pos = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
    p_neg, r_neg = _ratio(tn, tn + fn), _ratio(tn, tn + fp)
    return {
        "precision_pos": p_pos,
        "recall_pos": r_pos,
        "f1_pos": _f1(p_pos, r_pos),
        "precision_neg": p_neg,
        "recall_neg": r_neg,
        "f1_neg": _f1(p_neg, r_neg),
        "accuracy": _ratio(tp + tn, tp + fp + fn + tn),
    }


def roc_curve(scores: Sequence[float], labels: Sequence[int]) -> list[tuple[float, float]]:
    """(FPR, TPR) points, one per distinct score threshold, from (0, 0) to (1, 1)."""
    groups = _tie_groups(scores, labels)
    n_pos = sum(p for p, _ in groups)
    n_neg = sum(n for _, n in groups)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes")
    points = [(0.0, 0.0)]
    tp = fp = 0
    for p, n in groups:
        tp += p
        fp += n
        points.append((fp / n_neg, tp / n_pos))
    return points


def _tie_groups(scores, labels) -> list[tuple[int, int]]:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be 1-d and of equal length")
    if np.isnan(scores).any():
        raise ValueError("scores contain NaN")
    order = np.argsort(-scores, kind="stable")
    groups: list[tuple[int, int]] = []
    prev = None
    for i in order:
        if prev is None or scores[i] != prev:
            groups.append((0, 0))
            prev = scores[i]
        p, n = groups[-1]
        groups[-1] = (p + 1, n) if labels[i] == 1 else (p, n + 1)
    return groups


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float | None:
    """Trapezoidal area under the ROC curve; tied scores form diagonal segments.

    Returns ``None`` unless both classes are present.
    """
    groups = _tie_groups(scores, labels)
    n_pos = sum(p for p, _ in groups)
    n_neg = sum(n for _, n in groups)
    if n_pos == 0 or n_neg == 0:
        return None
    # Twice the area, in units of 1/(n_pos*n_neg), kept as an exact integer.
    doubled = 0
    tp = 0
    for p, n in groups:
        doubled += n * (2 * tp + p)
        tp += p
    return doubled / (2 * n_pos * n_neg)


# --- folds -------------------------------------------------------------------


def _contiguous(indices: list[int], k: int) -> list[list[int]]:
    size, extra = divmod(len(indices), k)
    out, start = [], 0
    for f in range(k):
        end = start + size + (1 if f < extra else 0)
        out.append(indices[start:end])
        start = end
    return out


def make_folds(labels: Sequence[int], folds: int = 10, sampling: str = "stratified", seed: int = 0) -> list[list[int]]:
    """Test-index sets of each fold; they are disjoint and cover ``range(len(labels))``."""
    if sampling not in SAMPLINGS:
        raise ValueError(f"unknown sampling {sampling!r}; choose from {', '.join(SAMPLINGS)}")
    if folds < 2:
        raise ValueError("at least 2 folds are required")
    labels = list(labels)
    by_class = {k: [i for i, y in enumerate(labels) if y == k] for k in (0, 1)}
    smallest = min(len(v) for v in by_class.values())
    if folds > smallest:
        raise ValueError(f"{folds} folds exceed the size of the smallest class ({smallest})")
    if sampling == "linear_global":
        return _contiguous(list(range(len(labels))), folds)
    out: list[list[int]] = [[] for _ in range(folds)]
    rng = random.Random(seed)
    offset = 0
    for k in (1, 0):
        idx = by_class[k]
        if sampling == "stratified":
            idx = idx[:]
            rng.shuffle(idx)
            for pos, i in enumerate(idx):
                out[(pos + offset) % folds].append(i)
            # Continue dealing where the previous class stopped so totals stay level.
            offset = (offset + len(idx)) % folds
        else:
            for f, chunk in enumerate(_contiguous(idx, folds)):
                out[f].extend(chunk)
    return [sorted(f) for f in out]


# --- classifiers and features ------------------------------------------------


def make_classifier(name: str, delta: float = 1.0, C: float = 1.0, order: int = 4, skips: bool = True):
    if name == "nb":
        return TfidfNaiveBayes(delta=delta)
    if name == "lm":
        return LanguageModelClassifier(order=order, skips=skips)
    if name == "svm":
        return LinearSVM(C=C)
    raise ValueError(f"unknown classifier {name!r}; choose from {', '.join(CLASSIFIERS)}")


def prepare_documents(docs: Sequence[Sequence[str]], classifier: str, features: str = "full-text", words=None):
    """Feature tokens per document: optional function-word restriction, then stems for NB/SVM.

    The language model sees surface forms.
    """
    if features not in FEATURES:
        raise ValueError(f"unknown features {features!r}; choose from {', '.join(FEATURES)}")
    if features == "function-words":
        words = words if words is not None else load_function_words()
        docs = [filter_function_words(d, words) for d in docs]
    if classifier == "lm":
        return [list(d) for d in docs]
    return [stem_tokens(d) for d in docs]


# --- reports -----------------------------------------------------------------


@dataclass
class FoldResult:
    test_indices: list[int]
    labels: list[int]
    predictions: list[int]
    scores: list[float]

    @property
    def confusion(self) -> tuple[int, int, int, int]:
        tp = sum(1 for y, p in zip(self.labels, self.predictions) if y == 1 and p == 1)
        fp = sum(1 for y, p in zip(self.labels, self.predictions) if y == 0 and p == 1)
        fn = sum(1 for y, p in zip(self.labels, self.predictions) if y == 1 and p == 0)
        tn = sum(1 for y, p in zip(self.labels, self.predictions) if y == 0 and p == 0)
        return tp, fp, fn, tn


@dataclass
class EvalReport:
    classifier: str
    features: str
    sampling: str
    seed: int
    folds: list[FoldResult] = field(default_factory=list)
    timeframe: str | None = None
    params: dict = field(default_factory=dict)
    averaging: str = "micro (pooled confusion counts)"

    @property
    def confusion(self) -> tuple[int, int, int, int]:
        totals = [0, 0, 0, 0]
        for f in self.folds:
            for i, v in enumerate(f.confusion):
                totals[i] += v
        return tuple(totals)

    def summary(self) -> dict[str, float | None]:
        out = metrics(*self.confusion)
        scores = [s for f in self.folds for s in f.scores]
        labels = [y for f in self.folds for y in f.labels]
        out["auc"] = roc_auc(scores, labels) if scores else None
        return out

    def to_tsv(self, header: bool = True) -> str:
        lines = []
        if header:
            lines.append(metrics_header())
        lines.append(metrics_row(self.classifier, self.summary()))
        return "\n".join(lines) + "\n"

    def folds_tsv(self) -> str:
        lines = ["fold\tTP\tFP\tFN\tTN"]
        for k, f in enumerate(self.folds):
            lines.append("\t".join(str(v) for v in (k, *f.confusion)))
        return "\n".join(lines) + "\n"

    def predictions_csv(self) -> str:
        lines = ["index,label,prediction,score"]
        for f in self.folds:
            for i, y, p, s in zip(f.test_indices, f.labels, f.predictions, f.scores):
                lines.append(f"{i},{y},{p},{float(s)!r}")
        return "\n".join(lines) + "\n"

    def metadata(self) -> dict:
        return {
            "classifier": self.classifier,
            "features": self.features,
            "sampling": self.sampling,
            "seed": self.seed,
            "timeframe": self.timeframe,
            "folds": len(self.folds),
            "params": dict(self.params),
            "averaging": self.averaging,
            "confusion": dict(zip(("TP", "FP", "FN", "TN"), self.confusion)),
        }


def format_metric(value: float | None) -> str:
    return UNDEFINED if value is None else f"{value:.4f}"


def metrics_header(first: str = "classifier") -> str:
    return "\t".join([first] + [name for name, _ in METRIC_COLUMNS])


def metrics_row(label: str, values: dict[str, float | None]) -> str:
    return "\t".join([label] + [format_metric(values.get(key)) for _, key in METRIC_COLUMNS])


def cross_validate(
    docs: Sequence[Sequence[str]],
    labels: Sequence[int],
    classifier: str = "nb",
    folds: int = 10,
    sampling: str = "stratified",
    seed: int = 0,
    features: str = "full-text",
    params: dict | None = None,
    timeframe: str | None = None,
) -> EvalReport:
    """k-fold cross-validation of one classifier over token lists ``docs``.

    ``params`` may hold ``delta`` (NB), ``C`` (SVM), ``order`` and ``skips`` (LM).
    Scores for ROC are NB's log-score difference, the LM perplexity
    difference and the SVM margin.
    """
    params = dict(params or {})
    labels = [int(y) for y in labels]
    if len(docs) != len(labels):
        raise ValueError("docs and labels differ in length")
    feats = prepare_documents(docs, classifier, features)
    report = EvalReport(classifier, features, sampling, seed, timeframe=timeframe, params=params)
    test_sets = make_folds(labels, folds, sampling, seed)
    for test in test_sets:
        held = set(test)
        train = [i for i in range(len(labels)) if i not in held]
        model = make_classifier(classifier, **params)
        model.fit([feats[i] for i in train], [labels[i] for i in train])
        test_docs = [feats[i] for i in test]
        scores = model.decision_function(test_docs)
        preds = model.predict(test_docs)
        report.folds.append(
            FoldResult(list(test), [labels[i] for i in test], [int(p) for p in preds], [float(s) for s in scores])
        )
    return report


# --- timeframe sweep ---------------------------------------------------------


def _mean(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None


@dataclass
class SweepRow:
    timeframe: timedelta
    n_per_class: int
    reports: dict[str, EvalReport] = field(default_factory=dict)
    note: str = ""

    @property
    def empty(self) -> bool:
        return not self.reports

    def mean(self) -> dict[str, float | None]:
        summaries = [r.summary() for r in self.reports.values()]
        return {key: _mean([s[key] for s in summaries]) for _, key in METRIC_COLUMNS}


@dataclass
class SweepTable:
    rows: list[SweepRow]

    def to_tsv(self, detail: bool = False) -> str:
        """One row per timeframe with the mean over classifiers; ``detail`` adds per-classifier rows."""
        head = "timeframe\tn_per_class\t" + metrics_header("classifier")
        lines = [head]
        for row in self.rows:
            prefix = f"{format_duration(row.timeframe)}\t{row.n_per_class}"
            if row.empty:
                lines.append(f"{prefix}\t" + metrics_row("empty", {}))
                continue
            if detail:
                for name, rep in row.reports.items():
                    lines.append(f"{prefix}\t" + metrics_row(name, rep.summary()))
            lines.append(f"{prefix}\t" + metrics_row("mean", row.mean()))
        return "\n".join(lines) + "\n"


def timeframe_sweep(
    posts: Sequence,
    timeframes: Sequence[timedelta],
    classifiers: Sequence[str] = CLASSIFIERS,
    folds: int = 10,
    sampling: str = "stratified",
    seed: int = 0,
    features: str = "full-text",
    params: dict | None = None,
) -> SweepTable:
    """Relabel, rebalance and cross-validate for each timeframe.

    Every timeframe uses the same number of posts per class: the number of
    disruptive posts under the smallest timeframe that labels any.
    """
    counts = {tf: sum(p.label for p in relabel(posts, tf)) for tf in timeframes}
    positive = [counts[tf] for tf in sorted(set(timeframes)) if counts[tf] > 0]
    size = positive[0] if positive else 0
    rows = []
    for tf in timeframes:
        row = SweepRow(tf, size)
        rows.append(row)
        if counts[tf] == 0:
            row.note = "no disruptive posts"
            continue
        labeled = relabel(posts, tf)
        try:
            sample = balance_sample(labeled, "random", seed, per_class=size)
            for name in classifiers:
                row.reports[name] = cross_validate(
                    [p.tokens for p in sample],
                    [p.label for p in sample],
                    name,
                    folds,
                    sampling,
                    seed,
                    features,
                    (params or {}).get(name, {}),
                    format_duration(tf),
                )
        except ValueError as exc:
            row.reports.clear()
            row.note = str(exc)
    return SweepTable(rows)


# --- corpus statistics -------------------------------------------------------

PROBE_TERMS = ("fucking", "fuck", "shit", "i", "you", "me", "my", "your", "myself", "yourself")
I_YOU_CORE = ("i", "you")
I_YOU_TERMS = ("i", "you", "me", "my", "your", "myself", "yourself")


@dataclass
class ClassStats:
    n_posts: int
    n_tokens: int
    lengths: dict[str, float | None]
    per_mille: dict[str, float | None]
    share_any_core: float | None
    share_any_extended: float | None
    share_two_extended: float | None
    i_you_ratio: float | None


def _class_stats(token_lists: list[list[str]], probes: Sequence[str]) -> ClassStats:
    n = len(token_lists)
    lengths_arr = np.array([len(t) for t in token_lists], dtype=float)
    if n:
        q1, med, q3 = np.percentile(lengths_arr, [25, 50, 75])
        lengths = {
            "mean": float(lengths_arr.mean()),
            "median": float(med),
            "q1": float(q1),
            "q3": float(q3),
            "min": float(lengths_arr.min()),
            "max": float(lengths_arr.max()),
        }
    else:
        lengths = dict.fromkeys(("mean", "median", "q1", "q3", "min", "max"))
    totals: Counter = Counter()
    any_core = any_ext = two_ext = 0
    for tokens in token_lists:
        totals.update(tokens)
        present = set(tokens)
        any_core += bool(present & set(I_YOU_CORE))
        hits = len(present & set(I_YOU_TERMS))
        any_ext += hits >= 1
        two_ext += hits >= 2
    n_tokens = sum(totals.values())
    per_mille = {t: (1000.0 * totals[t] / n_tokens if n_tokens else None) for t in probes}
    return ClassStats(
        n,
        n_tokens,
        lengths,
        per_mille,
        _ratio(any_core, n),
        _ratio(any_ext, n),
        _ratio(two_ext, n),
        _ratio(totals["i"], totals["you"]),
    )


@dataclass
class CorpusStats:
    disruptive: ClassStats
    constructive: ClassStats
    probes: tuple[str, ...]

    def to_tsv(self) -> str:
        d, c = self.disruptive, self.constructive
        lines = ["statistic\tdisruptive\tconstructive"]

        def add(name, a, b):
            fa = UNDEFINED if a is None else (f"{a:.4f}" if isinstance(a, float) else str(a))
            fb = UNDEFINED if b is None else (f"{b:.4f}" if isinstance(b, float) else str(b))
            lines.append(f"{name}\t{fa}\t{fb}")

        add("posts", d.n_posts, c.n_posts)
        add("tokens", d.n_tokens, c.n_tokens)
        for key in ("mean", "median", "q1", "q3", "min", "max"):
            add(f"length_{key}", d.lengths[key], c.lengths[key])
        for t in self.probes:
            add(f"permille_{t}", d.per_mille[t], c.per_mille[t])
        add("share_with_i_or_you", d.share_any_core, c.share_any_core)
        add("share_with_any_i_you_term", d.share_any_extended, c.share_any_extended)
        add("share_with_two_i_you_terms", d.share_two_extended, c.share_two_extended)
        add("i_you_ratio", d.i_you_ratio, c.i_you_ratio)
        return "\n".join(lines) + "\n"


def corpus_stats(posts: Sequence, probes: Sequence[str] = PROBE_TERMS) -> CorpusStats:
    """Post-length distribution and probe-term usage per class.

    Per-mille shares are term occurrences over all tokens of the class.
    "Two terms" means two distinct I/you terms in the same post.
    """
    pos = [list(p.tokens) for p in posts if p.label == 1]
    neg = [list(p.tokens) for p in posts if p.label == 0]
    return CorpusStats(_class_stats(pos, probes), _class_stats(neg, probes), tuple(probes))


def length_csv(posts: Sequence) -> str:
    """Per-post token counts for box plots."""
    lines = ["label,token_count"]
    for p in posts:
        lines.append(f"{'disruptive' if p.label == 1 else 'constructive'},{len(p.tokens)}")
    return "\n".join(lines) + "\n"
