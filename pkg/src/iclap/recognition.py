"""Object models, the three classifiers (4-D labeled registration,
position-only registration, bag-of-words), and the leave-one-
exploration-out evaluation harness."""

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .codebook import (Codebook, BowHistogram, assign_labels, bow_histogram,
                       build_labeled_cloud, kmeans_fit)
from .data import Cloud, Dataset
from .descriptors import DescriptorConfig, describe_exploration, describe_samples
from .registration import IcpParams, KdTree, iclap_distance


class Method(str, Enum):
    ICLAP = "iclap"
    ICP3 = "icp3"
    BOW = "bow"


@dataclass(frozen=True, eq=False)
class ObjectModel:
    """Per-object reference data: labeled 4-D cloud, bare 3-D cloud,
    word histogram, and prebuilt search trees."""

    object_id: str
    cloud4: Cloud
    cloud3: Cloud
    histogram: BowHistogram
    kdtree4: KdTree
    kdtree3: KdTree


class RankedEntry(NamedTuple):
    object_id: str
    raw_error: float
    normalized_score: float


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    method: Method
    ranked: tuple

    @property
    def winner(self) -> str:
        return self.ranked[0].object_id

    def error_of(self, object_id: str) -> float:
        for entry in self.ranked:
            if entry.object_id == object_id:
                return entry.raw_error
        raise KeyError(object_id)


def build_model(explorations, cb: Codebook, cfg: DescriptorConfig,
                w_scale: float = 1.0) -> ObjectModel:
    """Pool descriptors from all training explorations of one object."""
    explorations = list(explorations)
    if not explorations:
        raise ValueError("no explorations given")
    object_id = explorations[0].object_id
    if any(e.object_id != object_id for e in explorations):
        raise ValueError("explorations belong to different objects")
    entries = []
    for e in explorations:
        found, _ = describe_exploration(e, cfg)
        entries.extend(found)
    if not entries:
        raise ValueError(
            f"object {object_id!r}: no usable samples after skipping "
            f"degenerate frames")
    labels = assign_labels(cb, [d for d, _ in entries])
    cloud4 = build_labeled_cloud(entries, cb, w_scale)
    cloud3 = Cloud(cloud4.points[:, :3])
    hist = bow_histogram(labels, cb.k)
    return ObjectModel(object_id, cloud4, cloud3, hist,
                       KdTree(cloud4), KdTree(cloud3))


def _rank(method: Method, ids, errors) -> ClassificationReport:
    errors = np.asarray(errors, dtype=np.float64)
    total = float(np.sqrt((errors ** 2).sum()))
    order = sorted(range(len(ids)), key=lambda i: (errors[i], i))
    ranked = tuple(
        RankedEntry(ids[i], float(errors[i]),
                    float(errors[i]) / total if total > 0 else 0.0)
        for i in order)
    return ClassificationReport(method, ranked)


def classify_iclap(test_samples, models, cb: Codebook, cfg: DescriptorConfig,
                   w_scale: float = 1.0,
                   params: IcpParams = IcpParams()) -> ClassificationReport:
    """Match the 4-D labeled test cloud against every model; the model
    with the smallest registration error wins."""
    if not models:
        raise ValueError("no models to classify against")
    entries, _ = describe_samples(test_samples, cfg)
    if not entries:
        raise ValueError("no usable test samples")
    test4 = build_labeled_cloud(entries, cb, w_scale)
    errors = [iclap_distance(test4, m.cloud4, params, model_tree=m.kdtree4)
              for m in models]
    return _rank(Method.ICLAP, [m.object_id for m in models], errors)


def classify_icp3(test_samples, models,
                  params: IcpParams = IcpParams()) -> ClassificationReport:
    """Position-only baseline: register the 3-D contact cloud."""
    if not models:
        raise ValueError("no models to classify against")
    test_samples = list(test_samples)
    if not test_samples:
        raise ValueError("no test samples")
    test3 = Cloud(np.array([s.position for s in test_samples]))
    errors = [iclap_distance(test3, m.cloud3, params, model_tree=m.kdtree3)
              for m in models]
    return _rank(Method.ICP3, [m.object_id for m in models], errors)


def classify_bow(test_samples, models, cb: Codebook,
                 cfg: DescriptorConfig) -> ClassificationReport:
    """Appearance-only baseline: Euclidean distance between normalized
    word histograms, spatial layout discarded."""
    if not models:
        raise ValueError("no models to classify against")
    entries, _ = describe_samples(test_samples, cfg)
    if not entries:
        raise ValueError("no usable test samples")
    labels = assign_labels(cb, [d for d, _ in entries])
    hist = bow_histogram(labels, cb.k)
    errors = [float(np.linalg.norm(hist.bins - m.histogram.bins))
              for m in models]
    return _rank(Method.BOW, [m.object_id for m in models], errors)


# ---------------------------------------------------------------------------
# evaluation harness


@dataclass(frozen=True)
class CodebookParams:
    k: int = 50
    max_iters: int = 100
    standardize: bool = False


@dataclass(frozen=True, eq=False)
class EvalCurve:
    """Recognition rate against the number of touches m.

    capped[i] counts draws where m exceeded the exploration size and
    all samples were used instead.  confusion[i] is the (true, predicted)
    count matrix over dataset object order for touches[i].
    """

    method: Method
    touches: tuple
    rates: tuple
    trials_per_point: int
    seed: int
    capped: tuple
    confusion: tuple
    object_ids: tuple

    def __post_init__(self):
        if not (len(self.touches) == len(self.rates) == len(self.capped)
                == len(self.confusion)):
            raise ValueError("per-m lists must have equal length")
        if any(not (0.0 <= r <= 1.0) for r in self.rates):
            raise ValueError("rates must lie in [0, 1]")


def _derived_seed(*parts) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(parts)))


def _classify(method, samples, models, cb, cfg, w_scale, icp_params):
    if method == Method.ICLAP:
        return classify_iclap(samples, models, cb, cfg, w_scale, icp_params)
    if method == Method.ICP3:
        return classify_icp3(samples, models, icp_params)
    return classify_bow(samples, models, cb, cfg)


def evaluate_touch_sweep(dataset: Dataset, method: Method, m_values,
                         trials: int, seed: int,
                         cb_params: CodebookParams = CodebookParams(),
                         cfg: DescriptorConfig = DescriptorConfig(),
                         w_scale: float = 1.0,
                         icp_params: IcpParams = IcpParams(),
                         draw_mode: str = "random",
                         self_test: bool = False) -> EvalCurve:
    """Leave-one-exploration-out sweep of recognition rate vs touches.

    Every object must have the same number (>= 2) of explorations; fold
    f holds out exploration f of each object.  The codebook and the
    models are refit on the training folds only.  Test subsets of m
    touches are drawn uniformly without replacement (draw_mode
    "random", seeded) or taken in collection order ("prefix"); draws
    where m exceeds the exploration size use all samples and are
    counted in `capped`.

    self_test replaces the held-out draw with the object's own training
    samples, a sanity mode that must score 1.0.
    """
    if draw_mode not in ("random", "prefix"):
        raise ValueError("draw_mode must be 'random' or 'prefix'")
    if trials <= 0:
        raise ValueError("trials must be positive")
    m_values = [int(m) for m in m_values]
    if not m_values or any(m <= 0 for m in m_values):
        raise ValueError("m values must be positive")
    counts = set(dataset.exploration_counts().values())
    if len(counts) != 1:
        raise ValueError("all objects need the same number of explorations")
    n_folds = counts.pop()
    if n_folds < 2:
        raise ValueError("need at least 2 explorations per object")
    ids = dataset.object_ids
    n_obj = len(ids)
    correct = {m: 0 for m in m_values}
    total = {m: 0 for m in m_values}
    capped = {m: 0 for m in m_values}
    confusion = {m: np.zeros((n_obj, n_obj), dtype=np.int64) for m in m_values}
    for fold in range(n_folds):
        train = {oid: [e for j, e in enumerate(dataset.explorations[oid])
                       if j != fold]
                 for oid in ids}
        pool = []
        for oid in ids:
            for e in train[oid]:
                found, _ = describe_exploration(e, cfg)
                pool.extend(d.values for d, _ in found)
        cb = kmeans_fit(pool, cb_params.k,
                        seed=int(_derived_seed(seed, fold).integers(2 ** 32)),
                        max_iters=cb_params.max_iters, kind=cfg.kind,
                        standardize=cb_params.standardize)
        models = [build_model(train[oid], cb, cfg, w_scale) for oid in ids]
        for oi, oid in enumerate(ids):
            held_out = dataset.explorations[oid][fold]
            if self_test:
                test_pool = [s for e in train[oid] for s in e.samples]
            else:
                test_pool = list(held_out.samples)
            for m in m_values:
                for trial in range(trials):
                    if self_test:
                        subset = test_pool
                    elif m >= len(test_pool):
                        subset = test_pool
                        if m > len(test_pool):
                            capped[m] += 1
                    elif draw_mode == "prefix":
                        subset = test_pool[:m]
                    else:
                        rng = _derived_seed(seed, fold, oi, m, trial)
                        pick = rng.choice(len(test_pool), size=m,
                                          replace=False)
                        subset = [test_pool[i] for i in pick]
                    report = _classify(method, subset, models, cb, cfg,
                                       w_scale, icp_params)
                    pred = ids.index(report.winner)
                    confusion[m][oi, pred] += 1
                    total[m] += 1
                    if report.winner == oid:
                        correct[m] += 1
    return EvalCurve(method=method, touches=tuple(m_values),
                     rates=tuple(correct[m] / total[m] for m in m_values),
                     trials_per_point=trials, seed=seed,
                     capped=tuple(capped[m] for m in m_values),
                     confusion=tuple(confusion[m] for m in m_values),
                     object_ids=tuple(ids))


def serialize_curve(curve: EvalCurve) -> str:
    """Plain text table, one `method m rate trials` line per m."""
    lines = []
    for i, m in enumerate(curve.touches):
        lines.append(f"{curve.method.value} {m} "
                     f"{curve.rates[i]:.6f} {curve.trials_per_point}")
        if curve.capped[i]:
            lines.append(f"# m={m}: {curve.capped[i]} draws capped at "
                         f"exploration size")
    return "\n".join(lines) + "\n"


def pair_rate(curve: EvalCurve, pair) -> float:
    """Recognition rate restricted to the given object pair, aggregated
    over every m of the sweep."""
    ia = curve.object_ids.index(pair[0])
    ib = curve.object_ids.index(pair[1])
    good = 0
    total = 0
    for conf in curve.confusion:
        for i in (ia, ib):
            good += conf[i, i]
            total += conf[i].sum()
    return good / total if total else 0.0


# ---------------------------------------------------------------------------
# model file format
#
#   object <object_id>
#   <x> <y> <z> <w>          one line per labeled point
#   histogram <b_1> ... <b_k>


def serialize_models(models) -> str:
    from .data import fmt
    lines = []
    for m in models:
        lines.append(f"object {m.object_id}")
        for row in m.cloud4.points:
            lines.append(" ".join(fmt(v) for v in row))
        lines.append("histogram " + " ".join(fmt(v) for v in m.histogram.bins))
    return "\n".join(lines) + "\n"


def parse_models(text: str):
    models = []
    object_id = None
    rows = []
    hist = None

    def flush():
        if object_id is None:
            return
        if not rows or hist is None:
            raise ValueError(f"model block {object_id!r} is incomplete")
        cloud4 = Cloud(np.array(rows))
        cloud3 = Cloud(cloud4.points[:, :3])
        models.append(ObjectModel(object_id, cloud4, cloud3,
                                  BowHistogram(hist), KdTree(cloud4),
                                  KdTree(cloud3)))

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("object "):
            flush()
            object_id = line.split(None, 1)[1]
            rows = []
            hist = None
        elif line.startswith("histogram "):
            hist = np.array([float(t) for t in line.split()[1:]])
        else:
            point = [float(t) for t in line.split()]
            if len(point) != 4:
                raise ValueError("model point lines must have 4 fields")
            rows.append(point)
    flush()
    if not models:
        raise ValueError("no model blocks found")
    return models
