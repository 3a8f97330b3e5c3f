"""Counting-query membership attack with a shadow-model meta-classifier.

The attack summarizes a synthetic dataset by the fraction of rows that
match the target record on random column subsets (exact match, plus an
at-most variant on ordered columns), trains a logistic regression on
features from shadow generators fit with and without the target, and
scores fresh releases with the fitted model.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import data as data_mod
from . import generators
from .errors import ConfigError, DomainError, SizeError, TrainingError
from .seeds import derive, rng

EXACT = "exact"
ATMOST = "atmost"

DEFAULT_K_VALUES = (1, 2, 3)
DEFAULT_QUERIES_PER_K = 100


@dataclass(frozen=True)
class Query:
    """One counting query: a column subset and a match kind."""

    columns: tuple
    kind: str


@dataclass(frozen=True)
class QueryBank:
    """Frozen list of queries; the attack's feature map."""

    queries: tuple
    k_values: tuple
    ncols: int
    bank_seed: int


def _distinct_subsets(d, k, count, g):
    total = math.comb(d, k)
    if total <= count:
        return list(combinations(range(d), k))
    if total <= 100000:
        pool = list(combinations(range(d), k))
        idx = g.choice(total, size=count, replace=False)
        return [pool[i] for i in idx]
    # Too many subsets to enumerate; rejection-sample distinct ones.
    seen = set()
    out = []
    while len(out) < count:
        cand = tuple(sorted(int(c) for c in g.choice(d, size=k, replace=False)))
        if cand not in seen:
            seen.add(cand)
            out.append(cand)
    return out


def make_query_bank(
    schema, k_values=DEFAULT_K_VALUES, queries_per_k=DEFAULT_QUERIES_PER_K, seed=0
):
    """Build a query bank over ``schema``.

    For each subset size k, distinct column subsets are drawn uniformly
    without replacement, capped at the number available.  Every subset
    yields an exact-match query; its ordered columns, if any, also yield
    an at-most query (a one-sided range match meaningful only where the
    values carry an order).
    """
    d = schema.ncols
    for k in k_values:
        if k < 1 or k > d:
            raise DomainError(f"subset size {k} outside [1, {d}]")
    if queries_per_k < 1:
        raise DomainError("queries_per_k must be >= 1")
    ordered = {
        j for j, col in enumerate(schema.columns) if col.kind == data_mod.ORDERED
    }
    g = rng(seed)
    queries = []
    for k in sorted(set(k_values)):
        for subset in _distinct_subsets(d, k, queries_per_k, g):
            queries.append(Query(tuple(subset), EXACT))
            ord_part = tuple(c for c in subset if c in ordered)
            if ord_part:
                queries.append(Query(ord_part, ATMOST))
    return QueryBank(
        queries=tuple(queries),
        k_values=tuple(sorted(set(k_values))),
        ncols=d,
        bank_seed=seed,
    )


def extract_features(d_syn, x, bank):
    """Feature vector: per query, the fraction of rows matching ``x``.

    Exact queries count rows equal to x on the subset; at-most queries
    count rows whose every subset value is <= x's.  The synthetic
    dataset must be non-empty so fractions are defined.
    """
    if d_syn.n == 0:
        raise DomainError("cannot extract features from an empty dataset")
    if len(x) != bank.ncols or d_syn.schema.ncols != bank.ncols:
        raise DomainError(
            f"bank expects {bank.ncols} columns; record has {len(x)}, "
            f"dataset has {d_syn.schema.ncols}"
        )
    xa = np.asarray(x, dtype=np.int64)
    values = d_syn.values
    feats = np.empty(len(bank.queries))
    for i, q in enumerate(bank.queries):
        cols = list(q.columns)
        sub = values[:, cols]
        if q.kind == EXACT:
            match = sub == xa[cols]
        else:
            match = sub <= xa[cols]
        feats[i] = match.all(axis=1).mean()
    return feats


def build_shadow_sets(d_aux, x, n, n_shadow, seed):
    """Shadow training sets of size ``n``, labeled by x's membership.

    Half the sets contain x plus n-1 auxiliary records, half are n
    auxiliary records without forcing x in.  ``n_shadow`` must be even
    so the labels are balanced.
    """
    if n_shadow < 2 or n_shadow % 2 != 0:
        raise ConfigError(f"n_shadow must be a positive even number, got {n_shadow}")
    if n < 1:
        raise SizeError("shadow set size must be >= 1")
    if n > d_aux.n:
        raise SizeError(
            f"shadow sets of size {n} need at least {n} auxiliary records, have {d_aux.n}"
        )
    data_mod.validate_record(d_aux.schema, x)
    sets = []
    for i in range(n_shadow // 2):
        base = data_mod.sample_records(d_aux, n - 1, derive(seed, "shadow-in", i))
        sets.append((data_mod.append_record(base, x), 1))
        sets.append(
            (data_mod.sample_records(d_aux, n, derive(seed, "shadow-out", i)), 0)
        )
    return sets


@dataclass(frozen=True)
class MetaClassifier:
    """Logistic regression scorer; weights has the bias as last entry."""

    weights: np.ndarray
    training_meta: dict


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def train_meta_classifier(
    features, labels, epochs=800, learning_rate=1.0, l2=1e-4, seed=0
):
    """Fit a logistic regression by full-batch proximal gradient descent.

    The cross-entropy gradient step is followed by the exact proximal
    shrinkage of the l2 penalty, so the update stays contractive for
    arbitrarily large l2 instead of diverging.  The bias is not
    penalized.  Weights start at zero, making the fit deterministic
    given its inputs; ``seed`` is reserved for randomized variants and
    currently inert.

    Parameters
    ----------
    features : array-like, shape (m, d)
    labels : array-like of {0, 1}, length m
    epochs, learning_rate, l2 : training hyperparameters.

    Returns
    -------
    MetaClassifier
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=float)
    if X.ndim != 2:
        raise TrainingError("features must be a 2-d array")
    if len(y) != X.shape[0]:
        raise TrainingError(
            f"{X.shape[0]} feature rows but {len(y)} labels"
        )
    if X.shape[0] < 2 or len(set(y.tolist())) < 2:
        raise TrainingError("training needs examples of both classes")
    if epochs < 1 or learning_rate <= 0 or l2 < 0:
        raise TrainingError("invalid hyperparameters")
    m, d = X.shape
    Xb = np.hstack([X, np.ones((m, 1))])
    # Lipschitz constant of the logistic loss gradient; keeps the plain
    # gradient step stable for any feature scale.
    lip = 0.25 * float((Xb * Xb).sum(axis=1).max())
    step = learning_rate / lip
    w = np.zeros(d + 1)
    for _ in range(epochs):
        p = _sigmoid(Xb @ w)
        grad = Xb.T @ (p - y) / m
        w = w - step * grad
        w[:d] /= 1.0 + step * l2
    return MetaClassifier(
        weights=w,
        training_meta={
            "epochs": epochs,
            "learning_rate": learning_rate,
            "l2": l2,
            "n_examples": m,
            "n_features": d,
            "seed": seed,
        },
    )


def attack_score(meta, d_syn, x, bank):
    """Membership score of ``x`` given one released synthetic dataset."""
    feats = extract_features(d_syn, x, bank)
    w = meta.weights
    if len(feats) != len(w) - 1:
        raise DomainError(
            f"classifier expects {len(w) - 1} features, bank produced {len(feats)}"
        )
    return float(_sigmoid(feats @ w[:-1] + w[-1]))


def train_attack(
    d_aux,
    x,
    spec,
    bank,
    n,
    n_shadow,
    seed,
    epochs=800,
    learning_rate=1.0,
    l2=1e-4,
):
    """Full shadow pipeline: sets, generators, features, classifier.

    Each shadow generator is fit on its own derived seed and sampled
    once at size ``n``; the meta-classifier is trained on the resulting
    feature matrix.  Deterministic given its arguments.
    """
    sets = build_shadow_sets(d_aux, x, n, n_shadow, derive(seed, "shadow-sets"))
    feats = []
    labels = []
    for i, (ds, label) in enumerate(sets):
        gen = generators.fit(
            spec, ds, target_hint=x, seed=derive(seed, "shadow-fit", i)
        )
        d_syn = generators.sample(gen, n, derive(seed, "shadow-sample", i))
        feats.append(extract_features(d_syn, x, bank))
        labels.append(label)
    return train_meta_classifier(
        np.array(feats), np.array(labels), epochs, learning_rate, l2
    )


def meta_classifier_adversary(meta, bank, x, n_syn):
    """Adversary callable for the games: sample a release, score it."""
    if n_syn < 1:
        raise DomainError("adversary needs a positive synthetic sample size")

    def adversary(gen, seed):
        d_syn = generators.sample(gen, n_syn, seed)
        return attack_score(meta, d_syn, x, bank)

    return adversary
