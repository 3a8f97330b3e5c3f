"""Synthetic data generators with a shared fit/sample interface.

Four kinds: independent per-column marginals, a Bayesian network with
greedy structure search, the same network with Laplace-noised tables,
and an analytic toy whose release is a single bit.  The toy exists so
game-level estimates can be checked against closed-form error rates;
the network kinds are the objects actually under evaluation.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import data as data_mod
from .errors import DomainError, FitError, UnsupportedOperationError
from .seeds import derive, rng

INDEPENDENT = "independent"
BAYNET = "baynet"
PRIVBAYNET = "privbaynet"
TOY = "toy"

_KINDS = (INDEPENDENT, BAYNET, PRIVBAYNET, TOY)


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative description of a generator.

    Parameters
    ----------
    kind : str
        One of ``"independent"``, ``"baynet"``, ``"privbaynet"``,
        ``"toy"``.
    max_parents : int, optional
        Parent budget per column for the network kinds.
    epsilon : float, optional
        Privacy budget; required for ``"privbaynet"``.
    p_in, p_out : float, optional
        Toy release-bit probabilities when the fit target is / is not a
        member of the training data; required for ``"toy"``.
    smoothing : float, optional
        Pseudo-count added to every table cell before normalizing.
    mi_floor : float, optional
        Parent candidates with mutual information below this are skipped.
    """

    kind: str
    max_parents: int = 1
    epsilon: float = None
    p_in: float = None
    p_out: float = None
    smoothing: float = 1.0
    mi_floor: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown generator kind {self.kind!r}")
        if self.max_parents < 0:
            raise DomainError("max_parents must be >= 0")
        if self.smoothing < 0:
            raise DomainError("smoothing must be >= 0")
        if self.mi_floor < 0:
            raise DomainError("mi_floor must be >= 0")
        if self.kind == PRIVBAYNET:
            if self.epsilon is None or not self.epsilon > 0:
                raise DomainError("privbaynet requires epsilon > 0")
        if self.kind == TOY:
            for name, p in (("p_in", self.p_in), ("p_out", self.p_out)):
                if p is None or not 0.0 <= p <= 1.0:
                    raise DomainError(f"toy requires {name} in [0, 1]")


@dataclass(frozen=True)
class Structure:
    """Column visit order and per-column parent sets.

    ``order`` is a topological order: every column's parents appear
    earlier in it, which is what ancestral sampling needs.
    """

    order: tuple
    parents: tuple


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table for one column.

    counts holds the (smoothed, possibly noised and clamped) per-cell
    counts the probabilities were normalized from; probs has one row per
    parent-value combination, each summing to 1.
    """

    parents: tuple
    parent_sizes: tuple
    counts: np.ndarray
    probs: np.ndarray


@dataclass(frozen=True)
class FittedGenerator:
    """A generator fit on one training dataset."""

    spec: GeneratorSpec
    schema: object
    structure: Structure = None
    tables: tuple = None
    toy_member: bool = None
    fit_seed: int = 0


def mutual_information(a, b, a_size, b_size):
    """Empirical mutual information (nats) of two index columns."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = len(a)
    if n == 0:
        return 0.0
    joint = np.bincount(a * b_size + b, minlength=a_size * b_size).astype(float)
    joint = joint.reshape(a_size, b_size) / n
    pa = joint.sum(axis=1)
    pb = joint.sum(axis=0)
    mask = joint > 0
    outer = np.outer(pa, pb)
    return float(np.sum(joint[mask] * np.log(joint[mask] / outer[mask])))


def learn_structure(training, max_parents, seed, mi_floor=0.0):
    """Greedy Bayesian-network structure over the training columns.

    Columns are visited in a seeded random order; each picks up to
    ``max_parents`` already-visited columns, ranked by empirical pairwise
    mutual information with the child, skipping candidates whose score
    falls below ``mi_floor``.  The visit order doubles as the sampling
    order.
    """
    if training.n == 0:
        raise FitError("cannot learn a structure from an empty dataset")
    sizes = training.schema.sizes
    d = training.schema.ncols
    order = tuple(int(i) for i in rng(seed).permutation(d))
    parents = [None] * d
    visited = []
    for col in order:
        scored = []
        for cand in visited:
            mi = mutual_information(
                training.values[:, col], training.values[:, cand], sizes[col], sizes[cand]
            )
            if mi < mi_floor:
                continue
            scored.append((mi, cand))
        # Highest MI first; ties broken by column index for determinism.
        scored.sort(key=lambda t: (-t[0], t[1]))
        parents[col] = tuple(c for _, c in scored[:max_parents])
        visited.append(col)
    return Structure(order=order, parents=tuple(parents))


def _parent_combo_index(values, parents, parent_sizes):
    if not parents:
        return np.zeros(values.shape[0], dtype=np.int64)
    cols = tuple(values[:, p] for p in parents)
    return np.ravel_multi_index(cols, parent_sizes)


def _normalize_rows(counts, arity):
    totals = counts.sum(axis=1, keepdims=True)
    probs = np.empty_like(counts)
    zero = totals[:, 0] <= 0
    nz = ~zero
    probs[nz] = counts[nz] / totals[nz]
    probs[zero] = 1.0 / arity
    return probs


def estimate_tables(training, structure, smoothing):
    """Maximum-likelihood tables with additive smoothing.

    Each cell gets ``(count + smoothing)``; rows whose total is zero
    (unseen parent combination with zero smoothing) fall back to
    uniform.
    """
    if training.n == 0:
        raise FitError("cannot estimate tables from an empty dataset")
    sizes = training.schema.sizes
    tables = []
    for col in range(training.schema.ncols):
        parents = structure.parents[col]
        parent_sizes = tuple(sizes[p] for p in parents)
        n_combos = int(np.prod(parent_sizes)) if parents else 1
        arity = sizes[col]
        combo = _parent_combo_index(training.values, parents, parent_sizes)
        flat = np.bincount(
            combo * arity + training.values[:, col], minlength=n_combos * arity
        ).astype(float)
        counts = flat.reshape(n_combos, arity) + smoothing
        probs = _normalize_rows(counts, arity)
        tables.append(Cpt(parents, parent_sizes, counts, probs))
    return tuple(tables)


def privatize_tables(tables, epsilon, seed):
    """Laplace-noise every table cell and renormalize.

    The budget is split equally across columns, and each count has
    sensitivity 2 under replacement of one training record, so the
    noise scale is ``(n_columns * 2) / epsilon``.  Noised counts are
    clamped at zero; rows that become all-zero fall back to uniform.
    The structure itself is left untouched.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be > 0")
    ncols = len(tables)
    scale = (ncols * 2.0) / epsilon
    out = []
    for i, cpt in enumerate(tables):
        g = rng(derive(seed, "privatize-col", i))
        noisy = cpt.counts + g.laplace(0.0, scale, size=cpt.counts.shape)
        clamped = np.maximum(noisy, 0.0)
        arity = cpt.probs.shape[1]
        out.append(
            Cpt(cpt.parents, cpt.parent_sizes, clamped, _normalize_rows(clamped, arity))
        )
    return tuple(out)


def fit(spec, training, target_hint=None, seed=0):
    """Fit a generator described by ``spec`` on ``training``.

    The toy kind ignores the training distribution entirely: it only
    records whether ``target_hint`` (required for it) appears in the
    training data, so an empty training dataset is acceptable.  The
    other kinds require a non-empty training dataset.
    """
    if spec.kind == TOY:
        if target_hint is None:
            raise FitError("toy generator requires a target_hint record")
        member = data_mod.contains(training, target_hint)
        return FittedGenerator(
            spec, training.schema, toy_member=member, fit_seed=seed
        )
    if training.n == 0:
        raise FitError(f"{spec.kind} generator requires non-empty training data")
    d = training.schema.ncols
    if spec.kind == INDEPENDENT:
        structure = Structure(order=tuple(range(d)), parents=((),) * d)
    else:
        structure = learn_structure(
            training, spec.max_parents, derive(seed, "structure"), spec.mi_floor
        )
    tables = estimate_tables(training, structure, spec.smoothing)
    if spec.kind == PRIVBAYNET:
        tables = privatize_tables(tables, spec.epsilon, derive(seed, "privatize"))
    return FittedGenerator(spec, training.schema, structure, tables, fit_seed=seed)


def sample(gen, n, seed):
    """Draw ``n`` records by ancestral sampling.

    The toy kind releases a bit, not records, so asking it for a
    non-empty sample raises UnsupportedOperationError; ``n == 0``
    returns an empty dataset for any kind.
    """
    if n < 0:
        raise DomainError("sample size must be non-negative")
    if n == 0:
        return data_mod.Dataset(gen.schema, np.empty((0, gen.schema.ncols)), validate=False)
    if gen.spec.kind == TOY:
        raise UnsupportedOperationError("toy generator does not sample records")
    g = rng(seed)
    d = gen.schema.ncols
    values = np.zeros((n, d), dtype=np.int64)
    for col in gen.structure.order:
        cpt = gen.tables[col]
        combo = _parent_combo_index(values, cpt.parents, cpt.parent_sizes)
        cum = np.cumsum(cpt.probs, axis=1)[combo]
        u = g.random(n)
        picked = (cum <= u[:, None]).sum(axis=1)
        arity = cpt.probs.shape[1]
        values[:, col] = np.minimum(picked, arity - 1)
    return data_mod.Dataset(gen.schema, values, validate=False)


def release_bit(gen, seed):
    """The toy generator's release: 1 w.p. p_in for a member fit, p_out else."""
    if gen.spec.kind != TOY:
        raise UnsupportedOperationError(
            f"{gen.spec.kind} generator does not release a bit"
        )
    p = gen.spec.p_in if gen.toy_member else gen.spec.p_out
    return int(rng(seed).random() < p)


def _schema_to_doc(schema):
    return [
        {
            "name": c.name,
            "kind": c.kind,
            "size": c.size,
            "labels": list(c.labels) if c.labels is not None else None,
        }
        for c in schema.columns
    ]


def _schema_from_doc(doc):
    cols = tuple(
        data_mod.Column(
            c["name"], c["kind"], c["size"],
            tuple(c["labels"]) if c["labels"] is not None else None,
        )
        for c in doc
    )
    return data_mod.Schema(cols)


def generator_to_text(gen):
    """Serialize a fitted generator to one line of versioned JSON."""
    spec = gen.spec
    doc = {
        "format": "privgames-generator",
        "version": 1,
        "spec": {
            "kind": spec.kind,
            "max_parents": spec.max_parents,
            "epsilon": spec.epsilon,
            "p_in": spec.p_in,
            "p_out": spec.p_out,
            "smoothing": spec.smoothing,
            "mi_floor": spec.mi_floor,
        },
        "schema": _schema_to_doc(gen.schema),
        "structure": None
        if gen.structure is None
        else {
            "order": list(gen.structure.order),
            "parents": [list(p) for p in gen.structure.parents],
        },
        "tables": None
        if gen.tables is None
        else [
            {
                "parents": list(c.parents),
                "parent_sizes": list(c.parent_sizes),
                "counts": c.counts.tolist(),
                "probs": c.probs.tolist(),
            }
            for c in gen.tables
        ],
        "toy_member": gen.toy_member,
        "fit_seed": gen.fit_seed,
    }
    return json.dumps(doc, sort_keys=True)


def generator_from_text(text):
    """Inverse of generator_to_text."""
    doc = json.loads(text)
    if doc.get("format") != "privgames-generator" or doc.get("version") != 1:
        raise DomainError("not a version-1 generator document")
    s = doc["spec"]
    spec = GeneratorSpec(
        kind=s["kind"],
        max_parents=s["max_parents"],
        epsilon=s["epsilon"],
        p_in=s["p_in"],
        p_out=s["p_out"],
        smoothing=s["smoothing"],
        mi_floor=s["mi_floor"],
    )
    schema = _schema_from_doc(doc["schema"])
    structure = None
    if doc["structure"] is not None:
        structure = Structure(
            order=tuple(doc["structure"]["order"]),
            parents=tuple(tuple(p) for p in doc["structure"]["parents"]),
        )
    tables = None
    if doc["tables"] is not None:
        tables = tuple(
            Cpt(
                tuple(t["parents"]),
                tuple(t["parent_sizes"]),
                np.array(t["counts"], dtype=float).reshape(
                    len(t["probs"]), len(t["probs"][0])
                ),
                np.array(t["probs"], dtype=float).reshape(
                    len(t["probs"]), len(t["probs"][0])
                ),
            )
            for t in doc["tables"]
        )
    return FittedGenerator(
        spec, schema, structure, tables, doc["toy_member"], doc["fit_seed"]
    )


def save_generator(gen, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(generator_to_text(gen) + "\n")


def load_generator(path):
    with open(path, encoding="utf-8") as fh:
        return generator_from_text(fh.read())
