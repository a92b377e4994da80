"""Majority-vote ensembling over CNN and classical members.

A member is anything with a kind and a per-example predict returning
(class, positive probability). The two paper-faithful six-member rosters
are 2x char_aux + 2x char_cnn + 2x word_aux (CNN ensemble) and
2x svm + 2x rf + 2x nb (classical ensemble); "free" mode allows arbitrary
compositions.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import baselines, models
from .baselines import NbModel, RfModel, SvmModel, Tree
from .encoding import EncodedSet
from .nn import ModelCheckpoint, load_checkpoint, save_checkpoint

CNN_KINDS = ("char_aux", "char_cnn", "word_aux")
ML_KINDS = ("svm", "rf", "nb")
CNN_COMPOSITION = Counter({"char_aux": 2, "char_cnn": 2, "word_aux": 2})
ML_COMPOSITION = Counter({"svm": 2, "rf": 2, "nb": 2})


class EnsembleError(RuntimeError):
    """A member failed to load or predict; the message names the member."""


def majority_vote(votes: Sequence[int], probs: Sequence[float]) -> int:
    """Strict majority of binary votes.

    On a tie, the mean positive probability decides: strictly above 0.5
    means positive, otherwise negative.
    """
    if len(votes) == 0:
        raise ValueError("majority_vote requires at least one vote")
    if len(votes) != len(probs):
        raise ValueError("votes and probabilities must be aligned")
    positive = sum(1 for v in votes if v == 1)
    negative = len(votes) - positive
    if positive != negative:
        return 1 if positive > negative else 0
    return 1 if float(np.mean(probs)) > 0.5 else 0


# ---------------------------------------------------------------------------
# Members
# ---------------------------------------------------------------------------

@dataclass
class CnnMember:
    """Wraps a built CNN model (word_aux / char_aux / char_cnn)."""

    model: models.Model

    @property
    def kind(self) -> str:
        return self.model.kind

    def predict_batch(self, enc: EncodedSet) -> tuple[np.ndarray, np.ndarray]:
        classes = np.zeros(len(enc), dtype=np.int64)
        probs = np.zeros(len(enc))
        for start in range(0, len(enc), 256):
            idx = np.arange(start, min(start + 256, len(enc)))
            c, p = models.predict_batch(self.model, enc.subset(idx))
            classes[idx] = c
            probs[idx] = p
        return classes, probs

    def predict(self, enc: EncodedSet, i: int = 0) -> tuple[int, float]:
        c, p = models.predict_batch(self.model, enc.subset([i]))
        return int(c[0]), float(p[0])


@dataclass
class BowMember:
    """Wraps a classical model plus the TF-IDF vectorizer it was fit with."""

    kind: str  # "svm" | "rf" | "nb"
    model: NbModel | SvmModel | RfModel
    vocab: dict[str, int] | None = None
    idf: np.ndarray | None = None

    def _vector(self, enc: EncodedSet, i: int) -> np.ndarray:
        bow = baselines.vectorize(enc.tokens[i], self.vocab, self.idf, enc.aux[i])
        return bow.to_dense(len(self.vocab))

    def predict(self, enc: EncodedSet, i: int = 0) -> tuple[int, float]:
        if self.kind == "nb":
            return baselines.nb_predict(self.model, enc.tokens[i])
        if self.kind == "svm":
            return baselines.svm_predict(self.model, self._vector(enc, i))
        if self.kind == "rf":
            return baselines.rf_predict(self.model, self._vector(enc, i))
        raise EnsembleError(f"unknown member kind {self.kind!r}")

    def predict_batch(self, enc: EncodedSet) -> tuple[np.ndarray, np.ndarray]:
        classes = np.zeros(len(enc), dtype=np.int64)
        probs = np.zeros(len(enc))
        for i in range(len(enc)):
            classes[i], probs[i] = self.predict(enc, i)
        return classes, probs


Member = CnnMember | BowMember


@dataclass(frozen=True)
class EnsembleSpec:
    """members: (kind, ref) pairs; ref is a Member or a checkpoint path.

    mode "strict" requires one of the two six-member compositions;
    "free" allows anything non-empty.
    """

    members: tuple[tuple[str, object], ...]
    mode: str = "strict"

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        if self.mode not in ("strict", "free"):
            raise ValueError("mode must be 'strict' or 'free'")
        if self.mode == "strict":
            composition = Counter(kind for kind, _ in self.members)
            if composition not in (CNN_COMPOSITION, ML_COMPOSITION):
                raise ValueError(
                    f"strict ensembles need 2x{'/2x'.join(CNN_KINDS)} or "
                    f"2x{'/2x'.join(ML_KINDS)}; got {dict(composition)}"
                )


def load_member(kind: str, ref) -> Member:
    """Materialize a member from an in-memory object or a checkpoint path."""
    if isinstance(ref, (CnnMember, BowMember)):
        return ref
    if isinstance(ref, models.Model):
        return CnnMember(ref)
    cp = ref if isinstance(ref, ModelCheckpoint) else load_checkpoint(ref)
    if kind in CNN_KINDS:
        return CnnMember(models.model_from_checkpoint(cp))
    return _baseline_from_checkpoint(kind, cp)


def resolve_members(spec: EnsembleSpec) -> list[Member]:
    out = []
    for i, (kind, ref) in enumerate(spec.members):
        try:
            member = load_member(kind, ref)
        except Exception as e:
            raise EnsembleError(f"member {i} ({kind}): failed to load: {e}") from e
        if member.kind != kind:
            raise EnsembleError(f"member {i}: declared kind {kind!r} but loaded {member.kind!r}")
        out.append(member)
    return out


def ensemble_predict(spec: EnsembleSpec, enc: EncodedSet,
                     i: int = 0) -> tuple[int, list[tuple[str, int, float]]]:
    """Vote all members on one encoded example.

    Returns (ensemble class, per-member breakdown of (kind, vote, p_pos)).
    """
    members = resolve_members(spec)
    breakdown = []
    for j, member in enumerate(members):
        try:
            vote, p_pos = member.predict(enc, i)
        except Exception as e:
            raise EnsembleError(f"member {j} ({member.kind}): failed to predict: {e}") from e
        breakdown.append((member.kind, vote, p_pos))
    cls = majority_vote([v for _, v, _ in breakdown], [p for _, _, p in breakdown])
    return cls, breakdown


def ensemble_vote_batch(members: Sequence[Member], enc: EncodedSet) -> np.ndarray:
    """Majority-vote classes for every example, from per-member batch votes."""
    all_classes = []
    all_probs = []
    for member in members:
        c, p = member.predict_batch(enc)
        all_classes.append(c)
        all_probs.append(p)
    classes = np.stack(all_classes)  # (M, N)
    probs = np.stack(all_probs)
    out = np.zeros(len(enc), dtype=np.int64)
    for i in range(len(enc)):
        out[i] = majority_vote(classes[:, i].tolist(), probs[:, i].tolist())
    return out


# ---------------------------------------------------------------------------
# Baseline member serialization (shared checkpoint container)
# ---------------------------------------------------------------------------

_KIND_TAGS = {"nb": "NB1", "svm": "SVM1", "rf": "RF1"}
_TAG_KINDS = {v: k for k, v in _KIND_TAGS.items()}


def save_baseline_member(member: BowMember, path) -> None:
    """Serialize a classical member with its model-kind tag (NB1/SVM1/RF1)."""
    tag = _KIND_TAGS[member.kind]
    arrays: dict[str, np.ndarray] = {}
    metadata = {"kind": tag}
    if member.kind == "nb":
        m: NbModel = member.model
        arrays["log_prior"] = m.log_prior
        arrays["log_likelihood"] = m.log_likelihood
        metadata["vocab"] = " ".join(m.vocab)
    else:
        metadata["vocab"] = " ".join(member.vocab)
        arrays["idf"] = member.idf
        if member.kind == "svm":
            m: SvmModel = member.model
            if not m.calibrated:
                raise ValueError("refusing to serialize an uncalibrated SVM")
            arrays["weights"] = m.weights
            arrays["bias"] = np.array([m.bias])
            arrays["platt"] = np.array([m.platt_a, m.platt_b])
        else:
            m: RfModel = member.model
            metadata["n_trees"] = str(len(m.trees))
            metadata["rf_seed"] = str(m.seed)
            for t, tree in enumerate(m.trees):
                arrays[f"tree{t}_feature"] = tree.feature.astype(np.float64)
                arrays[f"tree{t}_threshold"] = tree.threshold
                arrays[f"tree{t}_left"] = tree.left.astype(np.float64)
                arrays[f"tree{t}_right"] = tree.right.astype(np.float64)
                arrays[f"tree{t}_counts"] = tree.counts
    save_checkpoint(ModelCheckpoint(epoch=0, arrays=arrays, metadata=metadata), path)


def _baseline_from_checkpoint(kind: str, cp: ModelCheckpoint) -> BowMember:
    tag = cp.metadata.get("kind", "")
    if _TAG_KINDS.get(tag) != kind:
        raise EnsembleError(f"checkpoint kind tag {tag!r} does not match {kind!r}")
    terms = cp.metadata.get("vocab", "").split()
    vocab = {t: i for i, t in enumerate(terms)}
    if kind == "nb":
        model = NbModel(vocab, cp.arrays["log_prior"].astype(np.float64),
                        _renormalize_rows(cp.arrays["log_likelihood"]))
        return BowMember("nb", model)
    idf = cp.arrays["idf"].astype(np.float64)
    if kind == "svm":
        platt = cp.arrays["platt"]
        model = SvmModel(weights=cp.arrays["weights"].astype(np.float64),
                         bias=float(cp.arrays["bias"][0]),
                         platt_a=float(platt[0]), platt_b=float(platt[1]))
        return BowMember("svm", model, vocab, idf)
    trees = []
    for t in range(int(cp.metadata["n_trees"])):
        trees.append(Tree(
            feature=cp.arrays[f"tree{t}_feature"].astype(np.int64),
            threshold=cp.arrays[f"tree{t}_threshold"].astype(np.float64),
            left=cp.arrays[f"tree{t}_left"].astype(np.int64),
            right=cp.arrays[f"tree{t}_right"].astype(np.int64),
            counts=cp.arrays[f"tree{t}_counts"].astype(np.float64),
        ))
    model = RfModel(trees, seed=int(cp.metadata.get("rf_seed", "0")))
    return BowMember("rf", model, vocab, idf)


def _renormalize_rows(log_likelihood: np.ndarray) -> np.ndarray:
    """Repair float32 storage drift so the NbModel invariant holds on load."""
    ll = log_likelihood.astype(np.float64)
    ll -= np.log(np.exp(ll).sum(axis=1, keepdims=True))
    return ll
