import math
from fractions import Fraction

import numpy as np
import pytest

from ssc.baselines import (
    SvmModel,
    calibrate_svm,
    fit_tfidf,
    gini,
    nb_predict,
    platt_fit,
    platt_probability,
    prefilter,
    rf_predict,
    svm_objective,
    svm_predict,
    train_nb,
    train_rf,
    train_svm,
    tree_vote,
    vectorize,
)
from ssc.corpus import Dataset, Tweet
from ssc.features import AUX_DIM

ZERO_AUX = np.zeros(AUX_DIM)


class TestTfidf:
    def test_idf_for_ubiquitous_token_is_one(self):
        # df = N gives idf = log((N+1)/(N+1)) + 1 = 1.
        docs = [["common", "a"], ["common", "b"], ["common", "c"]]
        vocab, idf = fit_tfidf(docs)
        assert np.isclose(idf[vocab["common"]], 1.0)

    def test_rare_token_weighted_up(self):
        docs = [["common", "rare"], ["common"], ["common"]]
        vocab, idf = fit_tfidf(docs)
        assert idf[vocab["rare"]] > idf[vocab["common"]]

    def test_empty_tokens_only_aux(self):
        vocab, idf = fit_tfidf([["a"], ["b"]])
        aux = np.arange(AUX_DIM, dtype=float)
        vec = vectorize([], vocab, idf, aux)
        assert not vec.sparse
        assert np.array_equal(vec.to_dense(len(vocab))[len(vocab):], aux)

    def test_unseen_token_ignored(self):
        vocab, idf = fit_tfidf([["a"], ["b"]])
        vec = vectorize(["zzz"], vocab, idf, ZERO_AUX)
        assert not vec.sparse

    def test_sparse_part_l2_normalized(self):
        vocab, idf = fit_tfidf([["a", "b"], ["a"], ["b"]])
        vec = vectorize(["a", "b", "b"], vocab, idf, ZERO_AUX)
        norm = math.sqrt(sum(v * v for v in vec.sparse.values()))
        assert np.isclose(norm, 1.0)

    def test_aux_not_normalized(self):
        vocab, idf = fit_tfidf([["a"]])
        aux = np.full(AUX_DIM, 7.0)
        dense = vectorize(["a"], vocab, idf, aux).to_dense(len(vocab))
        assert (dense[len(vocab):] == 7.0).all()


def nb_posterior_oracle(docs, labels, query):
    """Exact-fraction Bayes enumeration, independent of the log-space path."""
    vocab = sorted({t for d in docs for t in d})
    v = len(vocab)
    n = len(docs)
    posterior = []
    for cls in (0, 1):
        class_docs = [d for d, l in zip(docs, labels) if l == cls]
        prior = Fraction(len(class_docs), n)
        total = sum(len(d) for d in class_docs)
        likelihood = prior
        for tok in query:
            if tok not in vocab:
                continue
            count = sum(d.count(tok) for d in class_docs)
            likelihood *= Fraction(count + 1, total + v)
        posterior.append(likelihood)
    total = posterior[0] + posterior[1]
    return float(posterior[1] / total)


class TestNaiveBayes:
    def test_symmetric_two_doc_corpus(self):
        model = train_nb([["a"], ["b"]], [1, 0])
        cls, p = nb_predict(model, ["a"])
        assert cls == 1 and p > 0.5
        _, p_both = nb_predict(model, ["a", "b"])
        assert np.isclose(p_both, 0.5)

    def test_prior_only_for_unknown_tokens(self):
        model = train_nb([["a"], ["a"], ["b"]], [1, 1, 0])
        _, p = nb_predict(model, ["zzz"])
        assert np.isclose(p, 2 / 3)

    def test_matches_exact_enumeration(self):
        local = np.random.default_rng(31)
        vocab = ["a", "b", "c", "d", "e"]
        for _ in range(30):
            n_docs = int(local.integers(2, 7))
            docs = [[vocab[j] for j in local.integers(0, 5, size=local.integers(1, 6))]
                    for _ in range(n_docs)]
            labels = local.integers(0, 2, size=n_docs).tolist()
            if len(set(labels)) < 2:
                labels[0] = 1 - labels[0]
            model = train_nb(docs, labels)
            query = [vocab[j] for j in local.integers(0, 5, size=4)]
            _, p = nb_predict(model, query)
            assert abs(p - nb_posterior_oracle(docs, labels, query)) <= 1e-12

    def test_likelihoods_form_distribution(self):
        model = train_nb([["a", "b"], ["c"]], [1, 0])
        sums = np.exp(model.log_likelihood).sum(axis=1)
        assert np.abs(sums - 1.0).max() < 1e-9

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            train_nb([["a"], ["b"]], [1, 1])

    def test_bootstrap_differentiates_members(self):
        docs = [[w] for w in "abcdefgh"]
        labels = [1, 0] * 4
        a = train_nb(docs, labels, bootstrap_seed=1)
        b = train_nb(docs, labels, bootstrap_seed=2)
        assert not np.array_equal(a.log_likelihood, b.log_likelihood) or a.vocab != b.vocab


class TestSvm:
    def test_separable_pair(self):
        x = np.array([[1.0, 0.5], [-1.0, -0.5]])
        y = [1, 0]
        model = train_svm(x, y, lam=1e-2, epochs=50, seed=0)
        assert model.score(x[0]) > 0 and model.score(x[1]) < 0

    def test_objective_final_leq_initial(self):
        local = np.random.default_rng(4)
        x = np.vstack([local.normal(1.0, 1.0, size=(40, 5)),
                       local.normal(-1.0, 1.0, size=(40, 5))])
        y = [1] * 40 + [0] * 40
        lam = 1e-3
        initial = svm_objective(SvmModel(weights=np.zeros(5)), x, y, lam)
        model = train_svm(x, y, lam=lam, epochs=5, seed=0)
        assert svm_objective(model, x, y, lam) <= initial

    def test_deterministic_under_seed(self):
        local = np.random.default_rng(5)
        x = local.normal(size=(30, 4))
        y = (x[:, 0] > 0).astype(int)
        a = train_svm(x, y, seed=3)
        b = train_svm(x, y, seed=3)
        assert np.array_equal(a.weights, b.weights)

    def test_scale_invariance_at_matched_lambda(self):
        # Scaling inputs by c = 2 (exact in floats) with lambda' = c^2 lambda
        # reproduces every decision sign on the training points.
        local = np.random.default_rng(6)
        x = local.normal(size=(50, 6))
        y = (x @ local.normal(size=6) > 0).astype(int)
        lam = 1e-3
        base = train_svm(x, y, lam=lam, epochs=3, seed=1)
        scaled = train_svm(2.0 * x, y, lam=4.0 * lam, epochs=3, seed=1)
        s_base = np.sign(x @ base.weights)
        s_scaled = np.sign((2.0 * x) @ scaled.weights)
        assert np.array_equal(s_base, s_scaled)

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            train_svm(np.ones((3, 2)), [1, 1, 1])

    def test_predict_requires_calibration(self):
        model = SvmModel(weights=np.ones(2))
        with pytest.raises(ValueError, match="calibrat"):
            svm_predict(model, np.ones(2))


class TestPlatt:
    def test_symmetric_scores_give_zero_intercept(self):
        scores = [-1.0] * 50 + [1.0] * 50
        labels = [0] * 50 + [1] * 50
        a, b = platt_fit(scores, labels)
        assert abs(b) < 1e-6
        assert a < 0  # higher score -> higher positive probability

    def test_monotone_in_score(self):
        local = np.random.default_rng(7)
        for trial in range(10):
            scores = local.normal(size=60)
            labels = (scores + local.normal(scale=0.5, size=60) > 0).astype(int)
            if labels.min() == labels.max():
                continue
            a, b = platt_fit(scores, labels)
            assert a < 0
            grid = np.linspace(-3, 3, 7)
            probs = [platt_probability(s, a, b) for s in grid]
            assert all(p1 <= p2 + 1e-12 for p1, p2 in zip(probs, probs[1:]))

    def test_constant_scores_give_smoothed_base_rate(self):
        scores = [0.5] * 10
        labels = [1] * 7 + [0] * 3
        a, b = platt_fit(scores, labels)
        p = platt_probability(0.5, a, b)
        expected = (7 * (8 / 9) + 3 * (1 / 5)) / 10  # mean smoothed target
        assert abs(p - expected) < 1e-6

    def test_probabilities_in_open_interval(self):
        local = np.random.default_rng(8)
        scores = local.normal(size=40)
        labels = (scores > 0).astype(int)
        a, b = platt_fit(scores, labels)
        for s in np.linspace(-10, 10, 21):
            p = platt_probability(s, a, b)
            assert 0.0 < p < 1.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            platt_fit([1.0, 2.0], [1, 1])

    def test_gradient_descends_newton_matches_numeric_optimum(self):
        # The fitted (A, B) should beat small perturbations on the NLL.
        local = np.random.default_rng(9)
        scores = local.normal(size=80)
        labels = (scores + local.normal(scale=0.8, size=80) > 0).astype(int)
        a, b = platt_fit(scores, labels)
        n_pos = labels.sum()
        n_neg = len(labels) - n_pos
        target = np.where(labels == 1, (n_pos + 1) / (n_pos + 2), 1 / (n_neg + 2))

        def nll(aa, bb):
            z = aa * scores + bb
            return float(np.sum(np.logaddexp(0, z) - (1 - target) * z))

        base = nll(a, b)
        for da, db in ((1e-4, 0), (-1e-4, 0), (0, 1e-4), (0, -1e-4)):
            assert nll(a + da, b + db) >= base - 1e-9


class TestRandomForest:
    def test_gini_cases(self):
        assert gini(np.array([5.0, 0.0])) == 0.0
        assert gini(np.array([4.0, 4.0])) == 0.5

    def test_memorizes_consistent_data(self):
        local = np.random.default_rng(10)
        x = local.normal(size=(40, 6))
        y = (x[:, 2] * x[:, 4] > 0).astype(int)
        model = train_rf(x, y, trees=1, max_depth=None, seed=0, bootstrap=False)
        pred = [rf_predict(model, row)[0] for row in x]
        assert (np.array(pred) == y).all()

    def test_prediction_invariant_to_tree_order(self):
        local = np.random.default_rng(11)
        x = local.normal(size=(30, 4))
        y = (x[:, 0] > 0).astype(int)
        model = train_rf(x, y, trees=9, max_depth=4, seed=1)
        probe = local.normal(size=4)
        before = rf_predict(model, probe)
        model.trees.reverse()
        assert rf_predict(model, probe) == before

    def test_majority_equals_explicit_tally(self):
        local = np.random.default_rng(12)
        x = local.normal(size=(30, 4))
        y = (x[:, 1] > 0).astype(int)
        model = train_rf(x, y, trees=7, max_depth=3, seed=2)
        probe = local.normal(size=4)
        votes = [tree_vote(t, probe) for t in model.trees]
        cls, p = rf_predict(model, probe)
        assert p == sum(votes) / 7
        assert cls == int(sum(votes) > 3.5)

    def test_deterministic_under_seed(self):
        local = np.random.default_rng(13)
        x = local.normal(size=(25, 3))
        y = (x[:, 0] > 0).astype(int)
        a = train_rf(x, y, trees=5, seed=7)
        b = train_rf(x, y, trees=5, seed=7)
        for ta, tb in zip(a.trees, b.trees):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.threshold, tb.threshold)

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            train_rf(np.zeros((0, 3)), [])


def make_calibrated_svm():
    local = np.random.default_rng(14)
    x = np.vstack([local.normal(2.0, 0.7, size=(60, 3)),
                   local.normal(-2.0, 0.7, size=(60, 3))])
    y = [1] * 60 + [0] * 60
    model = train_svm(x, y, lam=1e-3, epochs=20, seed=0)
    return calibrate_svm(model, x, y)


class TestPrefilter:
    DATASET = Dataset([Tweet(f"t{i}", f"text number {i}") for i in range(40)])

    def encoder(self):
        local = np.random.default_rng(15)
        vectors = {t.id: local.normal(scale=2.0, size=3) for t in self.DATASET}
        return lambda text: vectors["t" + text.split()[-1]]

    def test_threshold_one_empty(self):
        model = make_calibrated_svm()
        result = prefilter(self.DATASET, model, self.encoder(), threshold=1.0,
                           sample_n=5)
        assert len(result.sample) == 0 and result.warned

    def test_threshold_zero_samples_everything(self):
        model = make_calibrated_svm()
        result = prefilter(self.DATASET, model, self.encoder(), threshold=0.0,
                           sample_n=10, seed=1)
        assert len(result.sample) == 10
        assert result.n_qualified == len(self.DATASET)

    def test_every_returned_item_above_threshold(self):
        model = make_calibrated_svm()
        encode = self.encoder()
        result = prefilter(self.DATASET, model, encode, threshold=0.8)
        assert len(result.sample) == result.n_qualified
        for tweet in result.sample:
            cls, p_pos = svm_predict(model, encode(tweet.text))
            assert (p_pos if cls == 1 else 1 - p_pos) > 0.8

    def test_subset_of_input(self):
        model = make_calibrated_svm()
        result = prefilter(self.DATASET, model, self.encoder(), threshold=0.5,
                           sample_n=7, seed=2)
        ids = {t.id for t in self.DATASET}
        assert all(t.id in ids for t in result.sample)
        assert len(result.sample) <= 7

    def test_uncalibrated_model_rejected(self):
        with pytest.raises(ValueError):
            prefilter(self.DATASET, SvmModel(weights=np.ones(3)), self.encoder())

    def test_deterministic_sampling(self):
        model = make_calibrated_svm()
        a = prefilter(self.DATASET, model, self.encoder(), 0.0, 5, seed=9)
        b = prefilter(self.DATASET, model, self.encoder(), 0.0, 5, seed=9)
        assert [t.id for t in a.sample] == [t.id for t in b.sample]
