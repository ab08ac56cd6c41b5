import math
import unittest
from unittest.mock import patch

import numpy as np

from mlembed.core_alias import AliasTable
from mlembed.core_errors import ConfigError, EmbeddingMismatchError, EmptyCorpusError
from mlembed.sgns import (
    EmbeddingSpace,
    TrainConfig,
    _dense_update,
    _scatter_add,
    _sparse_update,
    concat,
    cosine_similarity,
    distance,
    pair_loss_and_grad,
    train,
)
from mlembed.walker import WalkCorpus


def _alternating_corpus(walks_per_pair: int = 20, length: int = 40) -> WalkCorpus:
    walks = []
    for _ in range(walks_per_pair):
        walks.append([i % 2 for i in range(length)])
        walks.append([2 + i % 2 for i in range(length)])
    return WalkCorpus(walks=walks)


def _numeric_grad(fn, x: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(x)
    for i in range(x.size):
        plus = x.copy()
        minus = x.copy()
        plus[i] += step
        minus[i] -= step
        grad[i] = (fn(plus) - fn(minus)) / (2.0 * step)
    return grad


def _relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-8)
    return float(np.max(np.abs(a - b))) / scale


class PairLossTest(unittest.TestCase):
    def test_orthogonal_pair_costs_log_two(self) -> None:
        u = np.array([1.0, 0.0, 0.0])
        v = np.array([0.0, 3.0, 4.0])
        for positive in (True, False):
            loss, grad_u, grad_v = pair_loss_and_grad(u, v, positive)
            self.assertAlmostEqual(loss, math.log(2.0), places=12)
            self.assertAlmostEqual(float(np.linalg.norm(grad_u)), 2.5, places=12)
            self.assertAlmostEqual(float(np.linalg.norm(grad_v)), 0.5, places=12)

    def test_zero_vectors_have_zero_gradient(self) -> None:
        loss, grad_u, grad_v = pair_loss_and_grad(np.zeros(4), np.zeros(4), True)
        self.assertAlmostEqual(loss, math.log(2.0), places=12)
        self.assertFalse(np.any(grad_u))
        self.assertFalse(np.any(grad_v))

    def test_gradients_match_finite_differences(self) -> None:
        rng = np.random.default_rng(7)
        step = 1e-5
        worst = 0.0
        for trial in range(100):
            u = rng.normal(scale=0.7, size=8)
            v = rng.normal(scale=0.7, size=8)
            positive = trial % 2 == 0
            _loss, grad_u, grad_v = pair_loss_and_grad(u, v, positive)
            num_u = _numeric_grad(lambda x: pair_loss_and_grad(x, v, positive)[0], u, step)
            num_v = _numeric_grad(lambda x: pair_loss_and_grad(u, x, positive)[0], v, step)
            worst = max(worst, _relative_error(grad_u, num_u), _relative_error(grad_v, num_v))
        self.assertLess(worst, 1e-4)


class TrainTest(unittest.TestCase):
    def test_co_occurring_nodes_end_up_closer(self) -> None:
        corpus = _alternating_corpus()
        wins = 0
        for seed in range(10):
            cfg = TrainConfig(dim=8, window=2, negatives=2, epochs=5, seed=seed)
            space = train(corpus, 4, cfg)
            same = cosine_similarity(space.vector(0), space.vector(1))
            other = cosine_similarity(space.vector(0), space.vector(2))
            if same is not None and other is not None and same > other:
                wins += 1
        self.assertGreaterEqual(wins, 9)

    def test_epoch_loss_does_not_increase(self) -> None:
        cfg = TrainConfig(dim=8, window=2, negatives=2, epochs=4, seed=3)
        space = train(_alternating_corpus(), 4, cfg)
        losses = space.epoch_losses
        self.assertEqual(len(losses), 4)
        for before, after in zip(losses, losses[1:]):
            self.assertLessEqual(after, before * 1.02)
        self.assertLess(losses[-1], losses[0])

    def test_absent_node_gets_zero_vector(self) -> None:
        corpus = WalkCorpus(walks=[[0, 1, 0, 1], [1, 0, 1, 0], [3]])
        space = train(corpus, 5, TrainConfig(dim=6, window=1, epochs=2, seed=0))
        self.assertEqual(space.vectors.shape, (5, 6))
        self.assertFalse(np.any(space.vector(2)))
        self.assertFalse(np.any(space.vector(3)))
        self.assertFalse(np.any(space.vector(4)))
        self.assertTrue(np.any(space.vector(0)))

    def test_single_thread_training_is_bit_exact(self) -> None:
        cfg = TrainConfig(dim=6, window=2, negatives=3, epochs=2, seed=11)
        first = train(_alternating_corpus(3, 20), 4, cfg)
        second = train(_alternating_corpus(3, 20), 4, cfg)
        self.assertEqual(first.vectors.tobytes(), second.vectors.tobytes())

    def test_parallel_training_keeps_shape_and_zero_rule(self) -> None:
        corpus = _alternating_corpus(4, 20)
        corpus.walks.append([5])
        space = train(corpus, 6, TrainConfig(dim=4, window=2, epochs=2, seed=1, workers=2))
        self.assertEqual(space.vectors.shape, (6, 4))
        self.assertTrue(np.all(np.isfinite(space.vectors)))
        self.assertFalse(np.any(space.vector(4)))
        self.assertFalse(np.any(space.vector(5)))

    def test_empty_corpus_is_rejected(self) -> None:
        with self.assertRaises(EmptyCorpusError):
            train(WalkCorpus(walks=[]), 3, TrainConfig(dim=4))

    def test_out_of_range_tokens_are_rejected(self) -> None:
        with self.assertRaises(ConfigError):
            train(WalkCorpus(walks=[[0, 7]]), 3, TrainConfig(dim=4))

    def test_config_validation(self) -> None:
        for kwargs, flag in (
            (dict(dim=0), "--dim"),
            (dict(window=0), "--window"),
            (dict(negatives=-1), "--negatives"),
            (dict(epochs=0), "--epochs"),
        ):
            with self.assertRaises(ConfigError) as ctx:
                TrainConfig(**kwargs).validate()
            self.assertIn(flag, str(ctx.exception))
        with self.assertRaises(ConfigError):
            TrainConfig(initial_lr=0.001, final_lr=0.01).validate()

    def test_sparse_batches_also_separate_co_occurring_nodes(self) -> None:
        corpus = _alternating_corpus()
        wins = 0
        with patch("mlembed.sgns.SGNS_DENSE_MAX_NODES", 0):
            for seed in range(10):
                cfg = TrainConfig(dim=8, window=2, negatives=2, epochs=5, seed=seed)
                space = train(corpus, 4, cfg)
                same = cosine_similarity(space.vector(0), space.vector(1))
                other = cosine_similarity(space.vector(0), space.vector(2))
                if same is not None and other is not None and same > other:
                    wins += 1
        self.assertGreaterEqual(wins, 9)

    def test_dense_and_sparse_updates_agree_without_negatives(self) -> None:
        rng = np.random.default_rng(4)
        w_in = rng.normal(scale=0.3, size=(6, 5))
        w_out = rng.normal(scale=0.3, size=(6, 5))
        centers = np.array([0, 0, 1, 3, 3, 3, 5])
        contexts = np.array([1, 1, 0, 2, 4, 2, 0])
        dense_in, dense_out = w_in.copy(), w_out.copy()
        sparse_in, sparse_out = w_in.copy(), w_out.copy()
        dense_loss = _dense_update(dense_in, dense_out, centers, contexts, None, 0, rng, 0.05)
        sparse_loss = _sparse_update(sparse_in, sparse_out, centers, contexts, None, 0, rng, 0.05)
        self.assertAlmostEqual(dense_loss, sparse_loss, places=12)
        np.testing.assert_allclose(dense_in, sparse_in, atol=1e-12)
        np.testing.assert_allclose(dense_out, sparse_out, atol=1e-12)
        expected = sum(pair_loss_and_grad(w_in[c], w_out[t], True)[0] for c, t in zip(centers, contexts))
        self.assertAlmostEqual(dense_loss, expected, places=12)

    def test_batched_update_matches_summed_pair_gradients(self) -> None:
        rng = np.random.default_rng(9)
        w_in = rng.normal(scale=0.3, size=(4, 3))
        w_out = rng.normal(scale=0.3, size=(4, 3))
        centers = np.array([2, 2, 1])
        contexts = np.array([3, 3, 0])
        expected_in, expected_out = w_in.copy(), w_out.copy()
        for c, t in zip(centers, contexts):
            _loss, grad_u, grad_v = pair_loss_and_grad(w_in[c], w_out[t], True)
            expected_in[c] -= 0.1 * grad_u
            expected_out[t] -= 0.1 * grad_v
        _dense_update(w_in, w_out, centers, contexts, None, 0, rng, 0.1)
        np.testing.assert_allclose(w_in, expected_in, atol=1e-12)
        np.testing.assert_allclose(w_out, expected_out, atol=1e-12)

    def test_scatter_add_accumulates_duplicate_rows(self) -> None:
        rng = np.random.default_rng(2)
        rows = np.array([3, 0, 3, 1, 3, 0])
        values = rng.normal(size=(6, 4))
        got = np.zeros((5, 4))
        expected = np.zeros((5, 4))
        _scatter_add(got, rows, values)
        np.add.at(expected, rows, values)
        np.testing.assert_allclose(got, expected, atol=1e-12)


class SpaceOpsTest(unittest.TestCase):
    def _space(self, rows) -> EmbeddingSpace:
        vectors = np.asarray(rows, dtype=np.float64)
        return EmbeddingSpace(dim=vectors.shape[1], vectors=vectors, node_ids=tuple(range(len(rows))))

    def test_concat_stacks_columns_in_order(self) -> None:
        a = self._space([[1, 2, 3, 4], [5, 6, 7, 8]])
        b = self._space([[9, 9, 9, 9], [0, 0, 0, 0]])
        joined = concat([a, b])
        self.assertEqual(joined.dim, 8)
        np.testing.assert_array_equal(joined.vectors[:, :4], a.vectors)
        np.testing.assert_array_equal(joined.vectors[:, 4:], b.vectors)
        layers = concat([a, a, a])
        self.assertEqual(layers.dim, 12)

    def test_concat_single_space_is_identity(self) -> None:
        a = self._space([[1, 2], [3, 4]])
        joined = concat([a])
        self.assertEqual(joined.dim, a.dim)
        self.assertEqual(joined.node_ids, a.node_ids)
        np.testing.assert_array_equal(joined.vectors, a.vectors)
        self.assertIsNot(joined.vectors, a.vectors)

    def test_concat_rejects_mismatched_nodes(self) -> None:
        a = self._space([[1, 2], [3, 4]])
        b = self._space([[1, 2], [3, 4], [5, 6]])
        with self.assertRaises(EmbeddingMismatchError):
            concat([a, b])
        with self.assertRaises(EmbeddingMismatchError):
            concat([])

    def test_concat_squared_distance_is_sum_over_layers(self) -> None:
        rng = np.random.default_rng(11)
        layers = [self._space(rng.normal(size=(8, dim))) for dim in (3, 5, 2)]
        joined = concat(layers)
        for a in range(8):
            for b in range(8):
                parts = sum(distance(space, a, b) ** 2 for space in layers)
                self.assertLess(abs(distance(joined, a, b) ** 2 - parts), 1e-12)

    def test_distance_basic_cases(self) -> None:
        space = self._space([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        self.assertEqual(distance(space, 0, 0, "euclidean"), 0.0)
        self.assertAlmostEqual(distance(space, 0, 1, "euclidean"), math.sqrt(2.0), places=12)
        self.assertAlmostEqual(distance(space, 0, 1, "cosine"), 1.0, places=12)
        self.assertAlmostEqual(distance(space, 0, 1, "cosine-distance"), 1.0, places=12)
        self.assertEqual(distance(space, 0, 2, "cosine"), 1.0)
        with self.assertRaises(ConfigError):
            distance(space, 0, 1, "manhattan")

    def test_distance_matches_direct_arithmetic(self) -> None:
        rng = np.random.default_rng(5)
        space = self._space(rng.normal(size=(10, 6)))
        for a in range(10):
            for b in range(10):
                va, vb = space.vectors[a], space.vectors[b]
                euclid = math.sqrt(sum((x - y) ** 2 for x, y in zip(va, vb)))
                self.assertLess(abs(distance(space, a, b, "euclidean") - euclid), 1e-12)
                cos = sum(x * y for x, y in zip(va, vb)) / (
                    math.sqrt(sum(x * x for x in va)) * math.sqrt(sum(y * y for y in vb))
                )
                self.assertLess(abs(distance(space, a, b, "cosine") - (1.0 - cos)), 1e-12)


class AliasTableTest(unittest.TestCase):
    def test_alias_table_reproduces_weights(self) -> None:
        weights = [1.0, 2.0, 3.0, 4.0]
        table = AliasTable(weights)
        np.testing.assert_allclose(table.probabilities(), np.array(weights) / 10.0, atol=1e-12)
        draws = table.draw(np.random.default_rng(0), 100_000)
        freq = np.bincount(draws, minlength=4) / draws.size
        np.testing.assert_allclose(freq, np.array(weights) / 10.0, atol=0.01)

    def test_alias_table_rejects_bad_weights(self) -> None:
        with self.assertRaises(ValueError):
            AliasTable([])
        with self.assertRaises(ValueError):
            AliasTable([0.0, 0.0])


if __name__ == "__main__":
    unittest.main()
