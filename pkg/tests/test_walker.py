import math
import unittest
from collections import Counter

from mlembed.core_errors import ConfigError, DeadEndError
from mlembed.core_rng import make_stream
from mlembed.graph_core import build_graph, build_multilayer, connected_layers, merge
from mlembed.walker import (
    TransitionCache,
    WalkParams,
    WalkStep,
    alpha_pq,
    coanalysis_walks,
    graph_step_distribution,
    sample_step,
    single_graph_walks,
    step_distribution,
)

LAYER_A = 0
LAYER_B = 1


def _three_node_fixture():
    return build_multilayer(3, 2, [(0, 1, LAYER_A), (1, 2, LAYER_A), (0, 1, LAYER_B)])


def _five_node_fixture():
    return build_multilayer(
        5,
        2,
        [
            (0, 1, 0), (1, 2, 0), (2, 3, 0), (0, 2, 0), (3, 4, 0),
            (0, 1, 1), (1, 3, 1), (2, 4, 1), (0, 4, 1),
        ],
    )


def _brute_force(mn, state, p, q, r):
    layers = [layer for layer in range(mn.num_layers) if mn.neighbors(layer, state.curr)]
    weights = {}
    for layer in layers:
        if len(layers) == 1:
            factor = 1.0
        elif layer == state.layer:
            factor = r
        else:
            factor = (1.0 - r) / (len(layers) - 1)
        for y in mn.neighbors(layer, state.curr):
            if y == state.prev:
                alpha = 1.0 / p
            elif state.prev in mn.neighbors(layer, y):
                alpha = 1.0
            else:
                alpha = 1.0 / q
            if factor > 0:
                weights[(y, layer)] = factor * alpha
    total = sum(weights.values())
    return {key: weight / total for key, weight in weights.items()}


def _as_map(distribution):
    return {(step.curr, step.layer): prob for step, prob in distribution}


class WalkerTest(unittest.TestCase):
    def test_alpha_pq_cases(self) -> None:
        mn = _three_node_fixture()
        self.assertEqual(alpha_pq(mn, 0, 0, LAYER_A, 0.25, 4.0), 4.0)
        self.assertEqual(alpha_pq(mn, 2, 1, LAYER_A, 0.25, 4.0), 1.0)
        self.assertEqual(alpha_pq(mn, 0, 2, LAYER_A, 0.25, 4.0), 0.25)

    def test_step_distribution_three_node_case(self) -> None:
        mn = _three_node_fixture()
        state = WalkStep(prev=0, curr=1, layer=LAYER_A)
        dist = _as_map(step_distribution(mn, state, WalkParams(p=0.5, q=0.5, r=0.5)))
        self.assertEqual(set(dist), {(0, LAYER_A), (2, LAYER_A), (0, LAYER_B)})
        for prob in dist.values():
            self.assertAlmostEqual(prob, 1.0 / 3.0, places=12)

    def test_step_distribution_r_extremes(self) -> None:
        mn = _three_node_fixture()
        state = WalkStep(prev=0, curr=1, layer=LAYER_A)
        stay = _as_map(step_distribution(mn, state, WalkParams(p=0.5, q=0.5, r=1.0)))
        self.assertEqual(stay, {(0, LAYER_A): 0.5, (2, LAYER_A): 0.5})
        switch = _as_map(step_distribution(mn, state, WalkParams(p=0.5, q=0.5, r=0.0)))
        self.assertEqual(switch, {(0, LAYER_B): 1.0})

    def test_step_distribution_matches_brute_force_on_every_state(self) -> None:
        mn = _five_node_fixture()
        for p, q, r in ((0.5, 0.5, 0.5), (0.25, 4.0, 0.8), (2.0, 0.3, 0.1), (1.0, 1.0, 0.0)):
            params = WalkParams(p=p, q=q, r=r)
            for layer in range(mn.num_layers):
                for prev in range(mn.num_nodes):
                    for curr in mn.neighbors(layer, prev):
                        state = WalkStep(prev=prev, curr=curr, layer=layer)
                        got = _as_map(step_distribution(mn, state, params))
                        expected = _brute_force(mn, state, p, q, r)
                        self.assertEqual(set(got), set(expected))
                        for key, prob in expected.items():
                            self.assertLessEqual(abs(got[key] - prob), 1e-12)
                        self.assertLessEqual(abs(math.fsum(got.values()) - 1.0), 1e-12)

    def test_step_distribution_isolated_node_is_dead_end(self) -> None:
        mn = build_multilayer(3, 1, [(0, 1, 0)])
        with self.assertRaises(DeadEndError):
            step_distribution(mn, WalkStep(prev=0, curr=2, layer=0), WalkParams())

    def test_sampled_steps_match_distribution(self) -> None:
        mn = _five_node_fixture()
        state = WalkStep(prev=0, curr=2, layer=0)
        distribution = step_distribution(mn, state, WalkParams(p=0.5, q=2.0, r=0.7))
        rng = make_stream(123, 99)
        draws = 100_000
        counts = Counter()
        for _ in range(draws):
            step = sample_step(distribution, rng)
            counts[(step.curr, step.layer)] += 1
        for step, prob in distribution:
            observed = counts[(step.curr, step.layer)] / draws
            self.assertLess(abs(observed - prob), 0.02)

    def test_two_node_walks_alternate(self) -> None:
        mn = build_multilayer(2, 1, [(0, 1, 0)])
        corpus = coanalysis_walks(mn, WalkParams(num_walks=3, walk_length=7, seed=1))
        self.assertEqual(len(corpus.walks), 6)
        for walk in corpus.walks:
            self.assertEqual(len(walk), 7)
            for a, b in zip(walk, walk[1:]):
                self.assertNotEqual(a, b)

    def test_r_one_never_switches_layers(self) -> None:
        mn = _five_node_fixture()
        corpus = coanalysis_walks(mn, WalkParams(r=1.0, num_walks=30, walk_length=80, seed=5))
        steps = sum(len(trace) for trace in corpus.layers)
        self.assertGreaterEqual(steps, 10_000)
        for trace in corpus.layers:
            self.assertEqual(len(set(trace)), 1)
        self.assertEqual(corpus.layer_switch_rate(), 0.0)

    def test_r_zero_switches_at_every_multilayer_node(self) -> None:
        mn = _five_node_fixture()
        corpus = coanalysis_walks(mn, WalkParams(r=0.0, num_walks=30, walk_length=80, seed=6))
        checked = 0
        for walk, trace in zip(corpus.walks, corpus.layers):
            for k in range(1, len(trace)):
                if connected_layers(mn, walk[k]) > 1:
                    checked += 1
                    self.assertNotEqual(trace[k], trace[k - 1])
        self.assertGreater(checked, 0)

    def test_consecutive_nodes_are_connected(self) -> None:
        mn = _five_node_fixture()
        corpus = coanalysis_walks(mn, WalkParams(num_walks=5, walk_length=20, seed=2))
        for walk, trace in zip(corpus.walks, corpus.layers):
            self.assertEqual(len(trace), len(walk) - 1)
            for (a, b), layer in zip(zip(walk, walk[1:]), trace):
                self.assertTrue(mn.has_edge(a, b, layer))

    def test_isolated_nodes_give_singleton_walks(self) -> None:
        mn = build_multilayer(4, 1, [(0, 1, 0), (1, 2, 0)])
        corpus = coanalysis_walks(mn, WalkParams(num_walks=2, walk_length=10, seed=0))
        self.assertEqual(len(corpus.walks), 8)
        self.assertEqual(corpus.singletons, 2)
        for walk in corpus.walks:
            self.assertLessEqual(len(walk), 10)
            if walk[0] == 3:
                self.assertEqual(walk, [3])

    def test_walks_are_deterministic_and_worker_independent(self) -> None:
        mn = _five_node_fixture()
        params = WalkParams(num_walks=4, walk_length=15, seed=42)
        first = coanalysis_walks(mn, params)
        second = coanalysis_walks(mn, params)
        threaded = coanalysis_walks(mn, WalkParams(num_walks=4, walk_length=15, seed=42, workers=3))
        self.assertEqual(first.walks, second.walks)
        self.assertEqual(first.walks, threaded.walks)
        other = coanalysis_walks(mn, WalkParams(num_walks=4, walk_length=15, seed=43))
        self.assertNotEqual(first.walks, other.walks)

    def test_uniform_edge_start_walk_count(self) -> None:
        mn = _five_node_fixture()
        corpus = coanalysis_walks(
            mn, WalkParams(num_walks=3, walk_length=6, seed=0, uniform_edge_start=True)
        )
        self.assertEqual(len(corpus.walks), 15)
        for walk in corpus.walks:
            self.assertEqual(len(walk), 6)

    def test_single_graph_path_is_uniform_when_p_q_one(self) -> None:
        g = build_graph(3, [(0, 1), (1, 2)])
        dist = dict(graph_step_distribution(g, 0, 1, 1.0, 1.0))
        self.assertEqual(dist, {0: 0.5, 2: 0.5})
        far = dict(graph_step_distribution(g, 0, 1, 1e9, 1.0))
        self.assertGreater(far[2], 0.999999)

    def test_single_graph_triangle_sampling(self) -> None:
        g = build_graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
        mn_dist = graph_step_distribution(g, 0, 2, 0.5, 2.0)
        # prev=0: return 1/p=2, 1 (common neighbor of 0) weight 1, 3 weight 1/q=0.5
        expected = {0: 2.0 / 3.5, 1: 1.0 / 3.5, 3: 0.5 / 3.5}
        for node, prob in mn_dist:
            self.assertAlmostEqual(prob, expected[node], places=12)
        corpus = single_graph_walks(g, WalkParams(p=0.5, q=2.0, num_walks=2, walk_length=12, seed=3))
        self.assertEqual(len(corpus.walks), 8)
        for walk in corpus.walks:
            for a, b in zip(walk, walk[1:]):
                self.assertTrue(g.has_edge(a, b))

    def test_invalid_params_name_the_flag(self) -> None:
        cases = (
            (dict(p=0.0), "--p"),
            (dict(q=-1.0), "--q"),
            (dict(r=1.5), "--r"),
            (dict(num_walks=0), "--num-walks"),
            (dict(walk_length=0), "--walk-length"),
        )
        for kwargs, flag in cases:
            with self.assertRaises(ConfigError) as ctx:
                WalkParams(**kwargs).validate()
            self.assertIn(flag, str(ctx.exception))

    def test_first_step_is_uniform_over_neighbor_layer_pairs(self) -> None:
        mn = build_multilayer(4, 2, [(0, 1, 0), (0, 2, 0), (0, 1, 1), (0, 3, 1)])
        corpus = coanalysis_walks(mn, WalkParams(num_walks=10_000, walk_length=2, seed=12))
        counts = Counter(
            (walk[1], trace[0])
            for walk, trace in zip(corpus.walks, corpus.layers)
            if walk[0] == 0
        )
        total = sum(counts.values())
        self.assertEqual(total, 10_000)
        self.assertEqual(set(counts), {(1, 0), (2, 0), (1, 1), (3, 1)})
        for count in counts.values():
            self.assertLess(abs(count / total - 0.25), 0.02)

    def test_single_layer_laws_of_merged_and_coanalysis_walks_coincide(self) -> None:
        mn = build_multilayer(6, 1, [(0, 1, 0), (1, 2, 0), (0, 2, 0), (2, 3, 0), (3, 4, 0), (4, 5, 0), (3, 5, 0)])
        merged = merge(mn)
        for p, q, r in ((0.5, 0.5, 0.5), (0.25, 4.0, 0.0), (2.0, 0.3, 1.0)):
            params = WalkParams(p=p, q=q, r=r)
            for prev in range(mn.num_nodes):
                for curr in mn.neighbors(0, prev):
                    layered = _as_map(step_distribution(mn, WalkStep(prev, curr, 0), params))
                    flat = dict(graph_step_distribution(merged, prev, curr, p, q))
                    self.assertEqual(set(flat), {node for node, _layer in layered})
                    for (node, _layer), prob in layered.items():
                        self.assertLessEqual(abs(prob - flat[node]), 1e-12)

    def test_single_graph_walk_frequencies_on_triangle(self) -> None:
        g = build_graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
        corpus = single_graph_walks(g, WalkParams(p=0.5, q=2.0, num_walks=250, walk_length=101, seed=21))
        self.assertEqual(sum(len(walk) - 1 for walk in corpus.walks), 100_000)
        counts = Counter(
            walk[k + 1]
            for walk in corpus.walks
            for k in range(1, len(walk) - 1)
            if walk[k - 1] == 0 and walk[k] == 2
        )
        total = sum(counts.values())
        self.assertGreater(total, 2_000)
        for node, prob in graph_step_distribution(g, 0, 2, 0.5, 2.0):
            self.assertLess(abs(counts[node] / total - prob), 0.02)

    def test_transition_cache_draws_match_sample_step(self) -> None:
        mn = _five_node_fixture()
        params = WalkParams(p=0.5, q=2.0, r=0.7)
        cache = TransitionCache(mn, params)
        state = WalkStep(prev=0, curr=2, layer=0)
        cached_rng = make_stream(5, 1)
        direct_rng = make_stream(5, 1)
        for _ in range(200):
            curr, layer = cache.sample(state.prev, state.curr, state.layer, cached_rng)
            expected = sample_step(step_distribution(mn, state, params), direct_rng)
            self.assertEqual((curr, layer), (expected.curr, expected.layer))
        self.assertEqual(len(cache), 1)


if __name__ == "__main__":
    unittest.main()
