import numpy as np
import pytest

from seqmip import (
    ConstraintId,
    RandomMilpSpec,
    TrainConfig,
    TrainingDivergenceError,
    build_sampled_problem,
    forward,
    generate_training_data,
    gradient,
    make_random_milp,
    predict_basis,
    solve_mip,
    solve_sequential,
    solve_sequential_learned,
    train,
)
from seqmip.learn import MlpClassifier, StrategyDictionary, TrainingSet, init_classifier, _forward_batch
from conftest import fixed_rng


@pytest.fixture(scope="module")
def desk_training(desk_model):
    ts, dic = generate_training_data(desk_model, 150, seed=5)
    return ts, dic


@pytest.fixture(scope="module")
def trained_net(desk_model, desk_training):
    ts, dic = desk_training
    cfg = TrainConfig(hidden_layers=2, hidden_width=64, epochs=60, batch_size=32, seed=1)
    net, metrics = train(ts, dic, cfg)
    return net, metrics


class TestDictionaryAndData:
    def test_single_strategy_family(self):
        # at rho = 0 every draw shares the same basis: dictionary size 1
        model = make_random_milp(RandomMilpSpec(n_rows=30, d_r=3, d_z=1, rho=0.0, seed=2))
        ts, dic = generate_training_data(model, 12, seed=9)
        assert dic.size == 1
        assert np.all(ts.labels == 0)

    def test_deterministic_generation(self, desk_model):
        a_ts, a_dic = generate_training_data(desk_model, 40, seed=4)
        b_ts, b_dic = generate_training_data(desk_model, 40, seed=4)
        assert a_dic.entries == b_dic.entries
        np.testing.assert_array_equal(a_ts.labels, b_ts.labels)
        np.testing.assert_array_equal(a_ts.q, b_ts.q)

    def test_workers_do_not_change_result(self, desk_model):
        a_ts, a_dic = generate_training_data(desk_model, 30, seed=4, workers=1)
        b_ts, b_dic = generate_training_data(desk_model, 30, seed=4, workers=2)
        assert a_dic.entries == b_dic.entries
        np.testing.assert_array_equal(a_ts.labels, b_ts.labels)

    def test_split_is_80_20(self, desk_model):
        ts, _ = generate_training_data(desk_model, 50, seed=4)
        assert len(ts.train_idx) == 40 and len(ts.test_idx) == 10
        assert set(ts.train_idx) | set(ts.test_idx) == set(range(50))


class TestForward:
    def test_zero_weights_give_uniform(self):
        net = init_classifier([4, 8, 5], seed=0)
        for w in net.weights:
            w[:] = 0.0
        probs = forward(net, np.ones(4))
        np.testing.assert_allclose(probs, np.full(5, 0.2), atol=1e-15)

    def test_probabilities_sum_to_one(self):
        net = init_classifier([6, 16, 16, 7], seed=3)
        rng = fixed_rng(900)
        for _ in range(100):
            probs = forward(net, rng.standard_normal(6))
            assert np.all(probs >= 0)
            assert abs(probs.sum() - 1.0) <= 1e-12

    def test_single_layer_matches_hand_softmax(self):
        net = init_classifier([2, 2], seed=0)
        W = np.array([[0.3, -0.7], [1.1, 0.4]])
        b = np.array([0.05, -0.2])
        net.weights[0][:] = W
        net.biases[0][:] = b
        q = np.array([0.9, -1.3])
        logits = q @ W + b
        expect = np.exp(logits - logits.max())
        expect /= expect.sum()
        np.testing.assert_allclose(forward(net, q), expect, atol=1e-15)


class TestGradient:
    def probe(self):
        return init_classifier([5, 6, 6, 4], seed=7)

    def test_matches_finite_differences(self):
        net = self.probe()
        rng = fixed_rng(901)
        X = rng.standard_normal((8, 5))
        y = rng.integers(0, 4, 8)
        loss, dW, db = gradient(net, X, y)
        params = net.weights + net.biases
        grads = dW + db
        h = 1e-5
        checked = 0
        for pi in range(len(params)):
            flat = params[pi].reshape(-1)
            gflat = grads[pi].reshape(-1)
            idx = rng.choice(flat.size, size=min(7, flat.size), replace=False)
            for j in idx:
                orig = flat[j]
                flat[j] = orig + h
                lp, _, _ = gradient(net, X, y)
                flat[j] = orig - h
                lm, _, _ = gradient(net, X, y)
                flat[j] = orig
                fd = (lp - lm) / (2 * h)
                assert gflat[j] == pytest.approx(fd, rel=1e-4, abs=1e-7)
                checked += 1
        assert checked >= 50

    def test_output_bias_gradient_closed_form(self):
        net = self.probe()
        rng = fixed_rng(902)
        X = rng.standard_normal((16, 5))
        y = rng.integers(0, 4, 16)
        _, _, db = gradient(net, X, y)
        _, probs = _forward_batch(net, X)
        onehot = np.zeros_like(probs)
        onehot[np.arange(16), y] = 1.0
        np.testing.assert_allclose(db[-1], (probs - onehot).mean(axis=0), atol=1e-12)

    def test_saturated_correct_predictions_give_tiny_gradient(self):
        net = init_classifier([2, 2], seed=0)
        net.weights[0][:] = np.array([[60.0, -60.0], [-60.0, 60.0]])
        net.biases[0][:] = 0.0
        X = np.array([[1.0, -1.0], [-1.0, 1.0]])
        y = np.array([0, 1])
        loss, dW, db = gradient(net, X, y)
        assert loss <= 1e-12
        assert max(np.abs(g).max() for g in dW + db) <= 1e-12


class TestTraining:
    def blobs(self):
        rng = fixed_rng(903)
        X = np.vstack([
            rng.normal(-2.0, 0.5, (100, 2)),
            rng.normal(2.0, 0.5, (100, 2)),
        ])
        y = np.array([0] * 100 + [1] * 100)
        perm = rng.permutation(200)
        split = TrainingSet(X[perm], y[perm], np.arange(160), np.arange(160, 200))
        dic = StrategyDictionary()
        dic.intern((0,))
        dic.intern((1,))
        return split, dic

    def test_separable_blobs(self):
        ts, dic = self.blobs()
        net, metrics = train(ts, dic, TrainConfig(1, 16, epochs=50, batch_size=20, seed=2))
        assert metrics["test_acc"] >= 0.99

    def test_zero_epochs_equal_init_argmax(self):
        ts, dic = self.blobs()
        cfg = TrainConfig(1, 16, epochs=0, batch_size=20, seed=2)
        net, metrics = train(ts, dic, cfg)
        ref = init_classifier([2, 16, 2], seed=2)
        _, probs = _forward_batch(ref, ts.q[ts.test_idx])
        base = float(np.mean(np.argmax(probs, axis=1) == ts.labels[ts.test_idx]))
        assert metrics["test_acc"] == pytest.approx(base)

    def test_deterministic_training(self):
        ts, dic = self.blobs()
        cfg = TrainConfig(1, 8, epochs=10, batch_size=32, seed=5)
        n1, _ = train(ts, dic, cfg)
        n2, _ = train(ts, dic, cfg)
        for a, b in zip(n1.weights, n2.weights):
            assert np.array_equal(a, b)

    def test_divergence_reports_step(self):
        ts, dic = self.blobs()
        cfg = TrainConfig(1, 16, epochs=50, batch_size=20, seed=2, learning_rate=1e18)
        with pytest.raises(TrainingDivergenceError) as err:
            train(ts, dic, cfg)
        assert err.value.step >= 1

    def test_batch_size_validated(self):
        ts, dic = self.blobs()
        with pytest.raises(Exception):
            train(ts, dic, TrainConfig(1, 8, epochs=1, batch_size=1000, seed=0))


class TestPredictBasis:
    def test_singleton_dictionary(self):
        dic = StrategyDictionary()
        dic.intern((2, 5))
        net = init_classifier([3, 1], seed=0)
        basis = predict_basis(net, dic, np.zeros(3), sample_index=9)
        assert basis.members == (ConstraintId(9, 2), ConstraintId(9, 5))

    def test_logit_shift_invariance(self):
        net = init_classifier([4, 8, 5], seed=11)
        q = fixed_rng(904).standard_normal(4)
        base = forward(net, q)
        net.biases[-1] += 3.7  # constant shift of every logit
        np.testing.assert_allclose(forward(net, q), base, atol=1e-12)

    def test_heldout_prediction_rate_matches_test_accuracy(self, desk_model, desk_training, trained_net):
        ts, dic = desk_training
        net, metrics = trained_net
        hits = 0
        for i in ts.test_idx:
            basis = predict_basis(net, dic, ts.q[i], sample_index=1)
            pattern = tuple(sorted(row for _, row in basis.members))
            hits += pattern == dic.pattern(int(ts.labels[i]))
        assert hits / len(ts.test_idx) == pytest.approx(metrics["test_acc"], abs=1e-12)


class TestLearnedLoop:
    def test_adversarial_classifier_still_exact(self, desk_model, desk_training):
        ts, dic = desk_training
        rando = init_classifier([desk_model.dim_q, 16, dic.size], seed=999)
        prob = build_sampled_problem(desk_model, 200, seed=21)
        direct = solve_mip(prob.c, prob.stacked(), prob.vars)
        sol, _, trace = solve_sequential_learned(prob, rando, dic, desk_model)
        rel = abs(sol.objective - direct.objective) / max(1.0, abs(direct.objective))
        assert rel <= 1e-7
        if trace.iterations > 1:
            assert trace.fallback_count >= 1

    def test_trained_classifier_matches_sequential(self, desk_model, desk_training, trained_net):
        ts, dic = desk_training
        net, _ = trained_net
        prob = build_sampled_problem(desk_model, 300, seed=31)
        seq_sol, _, seq_trace = solve_sequential(prob, r=10)
        sol, _, trace = solve_sequential_learned(prob, net, dic, desk_model)
        rel = abs(sol.objective - seq_sol.objective) / max(1.0, abs(seq_sol.objective))
        assert rel <= 1e-7
        # on fallback-free iterations the predicted sets stay no larger than
        # a block
        block = prob.blocks[0].n_rows
        for rec in trace.records[1:]:
            if not rec.fallback:
                assert rec.constraints_in_solve <= block + rec.basis_size

    def test_single_strategy_family_never_falls_back(self):
        model = make_random_milp(RandomMilpSpec(n_rows=30, d_r=3, d_z=1, rho=0.0, seed=2))
        ts, dic = generate_training_data(model, 10, seed=9)
        net, _ = train(ts, dic, TrainConfig(1, 8, epochs=5, batch_size=8, seed=0))
        prob = build_sampled_problem(model, 50, seed=13)
        sol, _, trace = solve_sequential_learned(prob, net, dic, model)
        assert trace.fallback_count == 0
        direct = solve_mip(prob.c, prob.stacked(), prob.vars)
        assert sol.objective == pytest.approx(direct.objective, rel=1e-9)
