import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schemadep import diffgraph as dg
from schemadep.diffgraph import Graph, grad_check
from schemadep.model import ModelConfig
from schemadep.synthetic import generate_synthetic
from schemadep.train import (
    AdamState,
    NonFiniteGradient,
    TrainConfig,
    adam_step,
    adaptive_loss,
    build_vocab,
    lr_scale,
    train,
)

TINY = ModelConfig(d_emb=8, d_h=6, d_dep=4, d_biaff=4, d_att=4, d_wn=3)


def _eval_adaptive(l_dep, l_sql, e1, e2):
    with Graph():
        return adaptive_loss(dg.constant(l_dep), dg.constant(l_sql), dg.constant(e1), dg.constant(e2)).item()


def test_unit_variances_halve_the_sum():
    assert _eval_adaptive(3.0, 5.0, 0.0, 0.0) == pytest.approx(4.0, abs=1e-12)


def test_pure_log_term():
    # sigma = e means eta = log sigma^2 = 2
    assert _eval_adaptive(0.0, 0.0, 2.0, 2.0) == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0, 50), st.floats(0, 50), st.floats(0.05, 10), st.floats(0.05, 10),
)
def test_adaptive_loss_matches_sigma_form(l_dep, l_sql, s1, s2):
    want = l_dep / (2 * s1**2) + l_sql / (2 * s2**2) + math.log(s1 * s2)
    got = _eval_adaptive(l_dep, l_sql, math.log(s1**2), math.log(s2**2))
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_adaptive_loss_eta_gradient():
    rng = np.random.default_rng(4)
    for _ in range(5):
        eta = dg.Tensor(rng.standard_normal(2), name="eta", requires_grad=True)
        l_dep, l_sql = dg.constant(rng.uniform(0.1, 5)), dg.constant(rng.uniform(0.1, 5))
        with Graph() as g:
            loss = adaptive_loss(l_dep, l_sql, dg.take(eta, 0), dg.take(eta, 1))
        assert grad_check(g, loss, [eta]) < 1e-6
        dg.backward(g, loss)
        want = [(1 - math.exp(-eta.data[0]) * l_dep.item()) / 2, (1 - math.exp(-eta.data[1]) * l_sql.item()) / 2]
        np.testing.assert_allclose(eta.grad, want, atol=1e-12)


def test_eta_minimisation_recovers_loss_values():
    # with the losses frozen, sigma_t^2 = exp(eta_t) converges to l_t
    l_dep, l_sql = 7.0, 0.4
    eta = dg.Tensor(np.zeros(2), name="eta", requires_grad=True)
    state = AdamState()
    for _ in range(5000):
        with Graph() as g:
            loss = adaptive_loss(dg.constant(l_dep), dg.constant(l_sql), dg.take(eta, 0), dg.take(eta, 1))
        grads = dg.backward(g, loss)
        adam_step({"eta": eta}, grads, state, {"sql": 1e-2}, lambda _: "sql")
        eta.grad = None
    np.testing.assert_allclose(np.exp(eta.data), [l_dep, l_sql], rtol=1e-3)


def test_adam_zero_gradient_leaves_parameters():
    p = dg.Tensor(np.array([1.5, -2.0]), name="p", requires_grad=True)
    adam_step({"p": p}, {"p": np.zeros(2)}, AdamState(), {"sql": 1e-3}, lambda _: "sql")
    np.testing.assert_array_equal(p.data, [1.5, -2.0])


def test_adam_first_step():
    p = dg.Tensor(np.array([0.0]), name="p", requires_grad=True)
    adam_step({"p": p}, {"p": np.array([1.0])}, AdamState(), {"sql": 1e-3}, lambda _: "sql")
    assert p.data[0] == pytest.approx(-1e-3 / (1 + 1e-8), abs=1e-18)


def test_adam_group_routing():
    params = {name: dg.Tensor(np.zeros(1), name=name, requires_grad=True) for name in ("dep.x", "sql.x", "loss.eta")}
    grads = {name: np.ones(1) for name in params}
    group = lambda name: "dep" if name.startswith("dep.") else "sql"
    adam_step(params, grads, AdamState(), {"dep": 1e-4, "sql": 1e-3}, group)
    assert params["dep.x"].data[0] == pytest.approx(-1e-4, rel=1e-6)
    assert params["sql.x"].data[0] == pytest.approx(-1e-3, rel=1e-6)
    assert params["loss.eta"].data[0] == pytest.approx(-1e-3, rel=1e-6)


def test_adam_non_finite_aborts_whole_step():
    a = dg.Tensor(np.zeros(1), name="a", requires_grad=True)
    b = dg.Tensor(np.zeros(1), name="b", requires_grad=True)
    state = AdamState()
    with pytest.raises(NonFiniteGradient):
        adam_step({"a": a, "b": b}, {"a": np.ones(1), "b": np.array([np.nan])}, state, {"sql": 1e-3}, lambda _: "sql")
    assert a.data[0] == 0.0 and state.steps == {}


def test_adam_shape_mismatch():
    a = dg.Tensor(np.zeros(2), name="a", requires_grad=True)
    with pytest.raises(ValueError):
        adam_step({"a": a}, {"a": np.ones(3)}, AdamState(), {"sql": 1e-3}, lambda _: "sql")


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(lr_dep=0.0)
    with pytest.raises(ValueError):
        TrainConfig(loss_mode="weird")
    with pytest.raises(ValueError):
        TrainConfig(final_lr_frac=0.0)
    with pytest.raises(ValueError):
        TrainConfig(final_lr_frac=1.5)


def test_lr_scale_endpoints():
    assert lr_scale(1, 30, 0.1) == 1.0
    assert lr_scale(30, 30, 0.1) == pytest.approx(0.1, abs=1e-12)
    assert lr_scale(1, 1, 0.1) == 1.0
    assert lr_scale(7, 30, 1.0) == 1.0


@given(st.integers(2, 50), st.floats(0.01, 1.0))
def test_lr_scale_is_monotone(epochs, frac):
    scales = [lr_scale(e, epochs, frac) for e in range(1, epochs + 1)]
    assert all(a >= b for a, b in zip(scales, scales[1:]))
    assert min(scales) >= frac - 1e-12


@pytest.fixture(scope="module")
def tiny_corpus():
    return generate_synthetic(6, seed=11)


def test_build_vocab_covers_headers(tiny_corpus):
    examples, tables = tiny_corpus
    vocab, counts = build_vocab(examples, tables)
    for ex in examples:
        for h in tables[ex.table_id].schema.headers:
            assert all(tok in vocab for tok in h.tokens)
    assert all(counts[w] >= 1 for w in vocab.itos if not w.startswith("["))


def _total_loss(params, examples, tables, mode):
    from schemadep.annotate import annotate
    from schemadep.train import example_loss

    config = TrainConfig(loss_mode=mode)
    total = 0.0
    for ex in examples:
        table = tables[ex.table_id]
        with Graph():
            loss, _, _ = example_loss(params, ex, table, annotate(ex, table.schema), config)
        total += loss.item()
    return total


@pytest.mark.parametrize("mode", ["adaptive", "fixed", "sql"])
def test_one_epoch_on_one_example_descends(tiny_corpus, mode):
    from schemadep.model import ModelParams

    examples, tables = tiny_corpus
    one = examples[:1]
    vocab, _ = build_vocab(one, tables)
    before = _total_loss(ModelParams(TINY, vocab), one, tables, mode)
    params, history = train(one, tables, TrainConfig(epochs=1, loss_mode=mode, unk_prob=0.0), TINY)
    assert _total_loss(params, one, tables, mode) < before
    assert len(history) == 1


def test_training_is_deterministic(tiny_corpus, tmp_path):
    examples, tables = tiny_corpus
    runs = []
    for k in range(2):
        path = tmp_path / f"m{k}.jsonl"
        params, history = train(examples, tables, TrainConfig(epochs=2, seed=5), TINY, metrics_path=path)
        runs.append((path.read_text(), params.arrays()))
    assert runs[0][0] == runs[1][0]
    for name in runs[0][1]:
        np.testing.assert_array_equal(runs[0][1][name], runs[1][1][name])


def test_sql_mode_leaves_dependency_module_alone(tiny_corpus):
    from schemadep.model import ModelParams

    examples, tables = tiny_corpus
    vocab, _ = build_vocab(examples, tables)
    fresh = ModelParams(TINY, vocab)
    params, history = train(examples, tables, TrainConfig(epochs=1, loss_mode="sql"), TINY)
    for name in fresh.names():
        if name.startswith("dep.") or name == "loss.eta":
            np.testing.assert_array_equal(params[name].data, fresh[name].data)
    assert history[0].sigma1 == 1.0 and history[0].sigma2 == 1.0


def test_metrics_and_checkpoints(tiny_corpus, tmp_path):
    import json

    examples, tables = tiny_corpus
    calls = []
    seen = []
    train(
        examples, tables, TrainConfig(epochs=4, checkpoint_interval=2), TINY,
        evaluate=lambda p: (0.5, 0.25), metrics_path=tmp_path / "m.jsonl",
        checkpoint=lambda p, epoch: calls.append(epoch),
    )
    for line in (tmp_path / "m.jsonl").read_text().splitlines():
        seen.append(json.loads(line))
    assert calls == [2, 4]
    assert [row["epoch"] for row in seen] == [1, 2, 3, 4]
    assert all(row["dev_lf"] == 0.5 and row["dev_ex"] == 0.25 for row in seen)
    assert all(row["sigma1"] > 0 and row["sigma2"] > 0 for row in seen)


def test_train_rejects_bad_inputs(tiny_corpus):
    examples, tables = tiny_corpus
    with pytest.raises(ValueError):
        train([], tables)
    with pytest.raises(ValueError):
        train(examples, tables, TrainConfig(epochs=1), TINY, annotations=[])
