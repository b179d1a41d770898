import numpy as np
import pytest
from sklearn.base import clone

from schemadep.estimator import (
    DependencyAnnotator,
    NotFittedError,
    SchemaDependencyParser,
    check_examples,
    check_tables,
)
from schemadep.synthetic import generate_synthetic

SMALL = dict(d_emb=6, d_h=5, d_dep=4, d_biaff=4, d_att=4, d_wn=3)


@pytest.fixture(scope="module")
def corpus():
    return generate_synthetic(10, seed=21)


@pytest.fixture(scope="module")
def fitted(corpus):
    examples, tables = corpus
    return SchemaDependencyParser(epochs=2, seed=1, **SMALL).fit(examples, tables=tables, dev=examples[:4])


def test_get_params_round_trip():
    est = SchemaDependencyParser(epochs=3, loss_mode="fixed", fixed_weights=(0.5, 1.0))
    params = est.get_params()
    assert params["epochs"] == 3 and params["loss_mode"] == "fixed"
    twin = clone(est)
    assert twin.get_params() == params
    est.set_params(epochs=7)
    assert est.epochs == 7


def test_unfitted_estimator_refuses_to_predict(corpus):
    examples, tables = corpus
    with pytest.raises(NotFittedError):
        SchemaDependencyParser().predict(examples, tables=tables)
    with pytest.raises(NotFittedError):
        DependencyAnnotator().transform(examples, tables=tables)


def test_validation_helpers(corpus):
    examples, tables = corpus
    with pytest.raises(TypeError):
        check_examples(examples[0])
    with pytest.raises(TypeError):
        check_examples([examples[0], "nope"])
    with pytest.raises(KeyError):
        check_examples(examples, {})
    with pytest.raises(ValueError):
        check_tables(None)
    with pytest.raises(TypeError):
        check_tables({"x": 1})
    assert check_examples(examples, tables) == examples


def test_fit_records_history(fitted):
    assert len(fitted.history_) == 2
    assert all(h.dev_lf is not None and h.dev_ex is not None for h in fitted.history_)
    assert fitted.n_parameters_ == fitted.params_.n_parameters()


def test_fit_rejects_empty_and_mismatched_targets(corpus):
    examples, tables = corpus
    with pytest.raises(ValueError):
        SchemaDependencyParser(epochs=1, **SMALL).fit([], tables=tables)
    with pytest.raises(ValueError):
        SchemaDependencyParser(epochs=1, **SMALL).fit(examples, [examples[0].gold], tables=tables)


def test_predict_and_score(fitted, corpus):
    examples, tables = corpus
    preds = fitted.predict(examples, tables=tables)
    assert len(preds) == len(examples)
    guided = fitted.predict(examples, tables=tables, eg=True)
    assert len(guided) == len(examples)
    score = fitted.score(examples, tables=tables)
    assert 0.0 <= score <= 1.0
    report = fitted.report(examples, tables=tables)
    assert report["lf"] == score


def test_save_load_round_trip(fitted, corpus, tmp_path):
    examples, tables = corpus
    fitted.save(tmp_path / "m")
    loaded = SchemaDependencyParser.load(tmp_path / "m")
    assert loaded.get_params() == fitted.get_params()
    for name in fitted.params_.names():
        np.testing.assert_array_equal(loaded.params_[name].data, fitted.params_[name].data)
    assert loaded.predict(examples, tables=tables) == fitted.predict(examples, tables=tables)


def test_load_rejects_foreign_format(fitted, tmp_path):
    import json

    fitted.save(tmp_path / "m")
    meta = json.loads((tmp_path / "m" / "model.json").read_text())
    meta["format"] = "other"
    (tmp_path / "m" / "model.json").write_text(json.dumps(meta))
    with pytest.raises(ValueError):
        SchemaDependencyParser.load(tmp_path / "m")


def test_annotator_transform(corpus):
    examples, tables = corpus
    results = DependencyAnnotator().fit().transform(examples, tables=tables)
    assert len(results) == len(examples)
    assert all(r.coverage.complete for r in results)


def test_beam_width_forms():
    assert SchemaDependencyParser(beam_widths="1,1,1,1,1,2")._widths().as_tuple() == (1, 1, 1, 1, 1, 2)
    assert SchemaDependencyParser(beam_widths=(3, 1, 1, 1, 1, 1))._widths().sel == 3
    assert SchemaDependencyParser()._widths().as_tuple() == (2,) * 6
