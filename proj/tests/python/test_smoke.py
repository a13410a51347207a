import numpy as np
import pytest

import feie


def test_label_orders():
    assert len(feie.expression_names) == 7
    assert feie.expression_names[-1] == "neutral"
    assert feie.action_units[0] == 1 and len(feie.action_units) == 17
    assert len(feie.intensity_names) == 7


def test_relatedness():
    r = feie.relatedness()
    assert r.shape == (7, 17)
    assert set(np.unique(r)) <= {0.0, 1.0}
    assert r[feie.expression_names.index("neutral")].sum() == 0


def test_pseudo_au_matches_matrix_product():
    rng = np.random.default_rng(0)
    expr = rng.dirichlet(np.ones(7))
    np.testing.assert_allclose(feie.pseudo_au(expr), expr @ feie.relatedness(), atol=1e-12)
    with pytest.raises(feie.ValidationError):
        feie.pseudo_au(np.full(7, 0.5))


def test_losses():
    va = np.array([[0.1, -0.2], [0.4, 0.3], [-0.5, 0.6]])
    assert feie.loss_ccc(va, va) == pytest.approx(0.0, abs=1e-12)
    probs = np.full((2, 7), 1.0 / 7)
    assert feie.loss_cce(probs, [0, 3]) == pytest.approx(np.log(7))
    au = np.full((1, 17), 0.5)
    assert feie.loss_bce(au, np.ones((1, 17))) == pytest.approx(np.log(2))
    assert feie.loss_dm(au, np.zeros((1, 17))) == pytest.approx(0.0)
    y = np.linspace(0, 1, 12).reshape(4, 3)
    assert feie.loss_pearson(y, y) == pytest.approx(0.0, abs=1e-12)
    assert feie.loss_mse(y, y) == 0.0


def test_metrics():
    x = np.arange(10.0)
    assert feie.pearson(x, 2 * x + 1) == pytest.approx(1.0)
    assert feie.ccc(x, x) == pytest.approx(1.0)
    assert feie.macro_f1([0, 1, 2], [0, 1, 2], 3) == pytest.approx(1.0)
    va = np.stack([x, -x], axis=1) / 10.0
    report = feie.evaluate(va, va, "va")
    assert isinstance(report, dict)


def test_mask_and_route_zeroes_padding():
    z = np.arange(1.0, 13.0)  # t = 4 steps of hidden 3
    out = feie.mask_and_route(z, 2, 3)
    assert np.all(out[6:] == 0)
    np.testing.assert_array_equal(out[:6], z[:6])


def test_gen_videos_and_predict():
    v = feie.gen_videos(5, 6, steps=10, min_length=3, max_length=10, padding="noise")
    assert v["frames"].shape == (6, 10, 26)
    assert v["labels"].shape == (6, 7)
    again = feie.gen_videos(5, 6, steps=10, min_length=3, max_length=10, padding="noise")
    np.testing.assert_array_equal(v["frames"], again["frames"])

    config = {"data": {"min_length": 3, "max_length": 10},
              "mrnn": {"steps": 10, "hidden": 4, "ff_units": 4}}
    params = feie.init_mrnn(config, seed=1)
    preds = feie.mrnn_predict(params, v["frames"], v["lengths"], config)
    assert preds.shape == (6, 7)

    # Padding content is masked out of the prediction.
    noisy = v["frames"].copy()
    for i, n in enumerate(v["lengths"]):
        noisy[i, n:] = 123.0
    np.testing.assert_array_equal(preds, feie.mrnn_predict(params, noisy, v["lengths"], config))


def test_resolve_config_rejects_unknown_keys():
    assert feie.resolve_config({})["mrnn"]["hidden"] > 0
    with pytest.raises(feie.ConfigError):
        feie.resolve_config({"data": {"unknown": 1}})


def test_gradcheck_suite():
    result = feie.gradcheck(coords=20)
    assert result["passed"]
    assert len(result["cases"]) > 0
