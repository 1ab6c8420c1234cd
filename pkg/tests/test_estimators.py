import numpy as np
import pytest
from sklearn.base import clone

from intermdm.estimators import InterMDM, MultimodalDirichletMixture, check_multimodal
from intermdm.metrics import ari


def test_check_multimodal():
    out = check_multimodal(np.ones((3, 2)))
    assert list(out) == ["x"] and out["x"].dtype == np.int64
    with pytest.raises(ValueError):
        check_multimodal({"a": [[1, -1]]})
    with pytest.raises(ValueError):
        check_multimodal({"a": [[0.5, 1]]})
    with pytest.raises(ValueError):
        check_multimodal({"a": np.ones((3, 2)), "b": np.ones((2, 2))})
    with pytest.raises(ValueError):
        check_multimodal({"a": np.ones((3, 2))}, bins={"a": 3})
    with pytest.raises(ValueError):
        check_multimodal({})


def test_params_and_clone():
    est = InterMDM(n_signs=4, communication="all_reject")
    assert est.get_params()["n_signs"] == 4
    est.set_params(n_iter=3)
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est


def test_mixture_clusters(default_dataset):
    X, y = default_dataset.observations_a, default_dataset.true_labels
    est = MultimodalDirichletMixture(random_state=0).fit(X)
    assert ari(y, est.labels_) > 0.8
    proba = est.predict_proba(X)
    assert proba.shape == (default_dataset.D, 15) and np.allclose(proba.sum(axis=1), 1)
    assert ari(y, est.predict(X)) > 0.8
    assert np.isclose(est.weights_.sum(), 1)
    with pytest.raises(ValueError):
        est.predict({"vision": X["vision"]})


def test_mixture_unfitted():
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        MultimodalDirichletMixture().predict(np.ones((2, 2)))


@pytest.mark.parametrize("comm", ["proposed", "integrated_gibbs"])
def test_intermdm_fit_predict(small_dataset, comm):
    d = small_dataset
    est = InterMDM(n_signs=6, n_categories=6, n_iter=40, communication=comm, random_state=1)
    est.fit(d.observations_a, d.observations_b, d.true_labels)
    assert len(est.trace_) == 40 and est.signs_.shape == (d.D,)
    assert np.isnan(est.kappa_) == (comm == "integrated_gibbs")
    pred = est.predict(d.observations_a)
    assert ari(est.signs_, pred) > 0.7
    cm = est.predict_cross_modal(d.observations_a)
    assert set(cm) == set(d.observations_b)
    for m, h in cm.items():
        assert h.shape == d.observations_b[m].shape
        assert np.array_equal(h.sum(axis=1), np.full(d.D, d.observations_b[m][0].sum()))


def test_intermdm_sample_mismatch(small_dataset):
    d = small_dataset
    with pytest.raises(ValueError):
        InterMDM(n_iter=1).fit(d.observations_a, {m: x[:-1] for m, x in d.observations_b.items()})


def test_intermdm_reproducible(small_dataset):
    d = small_dataset
    a = InterMDM(n_signs=6, n_categories=6, n_iter=10, random_state=5).fit(d.observations_a, d.observations_b)
    b = InterMDM(n_signs=6, n_categories=6, n_iter=10, random_state=5).fit(d.observations_a, d.observations_b)
    assert np.array_equal(a.signs_, b.signs_) and a.kappa_ == b.kappa_
