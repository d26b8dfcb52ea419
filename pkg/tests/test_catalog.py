import json

import numpy as np
import pytest

from lorsub import catalog, linalg


def test_listing():
    names = catalog.list_examples()
    assert names[0] == "model-r2n1"
    assert {"ls-r5-r2", "lps-r7-r5", "ls-r5-r3", "product-r3-r2"} <= set(names)


@pytest.mark.parametrize("name", catalog.list_examples())
def test_export_import_roundtrip(name):
    e = catalog.load_example(name)
    doc = json.loads(json.dumps(catalog.entry_to_dict(e)))
    back = catalog.entry_from_dict(doc)
    assert catalog.entry_to_dict(back) == catalog.entry_to_dict(e)
    p = np.random.default_rng(3).uniform(-e.box, e.box, e.chart.dim)
    np.testing.assert_array_equal(back.chart.metric_at(p), e.chart.metric_at(p))
    np.testing.assert_array_equal(back.structure.phi.at(p), e.structure.phi.at(p))


@pytest.mark.parametrize("name", catalog.list_examples())
def test_metrics_are_lorentzian_on_the_box(name):
    e = catalog.load_example(name)
    rng = np.random.default_rng(11)
    for p in rng.uniform(-e.box, e.box, (20, e.chart.dim)):
        assert linalg.signature(e.chart.metric_at(p)).is_lorentzian


def test_model_names():
    assert catalog.load_example("model-r2n1(2,-1)").chart.dim == 5
    assert catalog.load_example("model-r2n1( 3 , 1 )").structure.epsilon == 1
    e = catalog.load_example("model-r2n1", n=2, epsilon=1)
    assert e.name == "model-r2n1(2,1)" and e.chart.dim == 5
    assert catalog.load_example("model-r2n1").name == "model-r2n1(1,-1)"


def test_frame_is_pseudo_orthonormal():
    e = catalog.load_example("model-r2n1(2,-1)")
    p = np.array([0.3, -0.1, 0.2, 0.4, -0.6])
    E = np.array([f.at(p) for f in catalog.frame_fields(e)])
    np.testing.assert_allclose(E @ e.chart.metric_at(p) @ E.T, np.diag([1, 1, 1, 1, -1]), atol=1e-14)


def test_unknown_entry():
    with pytest.raises(catalog.CatalogError) as exc:
        catalog.load_example("no-such-thing")
    assert "ls-r5-r2" in str(exc.value)
    with pytest.raises(catalog.CatalogError):
        catalog.load_example("model-r2n1(2,0)")
