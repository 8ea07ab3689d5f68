import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhei.errors import DegenerateSamples, FeatureTooLarge, OutOfRangeClass
from fhei.profile import (
    ConvLayerSpec,
    HierarchyProfile,
    NetCostModel,
    bundled_profile,
    class_loads,
    class_samples,
    comm_load,
    dump_model,
    dump_profile,
    fit_cost_model,
    layer_flops,
    load_model,
    load_profile,
    scale_for_feature_size,
)

DEFAULT_MODEL = NetCostModel()


@pytest.mark.parametrize(
    "spec, flops",
    [
        ((1, 1, 1, 1, 1), 1),
        ((3, 1, 2, 2, 1), 36),
        ((3, 208, 32, 64, 1), 797_442_048),
    ],
)
def test_layer_flops_examples(spec, flops):
    assert layer_flops(ConvLayerSpec(*spec)) == flops


@given(
    st.integers(1, 7), st.integers(1, 500), st.integers(1, 2048), st.integers(1, 2048), st.integers(1, 4)
)
def test_layer_flops_scales_multiplicatively(k, m, h_in, h_out, c):
    base = layer_flops(ConvLayerSpec(k, m, h_in, h_out, 1))
    assert layer_flops(ConvLayerSpec(k, m, c * h_in, h_out, 1)) == c * base
    assert layer_flops(ConvLayerSpec(k, c * m, h_in, h_out, 1)) == c * c * base


@pytest.mark.parametrize("bad", [0, -1, 2.5])
def test_conv_layer_rejects_non_positive_integers(bad):
    with pytest.raises(ValueError):
        ConvLayerSpec(3, bad, 1, 1, 1)


def tiny_profile():
    layers = [ConvLayerSpec(1, 1, 1, i, 10 * i) for i in range(1, 9)]
    return HierarchyProfile(layers, feature_layers=(2, 4), inference_starts=(5, 7), inference_block_len=2)


def test_class_loads_sum_prefixes_and_blocks():
    p = tiny_profile()
    assert class_loads(p, 1) == (1 + 2, 5 + 6)
    assert class_loads(p, 2) == (1 + 2 + 3 + 4, 7 + 8)
    assert comm_load(p, 1) == 20
    assert comm_load(p, 2) == 20 + 40


@pytest.mark.parametrize("k", [0, 3, -1])
def test_class_out_of_range(k):
    with pytest.raises(OutOfRangeClass):
        class_loads(tiny_profile(), k)
    with pytest.raises(IndexError):
        comm_load(tiny_profile(), k)


def test_profile_validates_indices():
    layers = [ConvLayerSpec(1, 1, 1, 1, 1)] * 4
    with pytest.raises(ValueError):
        HierarchyProfile(layers, (2, 1), (3, 3), 1)
    with pytest.raises(ValueError):
        HierarchyProfile(layers, (5,), (1,), 1)
    with pytest.raises(ValueError):
        HierarchyProfile(layers, (1,), (4,), 2)


@pytest.mark.parametrize(
    "d, k", [(1.0, 1), (2.8e6, 1), (2.8e6 + 1, 2), (4.4e6, 2), (4.4e6 + 1, 3), (6e6, 3)]
)
def test_scale_for_feature_size(d, k):
    assert scale_for_feature_size(DEFAULT_MODEL, d) == k


def test_scale_for_feature_size_too_large():
    with pytest.raises(FeatureTooLarge):
        scale_for_feature_size(DEFAULT_MODEL, 6e6 + 1)


def line_samples(model=DEFAULT_MODEL, comm=(2.8e6, 4.4e6, 6e6)):
    return [(c, model.L0 + model.c1 * c, model.c2 * c, model.delta_s * c) for c in comm]


def test_fit_recovers_default_model_exactly():
    m = fit_cost_model(line_samples())
    for name in ("L0", "c1", "c2", "delta_s"):
        assert getattr(m, name) == pytest.approx(getattr(DEFAULT_MODEL, name), rel=1e-9)
    assert m.scale_sizes == pytest.approx((2.8e6, 1.6e6, 1.6e6))


@settings(max_examples=60, deadline=None)
@given(
    L0=st.floats(0, 1e11),
    c1=st.floats(1e2, 1e5),
    c2=st.floats(1e2, 1e5),
    ds=st.floats(1e-7, 1e-3),
    comm=st.lists(st.floats(1e5, 1e7), min_size=2, max_size=6, unique=True).filter(
        lambda xs: max(xs) - min(xs) > 1e3
    ),
)
def test_fit_recovers_noiseless_lines(L0, c1, c2, ds, comm):
    truth = NetCostModel(L0=L0, c1=c1, c2=c2, delta_s=ds)
    m = fit_cost_model(line_samples(truth, comm))
    assert m.c1 == pytest.approx(c1, rel=1e-9)
    assert m.L0 == pytest.approx(L0, rel=1e-9, abs=1e-9 * c1 * max(comm))
    assert m.c2 == pytest.approx(c2, rel=1e-9)
    assert m.delta_s == pytest.approx(ds, rel=1e-9)


def test_fit_residuals_orthogonal_to_regressors(rng):
    comm = np.array([1e6, 2.5e6, 3e6, 4.4e6, 6e6])
    fn = 1e10 + 1.2e4 * comm + rng.normal(0, 1e9, comm.size)
    inf = 5e3 * comm + rng.normal(0, 1e8, comm.size)
    q = 1e-5 * comm + rng.normal(0, 1.0, comm.size)
    m = fit_cost_model(np.column_stack([comm, fn, inf, q]))
    r_fn = fn - (m.L0 + m.c1 * comm)
    assert abs(r_fn.sum()) <= 1e-6 * np.abs(fn).sum()
    assert abs(r_fn @ comm) <= 1e-6 * np.abs(fn) @ comm
    r_in = inf - m.c2 * comm
    assert abs(r_in @ comm) <= 1e-9 * np.abs(inf) @ comm


@pytest.mark.parametrize("samples", [[], [(1.0, 2.0, 3.0, 4.0)], [(1.0, 2, 3, 4), (1.0, 5, 6, 7)]])
def test_fit_degenerate(samples):
    with pytest.raises(DegenerateSamples):
        fit_cost_model(samples)


def test_bundled_profile_matches_default_model():
    p = bundled_profile()
    assert len(p.layers) == 106
    assert p.feature_layers == (37, 62, 75)
    m = fit_cost_model(class_samples(p))
    for name in ("L0", "c1", "c2", "delta_s"):
        assert getattr(m, name) == pytest.approx(getattr(DEFAULT_MODEL, name), rel=1e-9)


def test_profile_and_model_round_trip(tmp_path):
    p = bundled_profile()
    dump_profile(p, tmp_path / "p.json")
    assert load_profile(tmp_path / "p.json") == p
    dump_model(DEFAULT_MODEL, tmp_path / "m.json")
    assert load_model(tmp_path / "m.json") == DEFAULT_MODEL
    assert json.loads((tmp_path / "m.json").read_text())["c2"] == DEFAULT_MODEL.c2
