import numpy as np
import pytest

from errors import DegenerateEigenvaluesError, ValidationError
from gradcheck import check_transform_case
from gradients import (
    backward_layer_input,
    backward_whitening,
    cholesky_mask,
    eigengap_matrix,
)
from transforms import TransformKind, WhiteningSpec, center, grouped_whitening, whitening_matrix

ALL_KINDS = list(TransformKind)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_zero_upstream_gives_zero(kind, rng, spd):
    _, cache = whitening_matrix(spd(rng, 4), kind)
    assert np.array_equal(backward_whitening(np.zeros((4, 4)), cache), np.zeros((4, 4)))


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_scalar_case_matches_calculus(kind):
    s = 4.0
    _, cache = whitening_matrix([[s]], kind, itn_iterations=1)
    d_sigma = backward_whitening(np.ones((1, 1)), cache)
    assert d_sigma[0, 0] == pytest.approx(-0.5 * s ** -1.5)


def test_pca_diagonal_case():
    _, cache = whitening_matrix(np.diag([4.0, 1.0]), TransformKind.PCA)
    dw = np.zeros((2, 2))
    dw[0, 0] = 1.0
    d_sigma = backward_whitening(dw, cache)
    assert d_sigma[0, 0] == pytest.approx(-0.0625)
    assert np.allclose(d_sigma.ravel()[1:], 0.0)


@pytest.mark.parametrize(
    "spec",
    [
        WhiteningSpec(kind="bn"),
        WhiteningSpec(kind="pca"),
        WhiteningSpec(kind="zca"),
        WhiteningSpec(kind="cd"),
        WhiteningSpec(kind="itn", itn_iterations=1),
        WhiteningSpec(kind="itn", itn_iterations=3),
        WhiteningSpec(kind="itn", itn_iterations=5),
    ],
    ids=lambda spec: spec.label,
)
@pytest.mark.parametrize("dim", [2, 3, 5])
def test_matches_finite_differences(spec, dim, rng, spd):
    for _ in range(3):
        error = check_transform_case(spec, spd(rng, dim, low=1.0, high=4.0), rng.standard_normal((dim, dim)))
        assert error < 1e-5


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_linearity(kind, rng, spd):
    _, cache = whitening_matrix(spd(rng, 4), kind)
    dw1, dw2 = rng.standard_normal((2, 4, 4))
    combined = backward_whitening(2.0 * dw1 - 0.5 * dw2, cache)
    separate = 2.0 * backward_whitening(dw1, cache) - 0.5 * backward_whitening(dw2, cache)
    assert np.allclose(combined, separate, atol=1e-10)


def test_degenerate_eigenvalues_raise():
    _, cache = whitening_matrix(3.0 * np.eye(3), TransformKind.ZCA)
    with pytest.raises(DegenerateEigenvaluesError) as info:
        backward_whitening(np.ones((3, 3)), cache)
    assert info.value.pair == (0, 1)
    assert info.value.gap == 0.0


def test_clamped_eigengap_is_finite():
    k = eigengap_matrix(np.array([2.0, 2.0, 1.0]), clamp=True)
    assert np.all(np.isfinite(k))
    assert np.allclose(k, -k.T)
    assert np.all(np.diag(k) == 0.0)


def test_eigengap_matrix_values():
    k = eigengap_matrix(np.array([3.0, 1.0]))
    assert np.allclose(k, [[0.0, 0.5], [-0.5, 0.0]])


def test_cholesky_mask():
    assert np.array_equal(cholesky_mask(3), [[0.5, 0, 0], [1, 0.5, 0], [1, 1, 0.5]])


def _layer_backward(x, spec, dxhat):
    x_centered, _ = center(x)
    result = grouped_whitening(x_centered, spec)
    return backward_layer_input(dxhat, result.caches, result.ws, x_centered, x.shape[1])


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("group", [3, 6])
def test_layer_input_gradient_properties(kind, group, rng):
    spec = WhiteningSpec(kind=kind, group_size=group)
    x = rng.standard_normal((6, 24))
    dxhat = rng.standard_normal((6, 24))
    dx = _layer_backward(x, spec, dxhat)
    assert np.allclose(dx.sum(axis=1), 0.0, atol=1e-10)
    shifted = _layer_backward(x + rng.standard_normal((6, 1)), spec, dxhat)
    assert np.allclose(shifted, dx, atol=1e-9)
    assert np.array_equal(_layer_backward(x, spec, np.zeros((6, 24))), np.zeros((6, 24)))


def test_layer_input_gradient_shape_mismatch(rng):
    x_centered, _ = center(rng.standard_normal((4, 10)))
    result = grouped_whitening(x_centered, WhiteningSpec())
    with pytest.raises(ValidationError, match="does not match"):
        backward_layer_input(np.zeros((4, 9)), result.caches, result.ws, x_centered, 10)
